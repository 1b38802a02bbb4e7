//! Central finite-difference gradient checking, 64-bit only.

use super::conv::gauss;
use super::{
    dropout_backward, dropout_train, maxpool2x2_backward, maxpool2x2_forward,
    softmax_cross_entropy, BatchNorm2d, Conv2d, Linear, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradCheckEntry {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed())
    }

    pub fn push(&mut self, name: &str, max_rel_err: f64, tolerance: f64) {
        self.entries.push(GradCheckEntry {
            name: name.to_string(),
            max_rel_err,
            tolerance,
        });
    }
}

/// Central difference d f / d x[i] for every element of `x`.
pub fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = xs[i];
        xs[i] = orig + eps;
        let fp = f(&xs);
        xs[i] = orig - eps;
        let fm = f(&xs);
        xs[i] = orig;
        g[i] = (fp - fm) / (2.0 * eps);
    }
    g
}

/// Worst relative error between analytic and numeric gradients.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

fn rand_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| gauss(rng)).collect())
}

/// loss = sum(y .* r) so that dL/dy = r.
fn weighted_sum(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
}

pub fn check_linear(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layer = Linear::init_random(7, 4, &mut rng);
    let x = rand_tensor(&[3, 7], &mut rng);
    let r = rand_tensor(&[3, 4], &mut rng);
    let (gx, gw, gb) = layer.backward(&x, &r).unwrap();

    let fx = |v: &[f64]| {
        let xt = Tensor::from_vec(&x.shape, v.to_vec());
        weighted_sum(&layer.forward(&xt).unwrap(), &r)
    };
    let fw = |v: &[f64]| {
        let mut l = layer.clone();
        l.weight.data = v.to_vec();
        weighted_sum(&l.forward(&x).unwrap(), &r)
    };
    let fb = |v: &[f64]| {
        let mut l = layer.clone();
        l.bias.data = v.to_vec();
        weighted_sum(&l.forward(&x).unwrap(), &r)
    };
    let e1 = max_rel_err(&gx.data, &central_diff(fx, &x.data, FD_EPS));
    let e2 = max_rel_err(&gw.data, &central_diff(fw, &layer.weight.data, FD_EPS));
    let e3 = max_rel_err(&gb.data, &central_diff(fb, &layer.bias.data, FD_EPS));
    e1.max(e2).max(e3)
}

pub fn check_conv(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layer = Conv2d::init_random(4, 3, &mut rng);
    let x = rand_tensor(&[2, 3, 5, 5], &mut rng);
    let r = rand_tensor(&[2, 4, 5, 5], &mut rng);
    let (gx, gw, gb) = layer.backward(&x, &r).unwrap();

    let fx = |v: &[f64]| {
        let xt = Tensor::from_vec(&x.shape, v.to_vec());
        weighted_sum(&layer.forward(&xt).unwrap(), &r)
    };
    let fw = |v: &[f64]| {
        let mut l = layer.clone();
        l.weight.data = v.to_vec();
        weighted_sum(&l.forward(&x).unwrap(), &r)
    };
    let fb = |v: &[f64]| {
        let mut l = layer.clone();
        l.bias.data = v.to_vec();
        weighted_sum(&l.forward(&x).unwrap(), &r)
    };
    let e1 = max_rel_err(&gx.data, &central_diff(fx, &x.data, FD_EPS));
    let e2 = max_rel_err(&gw.data, &central_diff(fw, &layer.weight.data, FD_EPS));
    let e3 = max_rel_err(&gb.data, &central_diff(fb, &layer.bias.data, FD_EPS));
    e1.max(e2).max(e3)
}

pub fn check_batchnorm(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layer = BatchNorm2d::<f64>::new(3);
    for g in layer.gamma.data.iter_mut() {
        *g = 1.0 + 0.3 * gauss(&mut rng);
    }
    for b in layer.beta.data.iter_mut() {
        *b = 0.3 * gauss(&mut rng);
    }
    let x = rand_tensor(&[4, 3, 4, 4], &mut rng);
    let r = rand_tensor(&[4, 3, 4, 4], &mut rng);
    let (_, cache) = layer.clone().forward_train(&x).unwrap();
    let (gx, ggamma, gbeta) = layer.backward(&cache, &r).unwrap();

    let fx = |v: &[f64]| {
        let xt = Tensor::from_vec(&x.shape, v.to_vec());
        weighted_sum(&layer.clone().forward_train(&xt).unwrap().0, &r)
    };
    let fg = |v: &[f64]| {
        let mut l = layer.clone();
        l.gamma.data = v.to_vec();
        weighted_sum(&l.forward_train(&x).unwrap().0, &r)
    };
    let fb = |v: &[f64]| {
        let mut l = layer.clone();
        l.beta.data = v.to_vec();
        weighted_sum(&l.forward_train(&x).unwrap().0, &r)
    };
    let e1 = max_rel_err(&gx.data, &central_diff(fx, &x.data, FD_EPS));
    let e2 = max_rel_err(&ggamma.data, &central_diff(fg, &layer.gamma.data, FD_EPS));
    let e3 = max_rel_err(&gbeta.data, &central_diff(fb, &layer.beta.data, FD_EPS));
    e1.max(e2).max(e3)
}

pub fn check_maxpool(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = rand_tensor(&[2, 2, 4, 4], &mut rng);
    let r = rand_tensor(&[2, 2, 2, 2], &mut rng);
    let (_, argmax) = maxpool2x2_forward(&x).unwrap();
    let gx = maxpool2x2_backward(&x.shape, &argmax, &r).unwrap();
    let fx = |v: &[f64]| {
        let xt = Tensor::from_vec(&x.shape, v.to_vec());
        weighted_sum(&maxpool2x2_forward(&xt).unwrap().0, &r)
    };
    max_rel_err(&gx.data, &central_diff(fx, &x.data, FD_EPS))
}

pub fn check_softmax_xent(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits = rand_tensor(&[8, 2], &mut rng);
    let labels: Vec<u8> = (0..8).map(|_| rng.random_range(0..2u8)).collect();
    let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
    let f = |v: &[f64]| {
        let lt = Tensor::from_vec(&logits.shape, v.to_vec());
        softmax_cross_entropy(&lt, &labels).unwrap().0
    };
    max_rel_err(&grad.data, &central_diff(f, &logits.data, FD_EPS))
}

pub fn check_dropout(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = rand_tensor(&[6, 6], &mut rng);
    let r = rand_tensor(&[6, 6], &mut rng);
    let (_, mask) = dropout_train(&x, 0.3, &mut rng);
    let gx = dropout_backward(&mask, &r);
    let fx = |v: &[f64]| {
        v.iter()
            .zip(&mask.data)
            .zip(&r.data)
            .map(|((xv, mv), rv)| xv * mv * rv)
            .sum()
    };
    max_rel_err(&gx.data, &central_diff(fx, &x.data, FD_EPS))
}

/// Runs every layer check over `n_seeds` seeds, recording the worst error.
pub fn run_layer_suite(n_seeds: u64) -> GradCheckReport {
    let mut report = GradCheckReport::default();
    let worst = |f: fn(u64) -> f64| (0..n_seeds).map(f).fold(0.0, f64::max);
    report.push("linear", worst(check_linear), 1e-5);
    report.push("conv2d", worst(check_conv), 1e-5);
    report.push("maxpool2x2", worst(check_maxpool), 1e-5);
    report.push("batchnorm2d", worst(check_batchnorm), 1e-4);
    report.push("softmax_xent", worst(check_softmax_xent), 1e-5);
    report.push("dropout", worst(check_dropout), 1e-5);
    report
}
