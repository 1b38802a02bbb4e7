use super::{Scalar, Tensor};
use rand::Rng;

/// Inverted dropout: zero with probability `rate`, scale survivors by
/// 1/(1-rate). Returns the output and the mask (0 or the survivor scale),
/// which is also the exact local gradient.
pub fn dropout_train<F: Scalar>(
    x: &Tensor<F>,
    rate: f64,
    rng: &mut impl Rng,
) -> (Tensor<F>, Tensor<F>) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
    if rate == 0.0 {
        let mut mask = Tensor::zeros(&x.shape);
        mask.fill(F::one());
        return (x.clone(), mask);
    }
    let scale = F::from_f64(1.0 / (1.0 - rate));
    let mut mask = Tensor::zeros(&x.shape);
    for m in mask.data.iter_mut() {
        if rng.random::<f64>() >= rate {
            *m = scale;
        }
    }
    let mut y = x.clone();
    for (yv, mv) in y.data.iter_mut().zip(&mask.data) {
        *yv *= *mv;
    }
    (y, mask)
}

/// Eval mode is the identity.
pub fn dropout_eval<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    x.clone()
}

pub fn dropout_backward<F: Scalar>(mask: &Tensor<F>, gy: &Tensor<F>) -> Tensor<F> {
    let mut gx = gy.clone();
    for (gv, mv) in gx.data.iter_mut().zip(&mask.data) {
        *gv *= *mv;
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rate_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let (y, _) = dropout_train(&x, 0.0, &mut rng);
        assert_eq!(y.data, x.data);
        assert_eq!(dropout_eval(&x).data, x.data);
    }

    #[test]
    fn survivor_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = Tensor::<f64>::zeros(&[100_000]);
        x.fill(1.0);
        let (y, _) = dropout_train(&x, 0.5, &mut rng);
        let survivors = y.data.iter().filter(|v| **v != 0.0).count();
        let frac = survivors as f64 / y.len() as f64;
        assert!((frac - 0.5).abs() < 0.01, "survivor fraction {frac}");
        let mean_scale: f64 = y.data.iter().filter(|v| **v != 0.0).sum::<f64>() / survivors as f64;
        assert!((mean_scale - 2.0).abs() < 0.05, "survivor scale {mean_scale}");
    }
}
