//! Mini-batch SGD training loop with step-decay learning rate and
//! best-validation-AUC model selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::roc_auc;
use crate::tensornet::{scheduled_lr, Scalar, SgdState, Tensor};

use super::network::Network;
use super::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr0: f64,
    pub lr_step: usize,
    pub lr_factor: f64,
    pub epochs: usize,
    pub seed: u64,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            momentum: 0.9,
            weight_decay: 0.0,
            lr0: 0.01,
            lr_step: 8,
            lr_factor: 0.1,
            epochs: 100,
            seed: 0,
            val_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("batch_size", self.batch_size as f64),
            ("lr0", self.lr0),
            ("lr_step", self.lr_step as f64),
            ("lr_factor", self.lr_factor),
            ("epochs", self.epochs as f64),
        ] {
            if !(v > 0.0) {
                return Err(ModelError::Invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Samples ready for a network: patch tensor (N,1,48,48) and/or a feature
/// matrix (N,D), plus binary labels.
#[derive(Debug, Clone)]
pub struct Dataset<F> {
    pub images: Option<Tensor<F>>,
    pub features: Option<Tensor<F>>,
    pub labels: Vec<u8>,
}

impl<F: Scalar> Dataset<F> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.len();
        if n == 0 {
            return Err(ModelError::EmptyDataset("no samples".into()));
        }
        if let Some(img) = &self.images {
            if img.shape.len() != 4 || img.dim(0) != n {
                return Err(ModelError::Invalid(format!(
                    "image tensor {:?} does not match {n} labels",
                    img.shape
                )));
            }
        }
        if let Some(f) = &self.features {
            if f.shape.len() != 2 || f.dim(0) != n {
                return Err(ModelError::Invalid(format!(
                    "feature matrix {:?} does not match {n} labels",
                    f.shape
                )));
            }
        }
        Ok(())
    }

    pub fn images_checked(&self) -> Result<&Tensor<F>, ModelError> {
        self.images
            .as_ref()
            .ok_or_else(|| ModelError::Invalid("model needs image patches".into()))
    }

    pub fn features_checked(&self, dim: usize) -> Result<&Tensor<F>, ModelError> {
        let f = self
            .features
            .as_ref()
            .ok_or_else(|| ModelError::Invalid("model needs a feature matrix".into()))?;
        if f.dim(1) != dim {
            return Err(ModelError::Invalid(format!(
                "feature matrix has {} columns, model expects {dim}",
                f.dim(1)
            )));
        }
        Ok(f)
    }

    pub fn gather(&self, idx: &[usize]) -> Dataset<F> {
        let gather_rows = |t: &Tensor<F>| {
            let row: usize = t.shape[1..].iter().product();
            let mut shape = t.shape.clone();
            shape[0] = idx.len();
            let mut out = Tensor::zeros(&shape);
            for (o, &i) in idx.iter().enumerate() {
                out.data[o * row..(o + 1) * row].copy_from_slice(&t.data[i * row..(i + 1) * row]);
            }
            out
        };
        Dataset {
            images: self.images.as_ref().map(gather_rows),
            features: self.features.as_ref().map(gather_rows),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    /// Snapshot with the highest validation AUC (earliest epoch on ties).
    pub best: Network<F>,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub history: Vec<EpochStats>,
}

pub fn train<F: Scalar>(
    mut net: Network<F>,
    train_set: &Dataset<F>,
    val_set: &Dataset<F>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>, ModelError> {
    cfg.validate()?;
    train_set.validate()?;
    val_set.validate()?;
    if !train_set.labels.iter().any(|&l| l == 0) || !train_set.labels.iter().any(|&l| l == 1) {
        return Err(ModelError::DegenerateLabels(
            "training split needs both classes".into(),
        ));
    }

    let mut opt = SgdState::new(
        &net.param_shapes(),
        F::from_f64(cfg.lr0),
        F::from_f64(cfg.momentum),
        F::from_f64(cfg.weight_decay),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Network<F>)> = None;

    for epoch in 0..cfg.epochs {
        let lr = scheduled_lr(cfg.lr0, cfg.lr_factor, cfg.lr_step, epoch);
        opt.lr = F::from_f64(lr);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            // batchnorm needs at least two samples for batch statistics
            if chunk.len() < 2 && net.needs_images() {
                continue;
            }
            let batch = train_set.gather(chunk);
            let (loss, grads) = net.loss_and_grads(&batch, &mut rng)?;
            opt.step(&mut net.params_mut(), &grads)?;
            loss_sum += loss.to_f64();
            n_batches += 1;
        }
        let train_loss = loss_sum / n_batches.max(1) as f64;

        let scores = net.predict_scores(val_set)?;
        let val_auc = roc_auc(&scores, &val_set.labels)
            .map_err(|e| ModelError::DegenerateLabels(e.to_string()))?
            .auc;

        history.push(EpochStats {
            epoch,
            lr,
            train_loss,
            val_auc,
        });
        let improved = match &best {
            None => true,
            Some((_, auc, _)) => val_auc > *auc,
        };
        if improved {
            best = Some((epoch, val_auc, net.clone()));
        }
    }

    let (best_epoch, best_val_auc, best) = best.expect("epochs >= 1");
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_val_auc,
        history,
    })
}

/// Column-wise z-score statistics from a training feature matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &Tensor<f32>) -> Self {
        let (n, d) = (features.dim(0), features.dim(1));
        let mut mean = vec![0.0f64; d];
        for ni in 0..n {
            for di in 0..d {
                mean[di] += features.data[ni * d + di] as f64;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mut var = vec![0.0f64; d];
        for ni in 0..n {
            for di in 0..d {
                let dv = features.data[ni * d + di] as f64 - mean[di];
                var[di] += dv * dv;
            }
        }
        let std = var
            .iter()
            .map(|&v| (v / n as f64).sqrt().max(1e-8))
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, features: &Tensor<f32>) -> Tensor<f32> {
        let (n, d) = (features.dim(0), features.dim(1));
        assert_eq!(d, self.mean.len(), "standardizer dimension mismatch");
        let mut out = features.clone();
        for ni in 0..n {
            for di in 0..d {
                let v = out.data[ni * d + di] as f64;
                out.data[ni * d + di] = ((v - self.mean[di]) / self.std[di]) as f32;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::network::{Arch, JS2_DIM};
    use rand::Rng;

    /// Linearly separable descriptor-like set: class shifts one coordinate.
    fn separable(n: usize, seed: u64) -> Dataset<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Tensor::<f32>::zeros(&[n, JS2_DIM]);
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        for ni in 0..n {
            for di in 0..JS2_DIM {
                x.data[ni * JS2_DIM + di] = rng.random::<f32>() - 0.5;
            }
            x.data[ni * JS2_DIM + 100] += if labels[ni] == 1 { 2.0 } else { -2.0 };
        }
        Dataset {
            images: None,
            features: Some(x),
            labels,
        }
    }

    fn quick_cfg(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_js2net_reaches_high_auc() {
        let tr = separable(128, 1);
        let va = separable(64, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::<f32>::init(Arch::Js2Net, &mut rng);
        let out = train(net, &tr, &va, &quick_cfg(30, 4)).unwrap();
        assert!(out.best_val_auc >= 0.99, "auc {}", out.best_val_auc);
        assert_eq!(out.history.len(), 30);
    }

    #[test]
    fn history_is_deterministic_and_schedule_visible() {
        let tr = separable(96, 5);
        let va = separable(48, 6);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let net = Network::<f32>::init(Arch::Js2Net, &mut rng);
            train(net, &tr, &va, &quick_cfg(17, 8)).unwrap()
        };
        let a = run();
        let b = run();
        for (ea, eb) in a.history.iter().zip(&b.history) {
            assert_eq!(ea.train_loss.to_bits(), eb.train_loss.to_bits());
            assert_eq!(ea.val_auc.to_bits(), eb.val_auc.to_bits());
        }
        assert_eq!(a.history[0].lr, 0.01);
        assert!((a.history[8].lr - 1e-3).abs() < 1e-15);
        assert!((a.history[16].lr - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn best_epoch_never_below_first_epoch() {
        for seed in 0..5 {
            let tr = separable(96, 100 + seed);
            let va = separable(48, 200 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Network::<f32>::init(Arch::Js2Net, &mut rng);
            let out = train(net, &tr, &va, &quick_cfg(10, seed)).unwrap();
            assert!(out.best_val_auc >= out.history[0].val_auc);
        }
    }

    #[test]
    fn full_batch_loss_decreases_early() {
        let mut ok = 0;
        for seed in 0..20 {
            let tr = separable(64, 300 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = Network::<f32>::init(Arch::Js2Net, &mut rng);
            // dropout off so the full-batch loss sequence is noise-free
            if let Network::Js2Net(m) = &mut net {
                m.head.dropout = 0.0;
            }
            let mut opt = SgdState::new(&net.param_shapes(), 0.01f32, 0.0, 0.0);
            let mut losses = Vec::new();
            for _ in 0..5 {
                let (loss, grads) = net.loss_and_grads(&tr, &mut rng).unwrap();
                losses.push(loss);
                opt.step(&mut net.params_mut(), &grads).unwrap();
            }
            if losses.windows(2).all(|w| w[1] < w[0]) {
                ok += 1;
            }
        }
        assert!(ok >= 18, "loss decreased in only {ok}/20 seeds");
    }

    #[test]
    fn rejects_single_class_training_set() {
        let mut tr = separable(32, 9);
        tr.labels.iter_mut().for_each(|l| *l = 1);
        let va = separable(16, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Network::<f32>::init(Arch::Js2Net, &mut rng);
        assert!(matches!(
            train(net, &tr, &va, &quick_cfg(2, 12)),
            Err(ModelError::DegenerateLabels(_))
        ));
    }

    #[test]
    fn rejects_empty_dataset() {
        let tr = separable(32, 13);
        let empty = Dataset::<f32> {
            images: None,
            features: None,
            labels: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let net = Network::<f32>::init(Arch::Js2Net, &mut rng);
        assert!(matches!(
            train(net, &tr, &empty, &quick_cfg(2, 15)),
            Err(ModelError::EmptyDataset(_))
        ));
    }

    #[test]
    fn standardizer_zero_mean_unit_std() {
        let tr = separable(200, 16);
        let x = tr.features.as_ref().unwrap();
        let st = Standardizer::fit(x);
        let z = st.apply(x);
        let (n, d) = (z.dim(0), z.dim(1));
        for di in [0usize, 100, 220] {
            let mean: f64 = (0..n).map(|ni| z.data[ni * d + di] as f64).sum::<f64>() / n as f64;
            let var: f64 =
                (0..n).map(|ni| (z.data[ni * d + di] as f64 - mean).powi(2)).sum::<f64>()
                    / n as f64;
            assert!(mean.abs() < 1e-5, "col {di} mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "col {di} var {var}");
        }
    }
}
