use super::conv::nchw;
use super::{Scalar, Tensor, TensorError};

/// Per-channel batch normalization over NCHW tensors.
#[derive(Debug, Clone)]
pub struct BatchNorm2d<F> {
    pub gamma: Tensor<F>,
    pub beta: Tensor<F>,
    pub running_mean: Tensor<F>,
    pub running_var: Tensor<F>,
    pub momentum: F,
    pub eps: F,
}

/// Saved statistics from a train-mode forward, needed by backward.
#[derive(Debug, Clone)]
pub struct BnCache<F> {
    pub xhat: Tensor<F>,
    pub inv_std: Vec<F>,
}

impl<F: Scalar> BatchNorm2d<F> {
    pub fn new(channels: usize) -> Self {
        let mut gamma = Tensor::zeros(&[channels]);
        gamma.fill(F::one());
        BatchNorm2d {
            gamma,
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: {
                let mut v = Tensor::zeros(&[channels]);
                v.fill(F::one());
                v
            },
            momentum: F::from_f64(0.1),
            eps: F::from_f64(1e-5),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Train-mode forward: normalize by batch statistics (biased variance)
    /// and update running statistics.
    pub fn forward_train(&mut self, x: &Tensor<F>) -> Result<(Tensor<F>, BnCache<F>), TensorError> {
        let [n, c, h, w] = self.check(x)?;
        if n < 2 {
            return Err(TensorError::BatchTooSmall(n));
        }
        let m = F::from_f64((n * h * w) as f64);
        let plane = h * w;
        let mut y = Tensor::zeros(&x.shape);
        let mut xhat = Tensor::zeros(&x.shape);
        let mut inv_std = vec![F::zero(); c];
        for ci in 0..c {
            let mut mean = F::zero();
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                for v in &x.data[base..base + plane] {
                    mean += *v;
                }
            }
            mean /= m;
            let mut var = F::zero();
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                for v in &x.data[base..base + plane] {
                    let d = *v - mean;
                    var += d * d;
                }
            }
            var /= m;
            let istd = F::one() / (var + self.eps).sqrt();
            inv_std[ci] = istd;
            let (g, b) = (self.gamma.data[ci], self.beta.data[ci]);
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                for i in base..base + plane {
                    let xh = (x.data[i] - mean) * istd;
                    xhat.data[i] = xh;
                    y.data[i] = g * xh + b;
                }
            }
            let mom = self.momentum;
            self.running_mean.data[ci] = (F::one() - mom) * self.running_mean.data[ci] + mom * mean;
            self.running_var.data[ci] = (F::one() - mom) * self.running_var.data[ci] + mom * var;
        }
        Ok((y, BnCache { xhat, inv_std }))
    }

    /// Eval-mode forward: deterministic per-channel affine map from the
    /// running statistics.
    pub fn forward_eval(&self, x: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
        let [n, c, h, w] = self.check(x)?;
        let plane = h * w;
        let mut y = Tensor::zeros(&x.shape);
        for ci in 0..c {
            let istd = F::one() / (self.running_var.data[ci] + self.eps).sqrt();
            let scale = self.gamma.data[ci] * istd;
            let shift = self.beta.data[ci] - scale * self.running_mean.data[ci];
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                for i in base..base + plane {
                    y.data[i] = scale * x.data[i] + shift;
                }
            }
        }
        Ok(y)
    }

    /// Exact backward through the batch statistics.
    pub fn backward(
        &self,
        cache: &BnCache<F>,
        gy: &Tensor<F>,
    ) -> Result<(Tensor<F>, Tensor<F>, Tensor<F>), TensorError> {
        let [n, c, h, w] = self.check(gy)?;
        let plane = h * w;
        let m = F::from_f64((n * h * w) as f64);
        let mut gx = Tensor::zeros(&gy.shape);
        let mut ggamma = Tensor::zeros(&[c]);
        let mut gbeta = Tensor::zeros(&[c]);
        for ci in 0..c {
            let mut sum_gy = F::zero();
            let mut sum_gy_xhat = F::zero();
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                for i in base..base + plane {
                    sum_gy += gy.data[i];
                    sum_gy_xhat += gy.data[i] * cache.xhat.data[i];
                }
            }
            ggamma.data[ci] = sum_gy_xhat;
            gbeta.data[ci] = sum_gy;
            let coef = self.gamma.data[ci] * cache.inv_std[ci] / m;
            for ni in 0..n {
                let base = (ni * c + ci) * plane;
                for i in base..base + plane {
                    gx.data[i] =
                        coef * (m * gy.data[i] - sum_gy - cache.xhat.data[i] * sum_gy_xhat);
                }
            }
        }
        Ok((gx, ggamma, gbeta))
    }

    fn check(&self, x: &Tensor<F>) -> Result<[usize; 4], TensorError> {
        let dims = nchw(x)?;
        if dims[1] != self.channels() {
            return Err(TensorError::ShapeError(format!(
                "batchnorm expects {} channels, got {}",
                self.channels(),
                dims[1]
            )));
        }
        Ok(dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_to_zero_mean_unit_var() {
        let mut bn = BatchNorm2d::<f64>::new(2);
        let data: Vec<f64> = (0..2 * 2 * 3 * 3).map(|i| (i as f64) * 0.7 - 3.0).collect();
        let x = Tensor::from_vec(&[2, 2, 3, 3], data);
        let (y, _) = bn.forward_train(&x).unwrap();
        for ci in 0..2 {
            let mut vals = vec![];
            for ni in 0..2 {
                let base = (ni * 2 + ci) * 9;
                vals.extend_from_slice(&y.data[base..base + 9]);
            }
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-6, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-5, "var {var}");
        }
    }

    #[test]
    fn constant_channel_outputs_beta() {
        let mut bn = BatchNorm2d::<f64>::new(1);
        bn.beta.data[0] = 0.25;
        let mut x = Tensor::zeros(&[3, 1, 2, 2]);
        x.fill(7.0);
        let (y, _) = bn.forward_train(&x).unwrap();
        for v in &y.data {
            assert!((v - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn batch_of_one_rejected_in_train() {
        let mut bn = BatchNorm2d::<f32>::new(1);
        let x = Tensor::zeros(&[1, 1, 2, 2]);
        assert_eq!(
            bn.forward_train(&x).unwrap_err(),
            TensorError::BatchTooSmall(1)
        );
    }
}
