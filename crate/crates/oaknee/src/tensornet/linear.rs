use super::conv::gauss;
use super::{Scalar, Tensor, TensorError};
use rand::Rng;

/// Fully connected layer: y = xW + b with W of shape (in, out).
#[derive(Debug, Clone)]
pub struct Linear<F> {
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

impl<F: Scalar> Linear<F> {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Linear {
            weight: Tensor::zeros(&[in_dim, out_dim]),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn init_random(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let mut l = Self::new(in_dim, out_dim);
        let std = (2.0 / in_dim as f64).sqrt();
        for w in l.weight.data.iter_mut() {
            *w = F::from_f64(gauss(rng) * std);
        }
        l
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
        let (n, d) = self.check(x)?;
        let out = self.out_dim();
        let mut y = Tensor::zeros(&[n, out]);
        for ni in 0..n {
            let yrow = &mut y.data[ni * out..(ni + 1) * out];
            yrow.copy_from_slice(&self.bias.data);
            for i in 0..d {
                let a = x.data[ni * d + i];
                if a == F::zero() {
                    continue;
                }
                let wrow = &self.weight.data[i * out..(i + 1) * out];
                for (yv, wv) in yrow.iter_mut().zip(wrow) {
                    *yv += a * *wv;
                }
            }
        }
        Ok(y)
    }

    pub fn backward(
        &self,
        x: &Tensor<F>,
        gy: &Tensor<F>,
    ) -> Result<(Tensor<F>, Tensor<F>, Tensor<F>), TensorError> {
        let (n, d) = self.check(x)?;
        let out = self.out_dim();
        if gy.shape != [n, out] {
            return Err(TensorError::ShapeError(format!(
                "linear backward: gy shape {:?} does not match ({n},{out})",
                gy.shape
            )));
        }
        let mut gx = Tensor::zeros(&[n, d]);
        let mut gw = Tensor::zeros(&self.weight.shape);
        let mut gb = Tensor::zeros(&self.bias.shape);
        for ni in 0..n {
            let gyrow = &gy.data[ni * out..(ni + 1) * out];
            for (gbv, gv) in gb.data.iter_mut().zip(gyrow) {
                *gbv += *gv;
            }
            for i in 0..d {
                let wrow = &self.weight.data[i * out..(i + 1) * out];
                let mut acc = F::zero();
                for (wv, gv) in wrow.iter().zip(gyrow) {
                    acc += *wv * *gv;
                }
                gx.data[ni * d + i] = acc;
                let a = x.data[ni * d + i];
                if a != F::zero() {
                    let gwrow = &mut gw.data[i * out..(i + 1) * out];
                    for (gwv, gv) in gwrow.iter_mut().zip(gyrow) {
                        *gwv += a * *gv;
                    }
                }
            }
        }
        Ok((gx, gw, gb))
    }

    fn check(&self, x: &Tensor<F>) -> Result<(usize, usize), TensorError> {
        if x.shape.len() != 2 || x.shape[1] != self.in_dim() {
            return Err(TensorError::ShapeError(format!(
                "linear expects (N,{}), got {:?}",
                self.in_dim(),
                x.shape
            )));
        }
        Ok((x.shape[0], x.shape[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_pass_through() {
        let mut l = Linear::<f64>::new(3, 3);
        for i in 0..3 {
            l.weight.data[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0]);
        let y = l.forward(&x).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn zero_weights_broadcast_bias() {
        let mut l = Linear::<f64>::new(2, 2);
        l.bias.data = vec![0.5, -1.5];
        let x = Tensor::from_vec(&[2, 2], vec![3.0, 4.0, 5.0, 6.0]);
        let y = l.forward(&x).unwrap();
        assert_eq!(y.data, vec![0.5, -1.5, 0.5, -1.5]);
    }
}
