use super::{Scalar, Tensor, TensorError};

/// Classic momentum SGD: v <- mu*v + g (+ wd*p), p <- p - lr*v.
#[derive(Debug, Clone)]
pub struct SgdState<F> {
    pub velocity: Vec<Tensor<F>>,
    pub lr: F,
    pub momentum: F,
    pub weight_decay: F,
}

impl<F: Scalar> SgdState<F> {
    pub fn new(param_shapes: &[Vec<usize>], lr: F, momentum: F, weight_decay: F) -> Self {
        SgdState {
            velocity: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            lr,
            momentum,
            weight_decay,
        }
    }

    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<F>],
        grads: &[Tensor<F>],
    ) -> Result<(), TensorError> {
        if params.len() != self.velocity.len() || grads.len() != params.len() {
            return Err(TensorError::ShapeError(
                "sgd step: parameter/gradient/velocity count mismatch".into(),
            ));
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            if p.shape != g.shape || p.shape != v.shape {
                return Err(TensorError::ShapeError(format!(
                    "sgd step: shape mismatch {:?} vs {:?}",
                    p.shape, g.shape
                )));
            }
            for i in 0..p.data.len() {
                let mut grad = g.data[i];
                if self.weight_decay != F::zero() {
                    grad += self.weight_decay * p.data[i];
                }
                v.data[i] = self.momentum * v.data[i] + grad;
                p.data[i] -= self.lr * v.data[i];
            }
        }
        Ok(())
    }
}

/// Step-decay schedule: lr0 * factor^(epoch / step_epochs).
pub fn scheduled_lr(lr0: f64, factor: f64, step_epochs: usize, epoch: usize) -> f64 {
    lr0 * factor.powi((epoch / step_epochs) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_momentum_is_plain_sgd() {
        let mut p = Tensor::from_vec(&[1], vec![1.0f64]);
        let g = Tensor::from_vec(&[1], vec![0.5]);
        let mut st = SgdState::new(&[vec![1]], 0.1, 0.0, 0.0);
        st.step(&mut [&mut p], std::slice::from_ref(&g)).unwrap();
        assert!((p.data[0] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn momentum_accumulates() {
        // g=1 constant, lr=0.1, mu=0.9, p0=0: p1=-0.1, p2=-0.29
        let mut p = Tensor::from_vec(&[1], vec![0.0f64]);
        let g = Tensor::from_vec(&[1], vec![1.0]);
        let mut st = SgdState::new(&[vec![1]], 0.1, 0.9, 0.0);
        st.step(&mut [&mut p], std::slice::from_ref(&g)).unwrap();
        assert!((p.data[0] + 0.1).abs() < 1e-12);
        st.step(&mut [&mut p], std::slice::from_ref(&g)).unwrap();
        assert!((p.data[0] + 0.29).abs() < 1e-12);
    }

    #[test]
    fn lr_schedule_drops_by_ten_every_eight_epochs() {
        assert_eq!(scheduled_lr(0.01, 0.1, 8, 0), 0.01);
        assert!((scheduled_lr(0.01, 0.1, 8, 8) - 0.001).abs() < 1e-15);
        assert!((scheduled_lr(0.01, 0.1, 8, 16) - 0.0001).abs() < 1e-15);
    }
}
