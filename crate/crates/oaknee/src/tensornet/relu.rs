use super::{Scalar, Tensor};

pub fn relu_forward<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    x.map(|v| if v > F::zero() { v } else { F::zero() })
}

/// gx = gy where x > 0, else 0 (subgradient 0 at the kink).
pub fn relu_backward<F: Scalar>(x: &Tensor<F>, gy: &Tensor<F>) -> Tensor<F> {
    let data = x
        .data
        .iter()
        .zip(&gy.data)
        .map(|(&xv, &gv)| if xv > F::zero() { gv } else { F::zero() })
        .collect();
    Tensor {
        shape: x.shape.clone(),
        data,
    }
}
