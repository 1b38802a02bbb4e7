use super::{Scalar, Tensor, TensorError};

/// Mean-over-batch softmax cross entropy with log-sum-exp stabilization.
/// Returns the scalar loss and the gradient w.r.t. the logits,
/// (softmax - onehot) / N.
pub fn softmax_cross_entropy<F: Scalar>(
    logits: &Tensor<F>,
    labels: &[u8],
) -> Result<(F, Tensor<F>), TensorError> {
    if logits.shape.len() != 2 || logits.shape[0] != labels.len() {
        return Err(TensorError::ShapeError(format!(
            "softmax_cross_entropy: logits {:?} vs {} labels",
            logits.shape,
            labels.len()
        )));
    }
    let (n, k) = (logits.shape[0], logits.shape[1]);
    if labels.iter().any(|&l| (l as usize) >= k) {
        return Err(TensorError::ShapeError("label out of class range".into()));
    }
    let inv_n = F::one() / F::from_f64(n as f64);
    let mut loss = F::zero();
    let mut grad = Tensor::zeros(&logits.shape);
    for ni in 0..n {
        let row = &logits.data[ni * k..(ni + 1) * k];
        let max = row.iter().cloned().fold(F::neg_infinity(), F::max);
        let mut denom = F::zero();
        for &v in row {
            denom += (v - max).exp();
        }
        let log_denom = denom.ln();
        let target = labels[ni] as usize;
        loss += (log_denom - (row[target] - max)) * inv_n;
        for ki in 0..k {
            let p = (row[ki] - max).exp() / denom;
            let onehot = if ki == target { F::one() } else { F::zero() };
            grad.data[ni * k + ki] = (p - onehot) * inv_n;
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln2() {
        let logits = Tensor::from_vec(&[3, 2], vec![0.3; 6]);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 1, 0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn saturated_correct_class_has_tiny_loss() {
        let logits = Tensor::from_vec(&[1, 2], vec![30.0, 0.0]);
        let (loss, _) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!(loss < 1e-9, "loss {loss}");
    }

    #[test]
    fn grad_rows_sum_to_zero() {
        let logits = Tensor::from_vec(&[2, 2], vec![0.2, -1.0, 3.0, 0.5]);
        let (_, g) = softmax_cross_entropy(&logits, &[1, 0]).unwrap();
        for ni in 0..2 {
            let s: f64 = g.data[ni * 2..ni * 2 + 2].iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }
}
