use super::conv::nchw;
use super::{Scalar, Tensor, TensorError};

/// Non-overlapping 2x2 max pooling. Returns the pooled tensor and the flat
/// input index of each block's argmax (row-major first on ties).
pub fn maxpool2x2_forward<F: Scalar>(
    x: &Tensor<F>,
) -> Result<(Tensor<F>, Vec<u32>), TensorError> {
    let [n, c, h, w] = nchw(x)?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(TensorError::ShapeError(format!(
            "maxpool2x2 requires even spatial dims, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0u32; y.len()];
    for ni in 0..n {
        for ci in 0..c {
            let xbase = (ni * c + ci) * h * w;
            let ybase = (ni * c + ci) * oh * ow;
            for oy in 0..oh {
                for ox in 0..ow {
                    let i00 = xbase + (2 * oy) * w + 2 * ox;
                    let candidates = [i00, i00 + 1, i00 + w, i00 + w + 1];
                    let mut best = candidates[0];
                    let mut best_v = x.data[best];
                    for &i in &candidates[1..] {
                        if x.data[i] > best_v {
                            best = i;
                            best_v = x.data[i];
                        }
                    }
                    y.data[ybase + oy * ow + ox] = best_v;
                    argmax[ybase + oy * ow + ox] = best as u32;
                }
            }
        }
    }
    Ok((y, argmax))
}

/// Routes each output gradient to its block's argmax element.
pub fn maxpool2x2_backward<F: Scalar>(
    input_shape: &[usize],
    argmax: &[u32],
    gy: &Tensor<F>,
) -> Result<Tensor<F>, TensorError> {
    if gy.len() != argmax.len() {
        return Err(TensorError::ShapeError(
            "maxpool backward: argmax/gy length mismatch".into(),
        ));
    }
    let mut gx = Tensor::zeros(input_shape);
    for (i, &src) in argmax.iter().enumerate() {
        gx.data[src as usize] += gy.data[i];
    }
    Ok(gx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn takes_block_max() {
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let (y, _) = maxpool2x2_forward(&x).unwrap();
        assert_eq!(y.data, vec![4.0]);
    }

    #[test]
    fn halves_dims_chained() {
        let mut x = Tensor::<f32>::zeros(&[1, 1, 48, 48]);
        for _ in 0..3 {
            x = maxpool2x2_forward(&x).unwrap().0;
        }
        assert_eq!(x.shape, vec![1, 1, 6, 6]);
    }

    #[test]
    fn tie_gradient_goes_to_first() {
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![5.0; 4]);
        let (_, argmax) = maxpool2x2_forward(&x).unwrap();
        let gy = Tensor::from_vec(&[1, 1, 1, 1], vec![1.0]);
        let gx = maxpool2x2_backward(&[1, 1, 2, 2], &argmax, &gy).unwrap();
        assert_eq!(gx.data, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn odd_dims_rejected() {
        let x = Tensor::<f32>::zeros(&[1, 1, 3, 4]);
        assert!(maxpool2x2_forward(&x).is_err());
    }
}
