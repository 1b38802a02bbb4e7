use super::{Scalar, Tensor, TensorError};
use rand::Rng;

/// 3x3 convolution, stride 1, zero padding 1: spatial dims are preserved.
#[derive(Debug, Clone)]
pub struct Conv2d<F> {
    /// (out_ch, in_ch, 3, 3)
    pub weight: Tensor<F>,
    /// (out_ch)
    pub bias: Tensor<F>,
}

const K: usize = 3;

impl<F: Scalar> Conv2d<F> {
    pub fn new(out_ch: usize, in_ch: usize) -> Self {
        Conv2d {
            weight: Tensor::zeros(&[out_ch, in_ch, K, K]),
            bias: Tensor::zeros(&[out_ch]),
        }
    }

    /// Kaiming fan-in initialization, zero bias.
    pub fn init_random(out_ch: usize, in_ch: usize, rng: &mut impl Rng) -> Self {
        let mut c = Self::new(out_ch, in_ch);
        let std = (2.0 / (in_ch * K * K) as f64).sqrt();
        for w in c.weight.data.iter_mut() {
            *w = F::from_f64(gauss(rng) * std);
        }
        c
    }

    pub fn out_ch(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn in_ch(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
        let [n, c, h, w] = nchw(x)?;
        if c != self.in_ch() {
            return Err(TensorError::ShapeError(format!(
                "conv2d expects {} input channels, got {}",
                self.in_ch(),
                c
            )));
        }
        let co = self.out_ch();
        let mut y = Tensor::zeros(&[n, co, h, w]);
        let plane = h * w;
        for ni in 0..n {
            for oc in 0..co {
                let ybase = (ni * co + oc) * plane;
                let b = self.bias.data[oc];
                y.data[ybase..ybase + plane].iter_mut().for_each(|v| *v = b);
                for ic in 0..c {
                    let xbase = (ni * c + ic) * plane;
                    let wbase = (oc * c + ic) * K * K;
                    accumulate_corr(
                        &x.data[xbase..xbase + plane],
                        &self.weight.data[wbase..wbase + K * K],
                        &mut y.data[ybase..ybase + plane],
                        h,
                        w,
                    );
                }
            }
        }
        Ok(y)
    }

    /// Gradients w.r.t. input, weights and bias.
    pub fn backward(
        &self,
        x: &Tensor<F>,
        gy: &Tensor<F>,
    ) -> Result<(Tensor<F>, Tensor<F>, Tensor<F>), TensorError> {
        let [n, c, h, w] = nchw(x)?;
        let co = self.out_ch();
        if gy.shape != [n, co, h, w] {
            return Err(TensorError::ShapeError(format!(
                "conv2d backward: gy shape {:?} does not match ({n},{co},{h},{w})",
                gy.shape
            )));
        }
        let plane = h * w;
        let mut gx = Tensor::zeros(&x.shape);
        let mut gw = Tensor::zeros(&self.weight.shape);
        let mut gb = Tensor::zeros(&self.bias.shape);

        for ni in 0..n {
            for oc in 0..co {
                let gybase = (ni * co + oc) * plane;
                let gyp = &gy.data[gybase..gybase + plane];
                let mut s = F::zero();
                for v in gyp {
                    s += *v;
                }
                gb.data[oc] += s;
                for ic in 0..c {
                    let xbase = (ni * c + ic) * plane;
                    let wbase = (oc * c + ic) * K * K;
                    // dL/dw[ky][kx] = sum over valid positions x * gy
                    corr_weight_grad(
                        &x.data[xbase..xbase + plane],
                        gyp,
                        &mut gw.data[wbase..wbase + K * K],
                        h,
                        w,
                    );
                    // dL/dx = full correlation of gy with flipped kernel
                    accumulate_corr_transposed(
                        gyp,
                        &self.weight.data[wbase..wbase + K * K],
                        &mut gx.data[xbase..xbase + plane],
                        h,
                        w,
                    );
                }
            }
        }
        Ok((gx, gw, gb))
    }
}

/// y[oy][ox] += sum_{ky,kx} w[ky][kx] * x[oy+ky-1][ox+kx-1], zero padded.
fn accumulate_corr<F: Scalar>(x: &[F], wk: &[F], y: &mut [F], h: usize, w: usize) {
    for (ky, kx) in kernel_iter() {
        let coef = wk[ky * K + kx];
        if coef == F::zero() {
            continue;
        }
        let (oy0, oy1) = row_range(h, ky);
        let (ox0, ox1) = row_range(w, kx);
        for oy in oy0..oy1 {
            let iy = oy + ky - 1;
            let yrow = &mut y[oy * w + ox0..oy * w + ox1];
            let xrow = &x[iy * w + ox0 + kx - 1..iy * w + ox1 + kx - 1];
            for (yv, xv) in yrow.iter_mut().zip(xrow) {
                *yv += coef * *xv;
            }
        }
    }
}

/// gx[iy][ix] += sum_{ky,kx} w[ky][kx] * gy[iy-ky+1][ix-kx+1]
fn accumulate_corr_transposed<F: Scalar>(gy: &[F], wk: &[F], gx: &mut [F], h: usize, w: usize) {
    for (ky, kx) in kernel_iter() {
        let coef = wk[ky * K + kx];
        if coef == F::zero() {
            continue;
        }
        let (oy0, oy1) = row_range(h, ky);
        let (ox0, ox1) = row_range(w, kx);
        for oy in oy0..oy1 {
            let iy = oy + ky - 1;
            let gxrow = &mut gx[iy * w + ox0 + kx - 1..iy * w + ox1 + kx - 1];
            let gyrow = &gy[oy * w + ox0..oy * w + ox1];
            for (gv, yv) in gxrow.iter_mut().zip(gyrow) {
                *gv += coef * *yv;
            }
        }
    }
}

fn corr_weight_grad<F: Scalar>(x: &[F], gy: &[F], gw: &mut [F], h: usize, w: usize) {
    for (ky, kx) in kernel_iter() {
        let (oy0, oy1) = row_range(h, ky);
        let (ox0, ox1) = row_range(w, kx);
        let mut acc = F::zero();
        for oy in oy0..oy1 {
            let iy = oy + ky - 1;
            let gyrow = &gy[oy * w + ox0..oy * w + ox1];
            let xrow = &x[iy * w + ox0 + kx - 1..iy * w + ox1 + kx - 1];
            for (gv, xv) in gyrow.iter().zip(xrow) {
                acc += *gv * *xv;
            }
        }
        gw[ky * K + kx] += acc;
    }
}

fn kernel_iter() -> impl Iterator<Item = (usize, usize)> {
    (0..K).flat_map(|ky| (0..K).map(move |kx| (ky, kx)))
}

/// Output index range along one axis for kernel offset k (pad 1).
fn row_range(extent: usize, k: usize) -> (usize, usize) {
    let lo = 1usize.saturating_sub(k);
    let hi = (extent + 1 - k).min(extent);
    (lo, hi)
}

pub(crate) fn nchw<F: Scalar>(x: &Tensor<F>) -> Result<[usize; 4], TensorError> {
    if x.shape.len() != 4 {
        return Err(TensorError::ShapeError(format!(
            "expected NCHW tensor, got shape {:?}",
            x.shape
        )));
    }
    Ok([x.shape[0], x.shape[1], x.shape[2], x.shape[3]])
}

/// Standard normal via Box-Muller; keeps the scalar type generic.
pub(crate) fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_kernel_is_identity() {
        let mut c = Conv2d::<f64>::new(1, 1);
        c.weight.data[4] = 1.0; // center tap
        let x = Tensor::from_vec(&[1, 1, 3, 3], (0..9).map(|v| v as f64).collect());
        let y = c.forward(&x).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn preserves_spatial_dims() {
        let c = Conv2d::<f32>::new(32, 1);
        let x = Tensor::zeros(&[2, 1, 48, 48]);
        let y = c.forward(&x).unwrap();
        assert_eq!(y.shape, vec![2, 32, 48, 48]);
    }

    #[test]
    fn channel_mismatch_rejected() {
        let c = Conv2d::<f32>::new(4, 3);
        let x = Tensor::zeros(&[1, 2, 5, 5]);
        assert!(matches!(c.forward(&x), Err(TensorError::ShapeError(_))));
    }
}
