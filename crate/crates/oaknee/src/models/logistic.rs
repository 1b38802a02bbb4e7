//! L2-regularized logistic regression fitted by full-batch gradient
//! descent with Armijo backtracking line search. The objective
//! mean cross-entropy + lambda/2 * ||w||^2 (bias unpenalized) is convex,
//! so line-searched descent converges without tuning.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
}

impl LogisticModel {
    pub fn score(&self, features: &[f64]) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    pub fn scores(&self, features: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        features
            .iter()
            .map(|row| {
                if row.len() != self.weights.len() {
                    return Err(ModelError::Invalid(format!(
                        "feature row has {} entries, model expects {}",
                        row.len(),
                        self.weights.len()
                    )));
                }
                Ok(self.score(row))
            })
            .collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn objective(w: &[f64], b: f64, x: &[Vec<f64>], y: &[u8], lambda: f64) -> f64 {
    let n = x.len() as f64;
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z: f64 = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        // cross-entropy: log(1+e^z) - y*z
        loss += log1p_exp(z) - label as f64 * z;
    }
    loss / n + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

fn gradient(w: &[f64], b: f64, x: &[Vec<f64>], y: &[u8], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z: f64 = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        let err = sigmoid(z) - label as f64;
        for (g, xi) in gw.iter_mut().zip(row) {
            *g += err * xi;
        }
        gb += err;
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + lambda * wi;
    }
    (gw, gb / n)
}

pub fn fit_logistic(
    features: &[Vec<f64>],
    labels: &[u8],
    l2_lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LogisticModel, ModelError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(ModelError::EmptyDataset(format!(
            "{} feature rows vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    let d = features[0].len();
    if features.iter().any(|r| r.len() != d) {
        return Err(ModelError::Invalid("ragged feature rows".into()));
    }
    if !labels.iter().any(|&l| l == 0) || !labels.iter().any(|&l| l == 1) {
        return Err(ModelError::DegenerateLabels(
            "both classes required".into(),
        ));
    }
    if l2_lambda < 0.0 {
        return Err(ModelError::Invalid("l2_lambda must be >= 0".into()));
    }

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut obj = objective(&w, b, features, labels, l2_lambda);
    for _ in 0..max_iter {
        let (gw, gb) = gradient(&w, b, features, labels, l2_lambda);
        let inf_norm = gw
            .iter()
            .chain(std::iter::once(&gb))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if inf_norm < tol {
            break;
        }
        // Armijo backtracking along the negative gradient.
        let g_sq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        let mut step = 1.0;
        loop {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let bt = b - step * gb;
            let new_obj = objective(&wt, bt, features, labels, l2_lambda);
            if new_obj <= obj - 1e-4 * step * g_sq || step < 1e-12 {
                w = wt;
                b = bt;
                obj = new_obj;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        l2_lambda,
    })
}
