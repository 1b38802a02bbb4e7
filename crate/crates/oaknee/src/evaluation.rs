//! ROC/AUC, forest feature importance, descriptor noise injection with a
//! retrain-per-sigma robustness sweep, per-class density statistics, and the
//! CSV/SVG report writers behind the eval-oriented CLI commands.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataio::mix_hash;
use crate::geometry::Js2Descriptor;
use crate::models::{
    fit_logistic, train, Arch, Dataset, ModelError, Network, Standardizer, TrainConfig,
};
use crate::tensornet::Tensor;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// ROC / AUC

#[derive(Debug, Clone)]
pub struct RocResult {
    pub auc: f64,
    /// Threshold sweep over unique scores, descending. thresholds[0] is
    /// +inf (nothing classified positive); one point per unique score after.
    pub thresholds: Vec<f64>,
    pub curve: Vec<(f64, f64)>,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Mann-Whitney AUC with ties counted 0.5, plus the full ROC curve.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocResult, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Invalid(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::Invalid("non-finite score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateLabels(format!(
            "{n_pos} positive and {n_neg} negative samples"
        )));
    }

    // Average ranks (1-based); ties share the mean rank of their run.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j, mean is (i+j+1)/2
        let mean_rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += mean_rank;
            }
        }
        i = j;
    }
    let pairs = (n_pos * n_neg) as f64;
    let auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / pairs;

    // Threshold sweep: walk unique scores from high to low; a sample is
    // called positive when score >= threshold.
    let mut thresholds = vec![f64::INFINITY];
    let mut curve = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = order.len();
    while k > 0 {
        let t = scores[order[k - 1]];
        while k > 0 && scores[order[k - 1]] == t {
            if labels[order[k - 1]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k -= 1;
        }
        thresholds.push(t);
        curve.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }

    Ok(RocResult {
        auc,
        thresholds,
        curve,
        n_pos,
        n_neg,
    })
}

impl RocResult {
    /// Trapezoid integral of the curve; equals `auc` within 1e-9.
    pub fn trapezoid_auc(&self) -> f64 {
        self.curve
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Forest feature importance

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            min_leaf: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImportanceReport {
    /// Normalized mean Gini impurity decrease per feature; sums to 1.
    pub importance: Vec<f64>,
    /// Feature indices sorted by descending importance.
    pub ranking: Vec<usize>,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

/// Grows one Gini tree on bootstrap indices, accumulating weighted impurity
/// decreases into `imp`. Feature subsets of size sqrt(d) are redrawn per node.
fn grow_tree(
    features: &[Vec<f64>],
    labels: &[u8],
    idx: &mut [usize],
    n_total: usize,
    min_leaf: usize,
    n_sub: usize,
    rng: &mut ChaCha8Rng,
    imp: &mut [f64],
) {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
    let node_gini = gini(pos, n);
    if n < 2 * min_leaf || pos == 0 || pos == n {
        return;
    }
    let d = features[0].len();

    // sample n_sub distinct feature indices
    let mut feats: Vec<usize> = (0..d).collect();
    for k in 0..n_sub {
        let j = k + rng.random_range(0..d - k);
        feats.swap(k, j);
    }

    let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)
    let mut vals: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &f in &feats[..n_sub] {
        vals.clear();
        vals.extend(idx.iter().map(|&i| (features[i][f], labels[i])));
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0usize;
        for s in 0..n - 1 {
            if vals[s].1 == 1 {
                left_pos += 1;
            }
            if vals[s].0 == vals[s + 1].0 {
                continue;
            }
            let nl = s + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let dec = node_gini
                - (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr))
                    / n as f64;
            if best.map_or(true, |(b, _, _)| dec > b) {
                best = Some((dec, f, (vals[s].0 + vals[s + 1].0) / 2.0));
            }
        }
    }
    let Some((dec, feat, thr)) = best else {
        return;
    };
    if dec <= 0.0 {
        return;
    }
    imp[feat] += dec * n as f64 / n_total as f64;

    let split = itertools_partition(idx, |&i| features[i][feat] <= thr);
    let (left, right) = idx.split_at_mut(split);
    grow_tree(features, labels, left, n_total, min_leaf, n_sub, rng, imp);
    grow_tree(features, labels, right, n_total, min_leaf, n_sub, rng, imp);
}

/// In-place stable-enough partition; returns the count satisfying `pred`.
fn itertools_partition<T: Copy>(xs: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut k = 0;
    for i in 0..xs.len() {
        if pred(&xs[i]) {
            xs.swap(k, i);
            k += 1;
        }
    }
    k
}

pub fn forest_importance(
    features: &[Vec<f64>],
    labels: &[u8],
    cfg: &ForestConfig,
) -> Result<ImportanceReport, EvalError> {
    let n = features.len();
    if n < 10 || n != labels.len() {
        return Err(EvalError::Invalid(format!(
            "need >= 10 samples with matching labels, got {n} rows / {} labels",
            labels.len()
        )));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|r| r.len() != d) {
        return Err(EvalError::Invalid("empty or ragged feature rows".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == n {
        return Err(EvalError::DegenerateLabels(
            "both classes required".into(),
        ));
    }
    let n_sub = (d as f64).sqrt().round().max(1.0) as usize;

    let per_tree: Vec<Vec<f64>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_hash(cfg.seed, &[b"tree", &t.to_le_bytes()]));
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut imp = vec![0.0; d];
            grow_tree(
                features,
                labels,
                &mut idx,
                n,
                cfg.min_leaf,
                n_sub,
                &mut rng,
                &mut imp,
            );
            imp
        })
        .collect();

    let mut importance = vec![0.0; d];
    for imp in &per_tree {
        for (a, b) in importance.iter_mut().zip(imp) {
            *a += b;
        }
    }
    let total: f64 = importance.iter().sum();
    if total <= 0.0 {
        return Err(EvalError::Invalid(
            "no informative splits in any tree".into(),
        ));
    }
    for v in &mut importance {
        *v /= total;
    }
    let mut ranking: Vec<usize> = (0..d).collect();
    ranking.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    Ok(ImportanceReport {
        importance,
        ranking,
    })
}

// ---------------------------------------------------------------------------
// Noise injection and robustness sweep

/// Adds i.i.d. N(0, sigma^2) to every entry, clamped at 0 since joint-space
/// distances are non-negative.
pub fn perturb_descriptor(
    js2: &Js2Descriptor,
    sigma_mm: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Js2Descriptor, EvalError> {
    if !(sigma_mm >= 0.0) {
        return Err(EvalError::Invalid(format!("negative sigma {sigma_mm}")));
    }
    if sigma_mm == 0.0 {
        return Ok(js2.clone());
    }
    let normal = Normal::new(0.0, sigma_mm).expect("sigma checked above");
    Ok(Js2Descriptor {
        values: js2
            .values
            .iter()
            .map(|&v| (v + normal.sample(rng)).max(0.0))
            .collect(),
    })
}

#[derive(Debug, Clone)]
pub struct NoiseSweepRow {
    pub sigma_mm: f64,
    pub model_tag: String,
    pub auc: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseSweepTable {
    pub rows: Vec<NoiseSweepRow>,
}

#[derive(Debug, Clone)]
pub struct NoiseSweepConfig {
    pub seed: u64,
    /// Recipe used for the "js2-nn" tag.
    pub train_cfg: TrainConfig,
    /// Ridge strength for the logistic tags.
    pub l2_lambda: f64,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        NoiseSweepConfig {
            seed: 0,
            train_cfg: TrainConfig::default(),
            l2_lambda: 1e-3,
        }
    }
}

fn perturb_matrix(rows: &[Vec<f64>], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if sigma == 0.0 {
        return rows.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    rows.iter()
        .map(|r| r.iter().map(|&v| (v + normal.sample(rng)).max(0.0)).collect())
        .collect()
}

fn feature_tensor(rows: &[Vec<f64>]) -> Tensor<f32> {
    let d = rows[0].len();
    Tensor::from_vec(
        &[rows.len(), d],
        rows.iter().flatten().map(|&v| v as f32).collect(),
    )
}

/// Trains one model tag on (possibly noise-perturbed) feature rows and
/// returns the test AUC. Tags: "js2-lr" ridge logistic regression,
/// "js2-nn" the two-layer network.
fn train_and_score(
    tag: &str,
    train_x: &[Vec<f64>],
    train_y: &[u8],
    test_x: &[Vec<f64>],
    test_y: &[u8],
    job_seed: u64,
    cfg: &NoiseSweepConfig,
) -> Result<f64, EvalError> {
    match tag {
        "js2-lr" => {
            let model = fit_logistic(train_x, train_y, cfg.l2_lambda, 300, 1e-7)?;
            let scores = model.scores(test_x)?;
            Ok(roc_auc(&scores, test_y)?.auc)
        }
        "js2-nn" => {
            let d = train_x[0].len();
            if d != crate::models::JS2_DIM {
                return Err(EvalError::Invalid(format!(
                    "js2-nn expects {} features, got {d}",
                    crate::models::JS2_DIM
                )));
            }
            let raw = feature_tensor(train_x);
            let std = Standardizer::fit(&raw);
            // hash-based holdout for best-epoch selection
            let frac = (cfg.train_cfg.val_fraction * 1000.0) as u64;
            let mut tr_idx = Vec::new();
            let mut va_idx = Vec::new();
            for i in 0..train_x.len() {
                if mix_hash(job_seed, &[b"val", &(i as u64).to_le_bytes()]) % 1000 < frac {
                    va_idx.push(i);
                } else {
                    tr_idx.push(i);
                }
            }
            let full = Dataset {
                images: None,
                features: Some(std.apply(&raw)),
                labels: train_y.to_vec(),
            };
            let tr = full.gather(&tr_idx);
            let va = full.gather(&va_idx);
            let mut tc = cfg.train_cfg.clone();
            tc.seed = job_seed;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_hash(job_seed, &[b"init"]));
            let net = Network::<f32>::init(Arch::Js2Net, &mut rng);
            let outcome = train(net, &tr, &va, &tc)?;
            let test = Dataset {
                images: None,
                features: Some(std.apply(&feature_tensor(test_x))),
                labels: test_y.to_vec(),
            };
            let scores = outcome.best.predict_scores(&test)?;
            Ok(roc_auc(&scores, test_y)?.auc)
        }
        other => Err(EvalError::Invalid(format!("unknown model tag '{other}'"))),
    }
}

/// Retrains each model tag at each sigma on freshly perturbed train AND test
/// descriptors. Each (sigma, tag) job owns an RNG stream seeded from
/// hash(seed, sigma, tag), so results are independent of scheduling order.
pub fn noise_sweep(
    train_x: &[Vec<f64>],
    train_y: &[u8],
    test_x: &[Vec<f64>],
    test_y: &[u8],
    sigmas: &[f64],
    model_tags: &[&str],
    cfg: &NoiseSweepConfig,
) -> Result<NoiseSweepTable, EvalError> {
    if train_x.is_empty() || test_x.is_empty() {
        return Err(EvalError::Invalid("empty train or test set".into()));
    }
    if sigmas.iter().any(|&s| !(s >= 0.0)) {
        return Err(EvalError::Invalid("sigmas must be >= 0".into()));
    }
    let jobs: Vec<(f64, &str)> = sigmas
        .iter()
        .flat_map(|&s| model_tags.iter().map(move |&t| (s, t)))
        .collect();
    let rows: Result<Vec<NoiseSweepRow>, EvalError> = jobs
        .into_par_iter()
        .map(|(sigma, tag)| {
            let job_seed = mix_hash(cfg.seed, &[&sigma.to_bits().to_le_bytes(), tag.as_bytes()]);
            let mut rng = ChaCha8Rng::seed_from_u64(job_seed);
            let ptrain = perturb_matrix(train_x, sigma, &mut rng);
            let ptest = perturb_matrix(test_x, sigma, &mut rng);
            let auc = train_and_score(tag, &ptrain, train_y, &ptest, test_y, job_seed, cfg)?;
            Ok(NoiseSweepRow {
                sigma_mm: sigma,
                model_tag: tag.to_string(),
                auc,
            })
        })
        .collect();
    Ok(NoiseSweepTable { rows: rows? })
}

// ---------------------------------------------------------------------------
// Per-class density statistics

#[derive(Debug, Clone)]
pub struct ClassDensityStats {
    /// Sample mean and unbiased std, indexed by class label 0/1.
    pub mean: [f64; 2],
    pub std: [f64; 2],
    pub count: [usize; 2],
    pub bin_centers: Vec<f64>,
    /// Per-class densities over 64 shared bins; each integrates to 1.
    pub density: [Vec<f64>; 2],
}

pub const DENSITY_BINS: usize = 64;

pub fn class_density_stats(
    feature: &[f64],
    labels: &[u8],
) -> Result<ClassDensityStats, EvalError> {
    if feature.len() != labels.len() || feature.is_empty() {
        return Err(EvalError::Invalid(format!(
            "{} values vs {} labels",
            feature.len(),
            labels.len()
        )));
    }
    if feature.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::Invalid("non-finite feature value".into()));
    }
    let mut count = [0usize; 2];
    let mut sum = [0.0f64; 2];
    for (&v, &l) in feature.iter().zip(labels) {
        let c = l as usize;
        if c > 1 {
            return Err(EvalError::Invalid(format!("label {l} not in {{0,1}}")));
        }
        count[c] += 1;
        sum[c] += v;
    }
    if count[0] == 0 || count[1] == 0 {
        return Err(EvalError::DegenerateLabels(
            "both classes required".into(),
        ));
    }
    let mean = [sum[0] / count[0] as f64, sum[1] / count[1] as f64];
    let mut ssq = [0.0f64; 2];
    for (&v, &l) in feature.iter().zip(labels) {
        let c = l as usize;
        ssq[c] += (v - mean[c]) * (v - mean[c]);
    }
    let std = [0, 1].map(|c| {
        if count[c] > 1 {
            (ssq[c] / (count[c] - 1) as f64).sqrt()
        } else {
            0.0
        }
    });

    let lo = feature.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = feature.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / DENSITY_BINS as f64
    } else {
        1.0
    };
    let mut hist = [vec![0usize; DENSITY_BINS], vec![0usize; DENSITY_BINS]];
    for (&v, &l) in feature.iter().zip(labels) {
        let b = (((v - lo) / width) as usize).min(DENSITY_BINS - 1);
        hist[l as usize][b] += 1;
    }
    let density = [0, 1].map(|c| {
        hist[c]
            .iter()
            .map(|&h| h as f64 / (count[c] as f64 * width))
            .collect()
    });
    let bin_centers = (0..DENSITY_BINS)
        .map(|b| lo + width * (b as f64 + 0.5))
        .collect();
    Ok(ClassDensityStats {
        mean,
        std,
        count,
        bin_centers,
        density,
    })
}

// ---------------------------------------------------------------------------
// Report writers

pub fn write_roc_curve_csv(path: &Path, roc: &RocResult) -> Result<(), EvalError> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for ((t, (fpr, tpr)), _) in roc.thresholds.iter().zip(&roc.curve).zip(0..) {
        writeln!(out, "{t},{fpr},{tpr}").expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_importance_csv(path: &Path, report: &ImportanceReport) -> Result<(), EvalError> {
    let mut rank_of = vec![0usize; report.importance.len()];
    for (r, &f) in report.ranking.iter().enumerate() {
        rank_of[f] = r + 1;
    }
    let mut out = String::from("feature,importance,rank\n");
    for (f, &imp) in report.importance.iter().enumerate() {
        writeln!(out, "{f},{imp},{}", rank_of[f]).expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_noise_sweep_csv(path: &Path, table: &NoiseSweepTable) -> Result<(), EvalError> {
    let mut out = String::from("sigma_mm,model,auc\n");
    for row in &table.rows {
        writeln!(out, "{},{},{}", row.sigma_mm, row.model_tag, row.auc).expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_density_csv(path: &Path, stats: &ClassDensityStats) -> Result<(), EvalError> {
    let mut out = String::from("bin_center,class0_density,class1_density\n");
    for (i, &c) in stats.bin_centers.iter().enumerate() {
        writeln!(out, "{c},{},{}", stats.density[0][i], stats.density[1][i])
            .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Minimal self-contained SVG polyline plot for (x, y) series.
pub fn write_line_plot_svg(
    path: &Path,
    series: &[(&str, &[(f64, f64)])],
    x_label: &str,
    y_label: &str,
) -> Result<(), EvalError> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 56.0;
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    if pts.is_empty() {
        return Err(EvalError::Invalid("no data to plot".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    writeln!(
        svg,
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - M,
        W - M,
        H - M
    )
    .expect("string write");
    writeln!(
        svg,
        "<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>",
        H - M
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>",
        W / 2.0,
        H - 12.0
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>",
        H / 2.0,
        H / 2.0
    )
    .expect("string write");
    for (tick, label) in [(x0, x0), (x1, x1)] {
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label:.3}</text>",
            sx(tick),
            H - M + 16.0
        )
        .expect("string write");
    }
    for tick in [y0, y1] {
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{tick:.3}</text>",
            M - 6.0,
            sy(tick) + 4.0
        )
        .expect("string write");
    }
    for (si, (name, pts)) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let path_d: String = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            svg,
            "<polyline points=\"{path_d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
        )
        .expect("string write");
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>",
            W - M + 4.0,
            M + 16.0 * si as f64
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    let mut file = std::fs::File::create(path)?;
    file.write_all(svg.as_bytes())?;
    Ok(())
}
