//! The `oaknee` executable: one verb per pipeline stage, wiring the library
//! modules to files on disk. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 internal check failure.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::{
    self, load_manifest, mix_hash, pgm, pts, subject_split, Checkpoint, DataError, ManifestEntry,
    SynthConfig, TensorRecord,
};
use crate::evaluation::{
    self, class_density_stats, forest_importance, noise_sweep, roc_auc, EvalError, ForestConfig,
    NoiseSweepConfig,
};
use crate::geometry::{
    align_to_plateau, jsw_measurements, GeometryError, Js2Descriptor, LandmarkSet, RoleConfig,
    JS2_LEN,
};
use crate::imaging::{
    extract_medial_roi, normalize_intensity, prepare_patch, resample, rotate_image, CropMode,
    ImagingError, RasterImage,
};
use crate::models::{
    composite_gradcheck, fit_logistic, train as train_network, Arch, Dataset, LogisticModel,
    ModelError, Network, Standardizer, TrainConfig,
};
use crate::tensornet::{gradcheck::run_layer_suite, Tensor};
use crate::texture::{texture_features, TextureError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}
impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Data(e.to_string())
    }
}
impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        CliError::Data(e.to_string())
    }
}
impl From<TextureError> for CliError {
    fn from(e: TextureError) -> Self {
        CliError::Data(e.to_string())
    }
}
impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Tensor(t) => CliError::Internal(t.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "oaknee", version, about = "Knee OA detection pipeline")]
struct Cli {
    /// Run the worker pool single-threaded for byte-identical artifacts.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a calibrated synthetic cohort (images, points, manifests).
    Synth(SynthArgs),
    /// Normalize, resample and plateau-align rasters plus landmarks.
    Preprocess(PreprocessArgs),
    /// Compute the JS2 descriptor and joint-space widths per knee.
    Describe(DescribeArgs),
    /// Extract medial tibia ROI patches and texture features per knee.
    Texture(TextureArgs),
    /// Train a classifier and write a checkpoint plus training history.
    Train(TrainArgs),
    /// Score a checkpoint on a test manifest; prints AUC.
    Eval(EvalArgs),
    /// Forest-based feature importance over a feature table.
    Importance(ImportanceArgs),
    /// Retrain models under descriptor noise and tabulate test AUC.
    NoiseSweep(NoiseSweepArgs),
    /// Finite-difference gradient checks for every layer and the full CNN.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for images/, points/ and manifests.
    #[arg(long)]
    out: PathBuf,
    /// JSON file with a full generator configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training knees (overrides config).
    #[arg(long)]
    n: Option<usize>,
    /// Independent test knees (overrides config).
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    oa_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for aligned rasters, points and a new manifest.
    #[arg(long)]
    out: PathBuf,
    /// Target isotropic pixel spacing in mm.
    #[arg(long, default_value_t = 0.2)]
    spacing: f64,
}

#[derive(Debug, Args)]
struct DescribeArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV with minJSW, fixed JSWs and the 221 descriptor entries.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TextureArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV with fractal dimension and LBP histogram per knee.
    #[arg(long)]
    out: PathBuf,
    /// When set, also writes one ROI patch PGM per knee into this directory.
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Target isotropic pixel spacing in mm before ROI extraction.
    #[arg(long, default_value_t = 0.2)]
    spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelTag {
    /// Logistic regression on the selected feature set.
    Lr,
    /// Two-layer network on the JS2 descriptor.
    Js2Nn,
    /// Convolutional network on ROI patches.
    Cnn,
    /// CNN trunk fused with the JS2 descriptor.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeatureSet {
    /// All 221 descriptor entries.
    Js2,
    /// Minimum joint-space width only.
    Minjsw,
    /// minJSW plus both fixed-location JSWs.
    Jsw,
    /// LBP histogram bins.
    Lbp,
    /// Fractal dimension only.
    Fd,
    /// Fractal dimension plus LBP bins.
    TextureAll,
}

impl FeatureSet {
    fn tag(self) -> &'static str {
        match self {
            FeatureSet::Js2 => "js2",
            FeatureSet::Minjsw => "minjsw",
            FeatureSet::Jsw => "jsw",
            FeatureSet::Lbp => "lbp",
            FeatureSet::Fd => "fd",
            FeatureSet::TextureAll => "texture-all",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "js2" => FeatureSet::Js2,
            "minjsw" => FeatureSet::Minjsw,
            "jsw" => FeatureSet::Jsw,
            "lbp" => FeatureSet::Lbp,
            "fd" => FeatureSet::Fd,
            "texture-all" => FeatureSet::TextureAll,
            _ => return None,
        })
    }

    /// Columns selected from a feature CSV header, in header order.
    fn columns(self, header: &[String]) -> Vec<usize> {
        let wanted = |name: &str| match self {
            FeatureSet::Js2 => name.starts_with("js2_"),
            FeatureSet::Minjsw => name == "minjsw",
            FeatureSet::Jsw => matches!(name, "minjsw" | "med_fjsw" | "lat_fjsw"),
            FeatureSet::Lbp => name.starts_with("lbp_"),
            FeatureSet::Fd => name == "fd",
            FeatureSet::TextureAll => name == "fd" || name.starts_with("lbp_"),
        };
        header
            .iter()
            .enumerate()
            .filter(|(_, n)| wanted(n))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelTag,
    /// Training manifest; validation is split off by subject.
    #[arg(long)]
    manifest: PathBuf,
    /// Feature CSV from `describe` or `texture` (models other than cnn).
    #[arg(long)]
    features: Option<PathBuf>,
    /// ROI patch directory from `texture --patches` (cnn / combined).
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Feature columns for --model lr.
    #[arg(long, value_enum, default_value = "js2")]
    feature_set: FeatureSet,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch history CSV output path.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    val_fraction: f64,
    /// Ridge strength for --model lr.
    #[arg(long, default_value_t = 1e-3)]
    l2: f64,
    /// Random-crop augmentation for training patches.
    #[arg(long)]
    augment: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint from `train`.
    #[arg(long)]
    model: PathBuf,
    /// Test manifest (never split).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Directory for roc_curve.csv (and roc_curve.svg).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImportanceArgs {
    /// Feature CSV from `describe` (uses the JS2 columns).
    #[arg(long)]
    features: PathBuf,
    /// Directory for importance.csv and importance.svg.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
}

#[derive(Debug, Args)]
struct NoiseSweepArgs {
    /// Training feature CSV (JS2 columns).
    #[arg(long)]
    features: PathBuf,
    /// Test feature CSV (JS2 columns).
    #[arg(long)]
    test_features: PathBuf,
    /// Noise standard deviations in mm.
    #[arg(long, value_delimiter = ',', default_value = "0,1,3,5")]
    sigmas: Vec<f64>,
    /// Model tags: js2-lr, js2-nn.
    #[arg(long, value_delimiter = ',', default_value = "js2-lr")]
    models: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Epochs for the js2-nn retraining jobs.
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Seeds per layer check.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Seeds for the composed-network check.
    #[arg(long, default_value_t = 20)]
    composite_seeds: u64,
}

pub fn main() {
    std::process::exit(run(std::env::args_os()));
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let threads = if cli.deterministic {
        1
    } else {
        std::env::var("OAKNEE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0)
    };
    if threads > 0 {
        // ignore failure: the global pool may already exist in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Preprocess(a) => cmd_preprocess(a),
        Cmd::Describe(a) => cmd_describe(a),
        Cmd::Texture(a) => cmd_texture(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Importance(a) => cmd_importance(a),
        Cmd::NoiseSweep(a) => cmd_noise_sweep(a),
        Cmd::Gradcheck(a) => cmd_gradcheck(a),
    }
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SynthConfig>(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(n) = a.n {
        cfg.n_knees = n;
    }
    if let Some(n) = a.n_test {
        cfg.n_test = n;
    }
    if let Some(f) = a.oa_fraction {
        cfg.oa_fraction = f;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = dataio::synth::synth_generate(&cfg, &a.out)?;
    println!("train manifest: {}", out.train_manifest.display());
    if let Some(t) = &out.test_manifest {
        println!("test manifest: {}", t.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// shared loading helpers

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_landmarks(path: &Path) -> Result<LandmarkSet, CliError> {
    let points = pts::read_pts(path)?;
    Ok(LandmarkSet::new(points, RoleConfig::default_convention())?)
}

/// Reads one manifest entry and produces a contrast-normalized, resampled,
/// plateau-aligned raster plus the matching rotated landmarks (mm).
fn load_aligned(
    entry: &ManifestEntry,
    dir: &Path,
    target_spacing: f64,
) -> Result<(RasterImage, LandmarkSet), CliError> {
    let img = pgm::read_pgm(&entry.image_file(dir), entry.spacing_mm)?;
    let lm = load_landmarks(&entry.points_file(dir))?;
    let img = normalize_intensity(&img);
    let img = resample(&img, target_spacing)?;
    let (tf, aligned) = align_to_plateau(&lm)?;
    // image rotates about the same physical center, so the rotated raster
    // stays consistent with the rotated landmarks
    let center_px = (tf.center.0 / target_spacing, tf.center.1 / target_spacing);
    let img = rotate_image(&img, tf.rotation, center_px);
    Ok((img, aligned))
}

/// Feature CSV as written by `describe` / `texture`: knee_id, subject_id,
/// label, then numeric columns.
struct FeatureTable {
    columns: Vec<String>,
    /// knee_id -> (label, values)
    rows: HashMap<String, (u8, Vec<f64>)>,
    order: Vec<String>,
}

impl FeatureTable {
    fn load(path: &Path) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.len() < 4 || header[0] != "knee_id" || header[2] != "label" {
            return Err(CliError::Data(format!(
                "{}: expected header starting knee_id,subject_id,label",
                path.display()
            )));
        }
        let columns: Vec<String> = header[3..].to_vec();
        let mut rows = HashMap::new();
        let mut order = Vec::new();
        for (li, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if rec.len() != header.len() {
                return Err(CliError::Data(format!(
                    "{} row {}: {} fields, expected {}",
                    path.display(),
                    li + 2,
                    rec.len(),
                    header.len()
                )));
            }
            let knee = rec[0].to_string();
            let label: u8 = rec[2].parse().map_err(|_| {
                CliError::Data(format!("{} row {}: bad label", path.display(), li + 2))
            })?;
            let values: Vec<f64> = rec
                .iter()
                .skip(3)
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| {
                    CliError::Data(format!(
                        "{} row {}: non-numeric feature",
                        path.display(),
                        li + 2
                    ))
                })?;
            order.push(knee.clone());
            rows.insert(knee, (label, values));
        }
        if rows.is_empty() {
            return Err(CliError::Data(format!("{}: no rows", path.display())));
        }
        Ok(FeatureTable {
            columns,
            rows,
            order,
        })
    }

    fn select(&self, set: FeatureSet) -> Result<Vec<usize>, CliError> {
        let cols = set.columns(&self.columns);
        if cols.is_empty() {
            return Err(CliError::Data(format!(
                "feature table has no '{}' columns",
                set.tag()
            )));
        }
        Ok(cols)
    }

    fn row(&self, knee_id: &str, cols: &[usize]) -> Result<Vec<f64>, CliError> {
        let (_, values) = self.rows.get(knee_id).ok_or_else(|| {
            CliError::Data(format!("feature table has no row for knee '{knee_id}'"))
        })?;
        Ok(cols.iter().map(|&c| values[c]).collect())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs `f` over manifest entries in parallel, preserving manifest order.
fn per_knee<R: Send>(
    entries: &[ManifestEntry],
    f: impl Fn(&ManifestEntry) -> Result<R, CliError> + Sync,
) -> Result<Vec<R>, CliError> {
    entries
        .par_iter()
        .map(|e| f(e).map_err(|err| prefix_knee(&e.knee_id, err)))
        .collect()
}

fn prefix_knee(knee: &str, e: CliError) -> CliError {
    let msg = format!("knee {knee}: {}", e.message());
    match e {
        CliError::Usage(_) => CliError::Usage(msg),
        CliError::Data(_) => CliError::Data(msg),
        CliError::Internal(_) => CliError::Internal(msg),
    }
}

// ---------------------------------------------------------------------------
// preprocess

fn cmd_preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let entries = load_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);
    std::fs::create_dir_all(a.out.join("images"))?;
    std::fs::create_dir_all(a.out.join("points"))?;

    let new_entries = per_knee(&entries, |e| {
        let (img, lm) = load_aligned(e, &dir, a.spacing)?;
        let image_path = format!("images/{}.pgm", e.knee_id);
        let points_path = format!("points/{}.pts", e.knee_id);
        pgm::write_pgm(&a.out.join(&image_path), &img)?;
        pts::write_pts(&a.out.join(&points_path), &lm.points)?;
        Ok(ManifestEntry {
            image_path,
            points_path,
            spacing_mm: a.spacing,
            ..e.clone()
        })
    })?;
    let manifest_out = a.out.join("manifest.csv");
    dataio::manifest::write_manifest(&manifest_out, &new_entries)?;
    println!("preprocessed {} knees -> {}", new_entries.len(), manifest_out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// describe

fn cmd_describe(a: DescribeArgs) -> Result<(), CliError> {
    let entries = load_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);

    let rows = per_knee(&entries, |e| {
        let lm = load_landmarks(&e.points_file(&dir))?;
        let (_, aligned) = align_to_plateau(&lm)?;
        let js2 = Js2Descriptor::from_landmarks(&aligned)?;
        let jsw = jsw_measurements(&lm)?;
        let mut row = format!(
            "{},{},{},{},{},{}",
            e.knee_id,
            e.subject_id,
            e.label(),
            jsw.min_jsw,
            jsw.med_fjsw,
            jsw.lat_fjsw
        );
        for v in &js2.values {
            write!(row, ",{v}").expect("string write");
        }
        Ok(row)
    })?;

    let mut out = String::from("knee_id,subject_id,label,minjsw,med_fjsw,lat_fjsw");
    for k in 0..JS2_LEN {
        write!(out, ",js2_{k:03}").expect("string write");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    write_text(&a.out, &out)?;
    println!("described {} knees -> {}", entries.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// texture

fn cmd_texture(a: TextureArgs) -> Result<(), CliError> {
    let entries = load_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);
    if let Some(p) = &a.patches {
        std::fs::create_dir_all(p)?;
    }

    let rows = per_knee(&entries, |e| {
        let (img, lm) = load_aligned(e, &dir, a.spacing)?;
        let (patch, _) = extract_medial_roi(&img, &lm)?;
        let feats = texture_features(&patch)?;
        if let Some(pdir) = &a.patches {
            pgm::write_pgm(&pdir.join(format!("{}.pgm", e.knee_id)), &patch)?;
        }
        let mut row = format!("{},{},{},{}", e.knee_id, e.subject_id, e.label(), feats.fd);
        for v in &feats.lbp_hist {
            write!(row, ",{v}").expect("string write");
        }
        Ok(row)
    })?;

    let n_bins = rows
        .first()
        .map(|r| r.split(',').count() - 4)
        .unwrap_or(0);
    let mut out = String::from("knee_id,subject_id,label,fd");
    for b in 0..n_bins {
        write!(out, ",lbp_{b:02}").expect("string write");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    write_text(&a.out, &out)?;
    println!("textured {} knees -> {}", entries.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train

fn needs_features(model: ModelTag) -> bool {
    !matches!(model, ModelTag::Cnn)
}

fn needs_patches(model: ModelTag) -> bool {
    matches!(model, ModelTag::Cnn | ModelTag::Combined)
}

/// Loads the ROI patch for each entry and prepares a 48x48 [0,1] tensor row.
fn patch_tensor(
    entries: &[ManifestEntry],
    patches_dir: &Path,
    mode: CropMode,
    seed: u64,
) -> Result<Tensor<f32>, CliError> {
    let prepared: Vec<Tensor<f32>> = entries
        .par_iter()
        .map(|e| {
            let path = patches_dir.join(format!("{}.pgm", e.knee_id));
            let patch = pgm::read_pgm(&path, e.spacing_mm)
                .map_err(|err| prefix_knee(&e.knee_id, err.into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_hash(seed, &[e.knee_id.as_bytes()]));
            prepare_patch(&patch, mode, &mut rng)
                .map_err(|err| prefix_knee(&e.knee_id, err.into()))
        })
        .collect::<Result<_, CliError>>()?;
    let side = crate::imaging::PATCH_CROP;
    let mut out = Tensor::zeros(&[entries.len(), 1, side, side]);
    for (i, p) in prepared.iter().enumerate() {
        out.data[i * side * side..(i + 1) * side * side].copy_from_slice(&p.data);
    }
    Ok(out)
}

struct Assembled {
    dataset: Dataset<f32>,
    standardizer: Option<Standardizer>,
}

/// Builds a Dataset for the given entries. `standardizer` is fitted when
/// absent (training) and applied when provided (evaluation).
#[allow(clippy::too_many_arguments)]
fn assemble(
    model: ModelTag,
    entries: &[ManifestEntry],
    features: Option<(&FeatureTable, &[usize])>,
    patches_dir: Option<&Path>,
    crop: CropMode,
    seed: u64,
    standardizer: Option<&Standardizer>,
) -> Result<Assembled, CliError> {
    let labels: Vec<u8> = entries.iter().map(ManifestEntry::label).collect();
    let mut feature_tensor_opt = None;
    let mut fitted = None;
    if needs_features(model) {
        let (table, cols) =
            features.ok_or_else(|| CliError::Usage("--features is required".into()))?;
        let mut data = Vec::with_capacity(entries.len() * cols.len());
        for e in entries {
            data.extend(table.row(&e.knee_id, cols)?.iter().map(|&v| v as f32));
        }
        let raw = Tensor::from_vec(&[entries.len(), cols.len()], data);
        let st = match standardizer {
            Some(s) => s.clone(),
            None => Standardizer::fit(&raw),
        };
        feature_tensor_opt = Some(st.apply(&raw));
        fitted = Some(st);
    }
    let images = if needs_patches(model) {
        let pdir =
            patches_dir.ok_or_else(|| CliError::Usage("--patches is required".into()))?;
        Some(patch_tensor(entries, pdir, crop, seed)?)
    } else {
        None
    };
    Ok(Assembled {
        dataset: Dataset {
            images,
            features: feature_tensor_opt,
            labels,
        },
        standardizer: fitted,
    })
}

fn standardizer_to_json(s: &Standardizer) -> serde_json::Value {
    serde_json::to_value(s).expect("standardizer serializes")
}

fn standardizer_from_meta(meta: &serde_json::Value) -> Result<Option<Standardizer>, CliError> {
    match meta.get("standardizer") {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(v) => Ok(Some(serde_json::from_value(v.clone()).map_err(|e| {
            CliError::Data(format!("checkpoint standardizer: {e}"))
        })?)),
    }
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&a.val_fraction) {
        return Err(CliError::Usage(format!(
            "--val-fraction {} outside [0, 1)",
            a.val_fraction
        )));
    }
    let entries = load_manifest(&a.manifest)?;
    let feature_set = match a.model {
        ModelTag::Lr => a.feature_set,
        _ => FeatureSet::Js2,
    };
    let table = match &a.features {
        Some(p) => Some(FeatureTable::load(p)?),
        None => None,
    };
    let feat = match (&table, needs_features(a.model)) {
        (Some(t), true) => Some((t, t.select(feature_set)?)),
        (None, true) => return Err(CliError::Usage("--features is required".into())),
        _ => None,
    };
    let feat_ref = feat.as_ref().map(|(t, c)| (*t, c.as_slice()));

    let (train_idx, val_idx) = subject_split(&entries, a.val_fraction, a.seed);
    if train_idx.is_empty() || (a.val_fraction > 0.0 && val_idx.is_empty()) {
        return Err(CliError::Data(format!(
            "subject split produced {} train / {} val knees",
            train_idx.len(),
            val_idx.len()
        )));
    }
    let train_entries: Vec<ManifestEntry> =
        train_idx.iter().map(|&i| entries[i].clone()).collect();
    let val_entries: Vec<ManifestEntry> = val_idx.iter().map(|&i| entries[i].clone()).collect();

    let train_crop = if a.augment {
        CropMode::Train
    } else {
        CropMode::Eval
    };
    let tr = assemble(
        a.model,
        &train_entries,
        feat_ref,
        a.patches.as_deref(),
        train_crop,
        a.seed,
        None,
    )?;
    let va = assemble(
        a.model,
        &val_entries,
        feat_ref,
        a.patches.as_deref(),
        CropMode::Eval,
        a.seed,
        tr.standardizer.as_ref(),
    )?;

    let mut meta = serde_json::json!({
        "feature_set": feature_set.tag(),
        "standardizer": tr.standardizer.as_ref().map(standardizer_to_json),
    });

    let checkpoint = match a.model {
        ModelTag::Lr => {
            let d = tr.dataset.features.as_ref().expect("lr has features").dim(1);
            let rows = |ds: &Dataset<f32>| -> Vec<Vec<f64>> {
                let f = ds.features.as_ref().unwrap();
                (0..ds.len())
                    .map(|i| f.data[i * d..(i + 1) * d].iter().map(|&v| v as f64).collect())
                    .collect()
            };
            let model = fit_logistic(&rows(&tr.dataset), &tr.dataset.labels, a.l2, 500, 1e-8)?;
            let val_auc = roc_auc(&model.scores(&rows(&va.dataset))?, &va.dataset.labels)?.auc;
            println!("val AUC {val_auc:.4}");
            meta["l2_lambda"] = serde_json::json!(a.l2);
            Checkpoint {
                arch: "logistic".into(),
                meta,
                tensors: vec![
                    TensorRecord {
                        name: "weights".into(),
                        tensor: Tensor::from_vec(
                            &[d],
                            model.weights.iter().map(|&w| w as f32).collect(),
                        ),
                    },
                    TensorRecord {
                        name: "bias".into(),
                        tensor: Tensor::from_vec(&[1], vec![model.bias as f32]),
                    },
                ],
            }
        }
        ModelTag::Js2Nn | ModelTag::Cnn | ModelTag::Combined => {
            let arch = match a.model {
                ModelTag::Js2Nn => Arch::Js2Net,
                ModelTag::Cnn => Arch::TinyCnn,
                ModelTag::Combined => Arch::Combined,
                ModelTag::Lr => unreachable!(),
            };
            let mut cfg = TrainConfig {
                seed: a.seed,
                val_fraction: a.val_fraction,
                ..TrainConfig::default()
            };
            if let Some(e) = a.epochs {
                cfg.epochs = e;
            }
            if let Some(b) = a.batch {
                cfg.batch_size = b;
            }
            if let Some(lr) = a.lr {
                cfg.lr0 = lr;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(mix_hash(a.seed, &[b"init"]));
            let net = Network::<f32>::init(arch, &mut rng);
            let outcome = train_network(net, &tr.dataset, &va.dataset, &cfg)?;
            for s in &outcome.history {
                println!(
                    "epoch {:3}  lr {:.5}  train loss {:.4}  val AUC {:.4}",
                    s.epoch, s.lr, s.train_loss, s.val_auc
                );
            }
            println!(
                "best epoch {} val AUC {:.4}",
                outcome.best_epoch, outcome.best_val_auc
            );
            if let Some(hp) = &a.history {
                let mut text = String::from("epoch,lr,train_loss,val_auc\n");
                for s in &outcome.history {
                    writeln!(text, "{},{},{},{}", s.epoch, s.lr, s.train_loss, s.val_auc)
                        .expect("string write");
                }
                write_text(hp, &text)?;
            }
            outcome.best.to_checkpoint(meta)
        }
    };
    if let Some(parent) = a.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    checkpoint.save(&a.out)?;
    println!("checkpoint: {}", a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let ck = Checkpoint::load(&a.model)?;
    let entries = load_manifest(&a.manifest)?;
    let standardizer = standardizer_from_meta(&ck.meta)?;
    let feature_set = ck
        .meta
        .get("feature_set")
        .and_then(|v| v.as_str())
        .and_then(FeatureSet::from_tag)
        .unwrap_or(FeatureSet::Js2);

    let model_tag = match ck.arch.as_str() {
        "logistic" => ModelTag::Lr,
        "js2-nn" => ModelTag::Js2Nn,
        "cnn" => ModelTag::Cnn,
        "combined" => ModelTag::Combined,
        other => {
            return Err(CliError::Data(format!(
                "checkpoint has unknown arch '{other}'"
            )))
        }
    };
    let table = match &a.features {
        Some(p) => Some(FeatureTable::load(p)?),
        None => None,
    };
    let feat = match (&table, needs_features(model_tag)) {
        (Some(t), true) => Some((t, t.select(feature_set)?)),
        (None, true) => return Err(CliError::Usage("--features is required".into())),
        _ => None,
    };
    let feat_ref = feat.as_ref().map(|(t, c)| (*t, c.as_slice()));

    let assembled = assemble(
        model_tag,
        &entries,
        feat_ref,
        a.patches.as_deref(),
        CropMode::Eval,
        0,
        standardizer.as_ref(),
    )?;

    let scores = match model_tag {
        ModelTag::Lr => {
            let weights: Vec<f64> = ck.tensor("weights")?.data.iter().map(|&v| v as f64).collect();
            let bias = ck.tensor("bias")?.data[0] as f64;
            let model = LogisticModel {
                weights,
                bias,
                l2_lambda: ck.meta["l2_lambda"].as_f64().unwrap_or(0.0),
            };
            let f = assembled.dataset.features.as_ref().expect("lr features");
            let d = f.dim(1);
            (0..assembled.dataset.len())
                .map(|i| {
                    let row: Vec<f64> =
                        f.data[i * d..(i + 1) * d].iter().map(|&v| v as f64).collect();
                    model.score(&row)
                })
                .collect::<Vec<f64>>()
        }
        _ => {
            let net = Network::from_checkpoint(&ck)?;
            net.predict_scores(&assembled.dataset)?
        }
    };
    let roc = roc_auc(&scores, &assembled.dataset.labels)?;
    println!("AUC: {:.4}", roc.auc);
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out)?;
        evaluation::write_roc_curve_csv(&out.join("roc_curve.csv"), &roc)?;
        evaluation::write_line_plot_svg(
            &out.join("roc_curve.svg"),
            &[("roc", &roc.curve)],
            "fpr",
            "tpr",
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// importance

fn cmd_importance(a: ImportanceArgs) -> Result<(), CliError> {
    let table = FeatureTable::load(&a.features)?;
    let cols = table.select(FeatureSet::Js2)?;
    let mut features = Vec::with_capacity(table.order.len());
    let mut labels = Vec::with_capacity(table.order.len());
    for knee in &table.order {
        let (label, _) = table.rows[knee];
        features.push(table.row(knee, &cols)?);
        labels.push(label);
    }
    let cfg = ForestConfig {
        n_trees: a.trees,
        seed: a.seed,
        ..ForestConfig::default()
    };
    let report = forest_importance(&features, &labels, &cfg)?;
    std::fs::create_dir_all(&a.out)?;
    evaluation::write_importance_csv(&a.out.join("importance.csv"), &report)?;
    let pts: Vec<(f64, f64)> = report
        .importance
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64, v))
        .collect();
    evaluation::write_line_plot_svg(
        &a.out.join("importance.svg"),
        &[("importance", &pts)],
        "descriptor entry",
        "importance",
    )?;
    println!(
        "top entries: {:?}",
        &report.ranking[..report.ranking.len().min(5)]
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// noise sweep

fn cmd_noise_sweep(a: NoiseSweepArgs) -> Result<(), CliError> {
    let train_table = FeatureTable::load(&a.features)?;
    let test_table = FeatureTable::load(&a.test_features)?;
    let cols = train_table.select(FeatureSet::Js2)?;
    let test_cols = test_table.select(FeatureSet::Js2)?;
    if cols.len() != test_cols.len() {
        return Err(CliError::Data(format!(
            "train table has {} descriptor columns, test table {}",
            cols.len(),
            test_cols.len()
        )));
    }
    let unpack = |t: &FeatureTable, c: &[usize]| -> Result<(Vec<Vec<f64>>, Vec<u8>), CliError> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for knee in &t.order {
            let (label, _) = t.rows[knee];
            x.push(t.row(knee, c)?);
            y.push(label);
        }
        Ok((x, y))
    };
    let (tx, ty) = unpack(&train_table, &cols)?;
    let (ex, ey) = unpack(&test_table, &test_cols)?;

    let cfg = NoiseSweepConfig {
        seed: a.seed,
        train_cfg: TrainConfig {
            epochs: a.epochs,
            seed: a.seed,
            ..TrainConfig::default()
        },
        ..NoiseSweepConfig::default()
    };
    let tags: Vec<&str> = a.models.iter().map(String::as_str).collect();
    let table = noise_sweep(&tx, &ty, &ex, &ey, &a.sigmas, &tags, &cfg)?;
    for row in &table.rows {
        println!("sigma {:.1} mm  {}  AUC {:.4}", row.sigma_mm, row.model_tag, row.auc);
    }
    if let Some(parent) = a.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    evaluation::write_noise_sweep_csv(&a.out, &table)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// gradcheck

fn cmd_gradcheck(a: GradcheckArgs) -> Result<(), CliError> {
    let mut report = run_layer_suite(a.seeds);
    let composite = composite_gradcheck(a.composite_seeds);
    report.entries.push(composite);
    for e in &report.entries {
        println!(
            "{:28} max rel err {:>12.3e}  tol {:>8.0e}  {}",
            e.name,
            e.max_rel_err,
            e.tolerance,
            if e.passed() { "pass" } else { "FAIL" }
        );
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Internal("gradient check failed".into()))
    }
}

/// Used by integration tests to run class density stats on a feature CSV
/// column the same way a user would via the library.
pub fn density_from_feature_csv(
    path: &Path,
    column: &str,
) -> Result<crate::evaluation::ClassDensityStats, CliError> {
    let table = FeatureTable::load(path)?;
    let idx = table
        .columns
        .iter()
        .position(|c| c == column)
        .ok_or_else(|| CliError::Data(format!("no column '{column}'")))?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for knee in &table.order {
        let (label, row) = &table.rows[knee];
        values.push(row[idx]);
        labels.push(*label);
    }
    Ok(class_density_stats(&values, &labels)?)
}
