//! Calibrated synthetic knee generator.
//!
//! Each knee is built from a template contour in millimetres: a tibial
//! plateau with a central spine, a femoral margin hanging above it at a
//! class-conditional distance, filler shaft points, and a radiograph-like
//! 16-bit raster with midpoint-displacement trabecular texture whose
//! roughness differs by class. The medial joint-space gap is sampled from
//! truncated normals so the pairwise-distance entry linking tibia point 14
//! to femur point 10 reproduces the target class distributions (diseased
//! mean 3.98 mm, healthy mean 5.17 mm) by construction.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{write_manifest, ManifestEntry};
use super::{mix_hash, pgm, pts, DataError};
use crate::geometry::Point2D;
use crate::imaging::{BitDepth, RasterImage};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapParams {
    /// Target distribution of the focal (medial) gap in mm.
    pub focal_mean: f64,
    pub focal_std: f64,
    /// Baseline gap across the rest of the joint, correlated with the
    /// focal gap so narrowing is a joint-wide signal.
    pub base_mean: f64,
    pub base_std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextureParams {
    /// Trabecular noise amplitude in 16-bit intensity units.
    pub amplitude: f64,
    /// Hurst exponent of the midpoint-displacement surface; lower is
    /// rougher.
    pub hurst: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Knees in the training manifest.
    pub n_knees: usize,
    /// Knees in the independent test manifest (0 disables it).
    pub n_test: usize,
    pub oa_fraction: f64,
    pub seed: u64,
    pub spacing_mm: f64,
    pub tibia_width_mean: f64,
    pub tibia_width_std: f64,
    pub gap_oa: GapParams,
    pub gap_non_oa: GapParams,
    /// No gap is ever generated below this floor (mm).
    pub gap_floor: f64,
    /// Correlation between focal and baseline gap draws.
    pub gap_correlation: f64,
    pub texture_oa: TextureParams,
    pub texture_non_oa: TextureParams,
    pub rotation_std_deg: f64,
    /// Per-landmark positional jitter (mm). Zero makes contour geometry
    /// exactly equal to the sampled parameters.
    pub jitter_mm: f64,
    /// Vertical contour-shape variability (mm) applied per knee at every
    /// landmark except the probe landmarks, which stay on the clean gap
    /// profile. This is what keeps the probe entries the most informative
    /// ones: every other near-vertical pair reads the gap through shape
    /// noise.
    pub shape_sigma_mm: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_knees: 400,
            n_test: 200,
            oa_fraction: 0.5,
            seed: 7,
            spacing_mm: 0.2,
            tibia_width_mean: 60.0,
            tibia_width_std: 3.0,
            gap_oa: GapParams {
                focal_mean: 3.98,
                focal_std: 1.57,
                base_mean: 3.9,
                base_std: 2.2,
            },
            gap_non_oa: GapParams {
                focal_mean: 5.17,
                focal_std: 0.96,
                base_mean: 7.3,
                base_std: 2.2,
            },
            gap_floor: 0.5,
            gap_correlation: 0.8,
            texture_oa: TextureParams {
                amplitude: 4800.0,
                hurst: 0.3,
            },
            texture_non_oa: TextureParams {
                amplitude: 4000.0,
                hurst: 0.4,
            },
            rotation_std_deg: 4.0,
            jitter_mm: 0.1,
            shape_sigma_mm: 1.8,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.oa_fraction > 0.0 && self.oa_fraction < 1.0) {
            return Err(DataError::ManifestError(format!(
                "oa_fraction {} must be in (0, 1)",
                self.oa_fraction
            )));
        }
        for (name, v) in [
            ("n_knees", self.n_knees as f64),
            ("spacing_mm", self.spacing_mm),
            ("tibia_width_mean", self.tibia_width_mean),
            ("gap_floor", self.gap_floor),
            ("focal_std(oa)", self.gap_oa.focal_std),
            ("focal_std(non_oa)", self.gap_non_oa.focal_std),
        ] {
            if !(v > 0.0) {
                return Err(DataError::ManifestError(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Canvas in mm; fixed so all images share dimensions.
const CANVAS_W_MM: f64 = 76.0;
const CANVAS_H_MM: f64 = 55.0;
/// y of the tibial plateau reference line.
const Y_PLATEAU: f64 = 26.0;
/// Femur contour fractions across the tibia width. Index 10 sits at
/// 14/16 so it is vertically paired with tibia landmark 14, making that
/// pairwise distance equal the sampled focal gap.
const FEMUR_FRACS: [f64; 13] = [
    0.05, 0.125, 0.21, 0.3125, 0.39, 0.5, 0.57, 0.6875, 0.75, 0.82, 0.875, 0.92, 0.96,
];
/// Centre of the focal-narrowing bump, matching tibia landmark 14.
const FOCAL_FRAC: f64 = 0.875;
/// Femur landmarks kept exactly on the clean gap profile; every other
/// femur landmark reads the gap through per-knee shape noise.
const FEMUR_CLEAN: [usize; 4] = [1, 5, 8, 10];
/// Tibia landmarks kept on the clean profile: the extent pair (0, 16) so
/// tibia_width stays exact, the plateau pair (2, 14) so alignment is
/// undisturbed, and the probe partners (5, 8, 11, 12).
const TIBIA_CLEAN: [usize; 8] = [0, 2, 5, 8, 11, 12, 14, 16];

/// Descriptor indices of the probe pairs: vertically aligned tibia-femur
/// landmark pairs away from the focal bump whose femur landmark sits on
/// the clean gap profile. Each one reads the joint-wide base gap exactly,
/// while every other near-vertical pair reads it through shape noise, so
/// these are the entries the generator makes most class-informative.
pub fn informative_entries() -> Vec<usize> {
    let mut out = Vec::new();
    for (fi, &f) in FEMUR_FRACS.iter().enumerate() {
        if (f - FOCAL_FRAC).abs() < 1e-12 || !FEMUR_CLEAN.contains(&fi) {
            continue;
        }
        for ti in 0..17 {
            if (f - ti as f64 / 16.0).abs() < 1e-12 {
                out.push(ti * 13 + fi);
            }
        }
    }
    out
}
const FOCAL_SIGMA: f64 = 0.09;
/// mm per texture texel.
const TEX_SCALE: f64 = 0.3;

/// Everything sampled for one knee; a pure function of (config, index), so
/// tests can recover ground truth without re-running generation.
#[derive(Debug, Clone)]
pub struct KneeParams {
    pub oa: bool,
    pub tibia_width: f64,
    /// Gap at the focal fraction; equals the tibia14-femur10 distance when
    /// jitter is zero.
    pub focal_gap: f64,
    pub base_gap: f64,
    pub rotation_rad: f64,
    pub translation: (f64, f64),
    pub tex_amplitude: f64,
    pub tex_hurst: f64,
    pub tex_seed: u64,
    /// Gap-profile shape noise per femur landmark, zero at FEMUR_CLEAN.
    pub gap_dy: [f64; 13],
    /// Tibia contour shape noise per tibia landmark, zero at TIBIA_CLEAN.
    /// The femur contour follows the tibia offset, so this moves both
    /// surfaces together and leaves the local gap unchanged.
    pub tibia_dy: [f64; 17],
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn cohort_oa(local_index: usize, count: usize, oa_fraction: f64) -> bool {
    local_index < (count as f64 * oa_fraction).round() as usize
}

pub fn knee_params(cfg: &SynthConfig, cohort: &str, local_index: usize, count: usize) -> KneeParams {
    let oa = cohort_oa(local_index, count, cfg.oa_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_hash(
        cfg.seed,
        &[b"knee", cohort.as_bytes(), &(local_index as u64).to_le_bytes()],
    ));
    let gp = if oa { &cfg.gap_oa } else { &cfg.gap_non_oa };

    let tibia_width = (cfg.tibia_width_mean + cfg.tibia_width_std * gauss(&mut rng))
        .clamp(45.0, 72.0);
    let focal_gap = loop {
        let v = gp.focal_mean + gp.focal_std * gauss(&mut rng);
        if v >= cfg.gap_floor {
            break v;
        }
    };
    let zg = (focal_gap - gp.focal_mean) / gp.focal_std;
    let rho = cfg.gap_correlation.clamp(-0.99, 0.99);
    let z2 = gauss(&mut rng);
    let base_gap = (gp.base_mean + gp.base_std * (rho * zg + (1.0 - rho * rho).sqrt() * z2))
        .clamp(cfg.gap_floor + 0.3, 11.5);
    let rotation_rad = (cfg.rotation_std_deg * gauss(&mut rng))
        .clamp(-10.0, 10.0)
        .to_radians();
    let translation = (
        (0.8 * gauss(&mut rng)).clamp(-2.0, 2.0),
        (0.8 * gauss(&mut rng)).clamp(-2.0, 2.0),
    );
    let tp = if oa { &cfg.texture_oa } else { &cfg.texture_non_oa };
    let tex_amplitude = tp.amplitude * (0.1 * gauss(&mut rng)).exp();
    let tex_hurst = (tp.hurst + 0.05 * gauss(&mut rng)).clamp(0.08, 0.9);
    let tex_seed = rng.random();

    let mut gap_dy = [0.0; 13];
    for (i, v) in gap_dy.iter_mut().enumerate() {
        if !FEMUR_CLEAN.contains(&i) {
            *v = cfg.shape_sigma_mm * gauss(&mut rng);
        }
    }
    let mut tibia_dy = [0.0; 17];
    for (i, v) in tibia_dy.iter_mut().enumerate() {
        if !TIBIA_CLEAN.contains(&i) {
            *v = cfg.shape_sigma_mm * gauss(&mut rng);
        }
    }

    KneeParams {
        oa,
        tibia_width,
        focal_gap,
        base_gap,
        rotation_rad,
        translation,
        tex_amplitude,
        tex_hurst,
        tex_seed,
        gap_dy,
        tibia_dy,
    }
}

/// Tibia contour height relative to the plateau line, symmetric in the
/// width fraction so the extent landmarks share a y and the plateau pair
/// (fractions 2/16 and 14/16) is exactly horizontal before rotation.
fn tibia_shape(f: f64) -> f64 {
    let spine = -1.2 * bump(f, 0.5, 0.22);
    let edges = 1.4 * (bump(f, 0.0, 0.07) + bump(f, 1.0, 0.07));
    spine + edges
}

fn bump(f: f64, center: f64, sigma: f64) -> f64 {
    let t = (f - center) / sigma;
    (-t * t).exp()
}

fn gap_at(f: f64, base: f64, focal: f64) -> f64 {
    base + (focal - base) * bump(f, FOCAL_FRAC, FOCAL_SIGMA)
}

fn tibia_y(f: f64) -> f64 {
    Y_PLATEAU + tibia_shape(f)
}

/// Piecewise-linear interpolation of per-node offsets; constant beyond
/// the end nodes.
fn interp_dy(fracs: &[f64], dys: &[f64], f: f64) -> f64 {
    if f <= fracs[0] {
        return dys[0];
    }
    for i in 1..fracs.len() {
        if f <= fracs[i] {
            let t = (f - fracs[i - 1]) / (fracs[i] - fracs[i - 1]);
            return dys[i - 1] * (1.0 - t) + dys[i] * t;
        }
    }
    dys[dys.len() - 1]
}

fn tibia_dy_at(p: &KneeParams, f: f64) -> f64 {
    let x = (f * 16.0).clamp(0.0, 16.0);
    let i = (x as usize).min(15);
    let t = x - i as f64;
    p.tibia_dy[i] * (1.0 - t) + p.tibia_dy[i + 1] * t
}

/// Tibia surface with shape noise applied.
fn tibia_surf(p: &KneeParams, f: f64) -> f64 {
    tibia_y(f) + tibia_dy_at(p, f)
}

/// Femur surface: follows the noisy tibia surface at a gap that carries
/// its own shape noise and never closes below 0.3 mm, so the contours
/// cannot intersect.
fn femur_surf(p: &KneeParams, f: f64) -> f64 {
    let gap = gap_at(f, p.base_gap, p.focal_gap) + interp_dy(&FEMUR_FRACS, &p.gap_dy, f);
    tibia_surf(p, f) - gap.max(0.3)
}

/// 74-point template in canonical (unrotated) coordinates:
/// 13 femur, 17 tibia, then 44 filler shaft points.
fn template_points(p: &KneeParams) -> Vec<Point2D> {
    let x0 = (CANVAS_W_MM - p.tibia_width) / 2.0;
    let w = p.tibia_width;
    let mut pts = Vec::with_capacity(74);
    for &f in &FEMUR_FRACS {
        pts.push(Point2D::new(x0 + f * w, femur_surf(p, f)));
    }
    for i in 0..17 {
        let f = i as f64 / 16.0;
        pts.push(Point2D::new(x0 + f * w, tibia_surf(p, f)));
    }
    for k in 0..11 {
        let y = Y_PLATEAU - 7.0 - 1.6 * k as f64;
        pts.push(Point2D::new(x0 + 0.22 * w, y));
        pts.push(Point2D::new(x0 + 0.82 * w, y));
    }
    for k in 0..11 {
        let y = Y_PLATEAU + 6.0 + 1.6 * k as f64;
        pts.push(Point2D::new(x0 + 0.15 * w, y));
        pts.push(Point2D::new(x0 + 0.88 * w, y));
    }
    pts
}

fn plateau_center(p: &KneeParams) -> Point2D {
    let x0 = (CANVAS_W_MM - p.tibia_width) / 2.0;
    // Midpoint of the plateau pair; symmetric shape puts both at equal y.
    Point2D::new(x0 + 0.5 * p.tibia_width, tibia_y(2.0 / 16.0))
}

fn place(p: &KneeParams, q: Point2D) -> Point2D {
    let c = plateau_center(p);
    let (s, co) = p.rotation_rad.sin_cos();
    let (dx, dy) = (q.x - c.x, q.y - c.y);
    Point2D::new(
        c.x + co * dx - s * dy + p.translation.0,
        c.y + s * dx + co * dy + p.translation.1,
    )
}

fn unplace(p: &KneeParams, q: Point2D) -> Point2D {
    let c = plateau_center(p);
    let (s, co) = (-p.rotation_rad).sin_cos();
    let (dx, dy) = (q.x - p.translation.0 - c.x, q.y - p.translation.1 - c.y);
    Point2D::new(c.x + co * dx - s * dy, c.y + s * dx + co * dy)
}

pub fn landmark_points(cfg: &SynthConfig, p: &KneeParams, rng: &mut ChaCha8Rng) -> Vec<Point2D> {
    template_points(p)
        .into_iter()
        .map(|q| {
            let jx = cfg.jitter_mm * gauss(rng);
            let jy = cfg.jitter_mm * gauss(rng);
            let placed = place(p, q);
            Point2D::new(placed.x + jx, placed.y + jy)
        })
        .collect()
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

struct TexField {
    grid: Vec<f64>,
    size: usize,
}

impl TexField {
    fn build(p: &KneeParams) -> Self {
        let size = 257;
        let mut grid = fbm_surface(size, p.tex_hurst, p.tex_seed);
        let n = grid.len() as f64;
        let mean = grid.iter().sum::<f64>() / n;
        let var = grid.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / var.sqrt().max(1e-12);
        for v in grid.iter_mut() {
            *v = (*v - mean) * inv;
        }
        TexField { grid, size }
    }

    fn sample(&self, x_mm: f64, y_mm: f64) -> f64 {
        let u = (x_mm / TEX_SCALE).clamp(0.0, (self.size - 1) as f64 - 1e-9);
        let v = (y_mm / TEX_SCALE).clamp(0.0, (self.size - 1) as f64 - 1e-9);
        let (i, j) = (u as usize, v as usize);
        let (fu, fv) = (u - i as f64, v - j as f64);
        let at = |i: usize, j: usize| self.grid[j * self.size + i];
        let top = at(i, j) * (1.0 - fu) + at(i + 1, j) * fu;
        let bot = at(i, j + 1) * (1.0 - fu) + at(i + 1, j + 1) * fu;
        top * (1.0 - fv) + bot * fv
    }
}

pub fn render_image(cfg: &SynthConfig, p: &KneeParams) -> RasterImage {
    let s = cfg.spacing_mm;
    let width = (CANVAS_W_MM / s).round() as usize;
    let height = (CANVAS_H_MM / s).round() as usize;
    let tex = TexField::build(p);
    let x0 = (CANVAS_W_MM - p.tibia_width) / 2.0;
    let w = p.tibia_width;

    let mut pixels = Vec::with_capacity(width * height);
    for py in 0..height {
        for px in 0..width {
            let mm = Point2D::new((px as f64 + 0.5) * s, (py as f64 + 0.5) * s);
            let q = unplace(p, mm);
            let frac = (q.x - x0) / w;
            let mut value = 8500.0 + 60.0 * q.y;
            if (-0.04..=1.04).contains(&frac) {
                let env = smoothstep((frac + 0.03) / 0.05) * smoothstep((1.03 - frac) / 0.05);
                let fc = frac.clamp(0.0, 1.0);
                let d_femur = femur_surf(p, fc) - q.y;
                let d_tibia = q.y - tibia_surf(p, fc);
                value += 17000.0 * smoothstep(d_femur / 0.6) * env;
                if d_tibia > -0.6 {
                    let inside = smoothstep(d_tibia / 0.6) * env;
                    let rim = 2500.0 * bump(d_tibia, 0.5, 0.6);
                    let trabecular =
                        p.tex_amplitude * tex.sample(q.x, q.y) * smoothstep(d_tibia / 1.2);
                    value += inside * (17000.0 + rim + trabecular);
                }
            }
            pixels.push(value.clamp(0.0, 65535.0).round() as u16);
        }
    }
    RasterImage::new(width, height, s, BitDepth::Sixteen, pixels).expect("valid canvas")
}

/// Fractional Brownian surface on a (2^k + 1)^2 grid via diamond-square
/// midpoint displacement; displacement scale halves by 2^-hurst per level.
pub fn fbm_surface(size: usize, hurst: f64, seed: u64) -> Vec<f64> {
    assert!(size >= 3 && (size - 1).is_power_of_two(), "size must be 2^k + 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = vec![0.0f64; size * size];
    let n = size - 1;
    for &(x, y) in &[(0, 0), (n, 0), (0, n), (n, n)] {
        grid[y * size + x] = gauss(&mut rng);
    }

    let mut step = n;
    let mut scale = 1.0f64;
    let falloff = 2f64.powf(-hurst);
    while step > 1 {
        let half = step / 2;
        for y in (half..size).step_by(step) {
            for x in (half..size).step_by(step) {
                let avg = (grid[(y - half) * size + x - half]
                    + grid[(y - half) * size + x + half]
                    + grid[(y + half) * size + x - half]
                    + grid[(y + half) * size + x + half])
                    / 4.0;
                grid[y * size + x] = avg + scale * gauss(&mut rng);
            }
        }
        for y in (0..size).step_by(half) {
            let x_start = if (y / half) % 2 == 0 { half } else { 0 };
            for x in (x_start..size).step_by(step) {
                let mut sum = 0.0;
                let mut count = 0.0;
                if x >= half {
                    sum += grid[y * size + x - half];
                    count += 1.0;
                }
                if x + half < size {
                    sum += grid[y * size + x + half];
                    count += 1.0;
                }
                if y >= half {
                    sum += grid[(y - half) * size + x];
                    count += 1.0;
                }
                if y + half < size {
                    sum += grid[(y + half) * size + x];
                    count += 1.0;
                }
                grid[y * size + x] = sum / count + scale * gauss(&mut rng);
            }
        }
        step = half;
        scale *= falloff;
    }
    grid
}

pub struct SynthOutput {
    pub train_manifest: PathBuf,
    pub test_manifest: Option<PathBuf>,
}

pub fn synth_generate(cfg: &SynthConfig, out_dir: &Path) -> Result<SynthOutput, DataError> {
    cfg.validate()?;
    let images = out_dir.join("images");
    let points = out_dir.join("points");
    std::fs::create_dir_all(&images).map_err(|e| DataError::io(&images, e))?;
    std::fs::create_dir_all(&points).map_err(|e| DataError::io(&points, e))?;

    let train = generate_cohort(cfg, out_dir, "tr", cfg.n_knees)?;
    let train_manifest = out_dir.join("train.csv");
    write_manifest(&train_manifest, &train)?;

    let test_manifest = if cfg.n_test > 0 {
        let test = generate_cohort(cfg, out_dir, "te", cfg.n_test)?;
        let path = out_dir.join("test.csv");
        write_manifest(&path, &test)?;
        Some(path)
    } else {
        None
    };

    Ok(SynthOutput {
        train_manifest,
        test_manifest,
    })
}

fn generate_cohort(
    cfg: &SynthConfig,
    out_dir: &Path,
    cohort: &str,
    count: usize,
) -> Result<Vec<ManifestEntry>, DataError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let p = knee_params(cfg, cohort, i, count);
            let mut jitter_rng = ChaCha8Rng::seed_from_u64(mix_hash(
                cfg.seed,
                &[b"jitter", cohort.as_bytes(), &(i as u64).to_le_bytes()],
            ));
            let landmarks = landmark_points(cfg, &p, &mut jitter_rng);
            let image = render_image(cfg, &p);

            let stem = format!("{cohort}_k{i:05}");
            let image_rel = format!("images/{stem}.pgm");
            let points_rel = format!("points/{stem}.pts");
            pgm::write_pgm(&out_dir.join(&image_rel), &image)?;
            pts::write_pts(&out_dir.join(&points_rel), &landmarks)?;

            Ok(ManifestEntry {
                image_path: image_rel,
                points_path: points_rel,
                knee_id: stem,
                subject_id: format!("{cohort}_s{:05}", i / 2),
                side: if i % 2 == 0 { "L" } else { "R" }.to_string(),
                kl_grade: if p.oa { 3 } else { 0 },
                spacing_mm: cfg.spacing_mm,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{self, Js2Descriptor, LandmarkSet, RoleConfig};

    fn tiny_cfg() -> SynthConfig {
        SynthConfig {
            n_knees: 6,
            n_test: 2,
            ..SynthConfig::default()
        }
    }

    fn load_landmarks(dir: &Path, entry: &ManifestEntry) -> LandmarkSet {
        let raw = pts::read_pts(&entry.points_file(dir)).unwrap();
        LandmarkSet::new(raw, RoleConfig::default_convention()).unwrap()
    }

    #[test]
    fn informative_entries_are_zero_offset_base_pairs() {
        let entries = informative_entries();
        assert_eq!(entries, vec![27, 109, 164]);
        for &k in &entries {
            let (ti, fi) = (k / 13, k % 13);
            assert!((FEMUR_FRACS[fi] - ti as f64 / 16.0).abs() < 1e-12);
            assert!((FEMUR_FRACS[fi] - FOCAL_FRAC).abs() > 1e-12);
            assert!(FEMUR_CLEAN.contains(&fi));
            assert!(TIBIA_CLEAN.contains(&ti));
        }
    }

    #[test]
    fn counts_classes_and_determinism() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg();
        let out_a = synth_generate(&cfg, dir_a.path()).unwrap();
        synth_generate(&cfg, dir_b.path()).unwrap();

        let train = super::super::load_manifest(&out_a.train_manifest).unwrap();
        assert_eq!(train.len(), 6);
        assert_eq!(train.iter().filter(|e| e.label() == 1).count(), 3);
        assert!(train.iter().all(|e| e.kl_grade == 0 || e.kl_grade == 3));

        for rel in ["train.csv", "test.csv", "images/tr_k00002.pgm", "points/te_k00001.pts"] {
            let a = std::fs::read(dir_a.path().join(rel)).unwrap();
            let b = std::fs::read(dir_b.path().join(rel)).unwrap();
            assert_eq!(a, b, "output differs for {rel}");
        }
    }

    #[test]
    fn seed_changes_output() {
        let cfg_a = tiny_cfg();
        let cfg_b = SynthConfig {
            seed: 8,
            ..tiny_cfg()
        };
        let a = knee_params(&cfg_a, "tr", 0, 6);
        let b = knee_params(&cfg_b, "tr", 0, 6);
        assert_ne!(a.focal_gap, b.focal_gap);
    }

    #[test]
    fn zero_jitter_geometry_matches_sampled_params() {
        let cfg = SynthConfig {
            jitter_mm: 0.0,
            ..tiny_cfg()
        };
        let dir = tempfile::tempdir().unwrap();
        let out = synth_generate(&cfg, dir.path()).unwrap();
        let train = super::super::load_manifest(&out.train_manifest).unwrap();
        for (i, entry) in train.iter().enumerate() {
            let p = knee_params(&cfg, "tr", i, train.len());
            let lm = load_landmarks(dir.path(), entry);
            // Width and the focal pairwise distance are rigid invariants,
            // so rotation and translation must not disturb them.
            let width = geometry::tibia_width(&lm).unwrap();
            assert!((width - p.tibia_width).abs() < 1e-9, "{width} vs {}", p.tibia_width);
            let js2 = Js2Descriptor::from_landmarks(&lm).unwrap();
            let k = geometry::js2_index(14, 10).unwrap();
            assert_eq!(k, 192);
            assert!(
                (js2.values[k] - p.focal_gap).abs() < 1e-9,
                "{} vs {}",
                js2.values[k],
                p.focal_gap
            );
        }
    }

    #[test]
    fn jittered_focal_distance_stays_close() {
        let cfg = tiny_cfg();
        let dir = tempfile::tempdir().unwrap();
        let out = synth_generate(&cfg, dir.path()).unwrap();
        let train = super::super::load_manifest(&out.train_manifest).unwrap();
        for (i, entry) in train.iter().enumerate() {
            let p = knee_params(&cfg, "tr", i, train.len());
            let lm = load_landmarks(dir.path(), entry);
            let js2 = Js2Descriptor::from_landmarks(&lm).unwrap();
            assert!((js2.values[192] - p.focal_gap).abs() < 0.8);
        }
    }

    #[test]
    fn gaps_respect_floor() {
        let cfg = SynthConfig::default();
        for i in 0..200 {
            let p = knee_params(&cfg, "tr", i, 200);
            assert!(p.focal_gap >= cfg.gap_floor);
            assert!(p.base_gap >= cfg.gap_floor);
        }
    }

    #[test]
    fn focal_gap_matches_target_distribution() {
        let cfg = SynthConfig::default();
        let n = 1500;
        let (mut oa, mut healthy) = (Vec::new(), Vec::new());
        for i in 0..n {
            let p = knee_params(&cfg, "tr", i, n);
            if p.oa {
                oa.push(p.focal_gap);
            } else {
                healthy.push(p.focal_gap);
            }
        }
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let s = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64)
                .sqrt();
            (m, s)
        };
        let (m_oa, s_oa) = stats(&oa);
        let (m_h, s_h) = stats(&healthy);
        assert!((m_oa - 3.98).abs() < 0.1, "oa mean {m_oa}");
        assert!((s_oa - 1.57).abs() < 0.2, "oa std {s_oa}");
        assert!((m_h - 5.17).abs() < 0.1, "healthy mean {m_h}");
        assert!((s_h - 0.96).abs() < 0.2, "healthy std {s_h}");
    }

    #[test]
    fn rendered_image_has_expected_shape() {
        let cfg = SynthConfig::default();
        let p = knee_params(&cfg, "tr", 0, 4);
        let img = render_image(&cfg, &p);
        assert_eq!(img.width, 380);
        assert_eq!(img.height, 275);
        assert_eq!(img.depth, BitDepth::Sixteen);
        // Bone regions must be markedly brighter than the joint space.
        let at_mm = |x: f64, y: f64| {
            let q = place(&p, Point2D::new(x, y));
            let (px, py) = ((q.x / cfg.spacing_mm) as usize, (q.y / cfg.spacing_mm) as usize);
            img.get(px.min(img.width - 1), py.min(img.height - 1)) as f64
        };
        let cx = CANVAS_W_MM / 2.0;
        let femur = at_mm(cx, femur_surf(&p, 0.5) - 3.0);
        let tibia = at_mm(cx, tibia_surf(&p, 0.5) + 4.0);
        let joint = at_mm(cx, tibia_surf(&p, 0.5) - 0.5 * gap_at(0.5, p.base_gap, p.focal_gap));
        assert!(femur > joint + 8000.0, "femur {femur} joint {joint}");
        assert!(tibia > joint + 6000.0, "tibia {tibia} joint {joint}");
    }

    #[test]
    fn fbm_surface_is_deterministic_and_hurst_sensitive() {
        let a = fbm_surface(65, 0.4, 3);
        let b = fbm_surface(65, 0.4, 3);
        assert_eq!(a, b);
        // Rougher surfaces (lower hurst) have larger high-frequency energy
        // relative to their overall range.
        let hf_ratio = |grid: &[f64], size: usize| {
            let mut diff = 0.0;
            let mut count = 0.0;
            for y in 0..size {
                for x in 1..size {
                    diff += (grid[y * size + x] - grid[y * size + x - 1]).abs();
                    count += 1.0;
                }
            }
            let (lo, hi) = grid
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                });
            diff / count / (hi - lo)
        };
        let rough = hf_ratio(&fbm_surface(129, 0.2, 11), 129);
        let smooth = hf_ratio(&fbm_surface(129, 0.8, 11), 129);
        assert!(rough > 1.5 * smooth, "rough {rough} smooth {smooth}");
    }

    #[test]
    #[should_panic(expected = "2^k + 1")]
    fn fbm_surface_rejects_bad_size() {
        fbm_surface(100, 0.5, 0);
    }

    #[test]
    fn roi_extraction_succeeds_on_generated_knees() {
        let cfg = tiny_cfg();
        let dir = tempfile::tempdir().unwrap();
        let out = synth_generate(&cfg, dir.path()).unwrap();
        let train = super::super::load_manifest(&out.train_manifest).unwrap();
        for entry in &train {
            let lm = load_landmarks(dir.path(), entry);
            let img = pgm::read_pgm(&entry.image_file(dir.path()), entry.spacing_mm).unwrap();
            let (transform, aligned_lm) = geometry::align_to_plateau(&lm).unwrap();
            let center = (
                transform.center.0 / img.spacing,
                transform.center.1 / img.spacing,
            );
            let aligned_img = crate::imaging::rotate_image(&img, transform.rotation, center);
            let (patch, _) = crate::imaging::extract_medial_roi(&aligned_img, &aligned_lm).unwrap();
            assert!(patch.width >= 30, "patch side {}", patch.width);
        }
    }

    #[test]
    fn validate_rejects_bad_fraction() {
        let cfg = SynthConfig {
            oa_fraction: 1.0,
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
