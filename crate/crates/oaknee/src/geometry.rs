//! Landmark containers, rigid alignment, the JS² descriptor and
//! joint-space-width measurements.
//!
//! All coordinates are in millimeters. The canonical descriptor pairs 17
//! tibia landmarks with 13 femur landmarks, giving a 221-vector; entry
//! `k = tibia_i * 13 + femur_i` (outer loop tibia, inner loop femur).

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const N_FEMUR: usize = 13;
pub const N_TIBIA: usize = 17;
pub const JS2_LEN: usize = N_FEMUR * N_TIBIA;
/// Default contour densification step for minJSW, in mm.
pub const DEFAULT_DENSIFY_STEP: f64 = 0.1;
/// Canonical fixed-JSW query locations (fraction of tibia width from the
/// medial extent).
pub const MEDIAL_FJSW_X: f64 = 0.225;
pub const LATERAL_FJSW_X: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid landmarks: {0}")]
    InvalidLandmarks(String),
    #[error("index out of range: {0}")]
    IndexError(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("query location x={0} outside contour overlap")]
    OutOfSupport(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn dist(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Which landmark indices play which anatomical role. Shipped as a JSON
/// config because the 13/17 subsets of the 74 detector points are a
/// convention, not part of the point file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleConfig {
    pub femur_indices: Vec<usize>,
    pub tibia_indices: Vec<usize>,
    /// Two indices defining the tibial-plateau line.
    pub plateau_pair: [usize; 2],
    /// Two indices defining the tibia width endpoints; the first is the
    /// medial extent.
    pub tibia_extent_pair: [usize; 2],
}

impl RoleConfig {
    /// Default convention used by the synthetic generator: femur contour at
    /// indices 0..13, tibia contour at 13..30 ordered lateral to medial.
    pub fn default_convention() -> Self {
        RoleConfig {
            femur_indices: (0..N_FEMUR).collect(),
            tibia_indices: (N_FEMUR..N_FEMUR + N_TIBIA).collect(),
            plateau_pair: [15, 27],
            tibia_extent_pair: [29, 13],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub points: Vec<Point2D>,
    pub roles: RoleConfig,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point2D>, roles: RoleConfig) -> Result<Self, GeometryError> {
        let set = LandmarkSet { points, roles };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if let Some(p) = self.points.iter().find(|p| !p.is_finite()) {
            return Err(GeometryError::InvalidLandmarks(format!(
                "non-finite point ({}, {})",
                p.x, p.y
            )));
        }
        let n = self.points.len();
        let check_list = |name: &str, list: &[usize], expect: usize| {
            if list.len() != expect {
                return Err(GeometryError::InvalidLandmarks(format!(
                    "{name} must have exactly {expect} entries, got {}",
                    list.len()
                )));
            }
            let mut seen = std::collections::HashSet::new();
            for &i in list {
                if i >= n {
                    return Err(GeometryError::IndexError(format!(
                        "{name} index {i} out of bounds for {n} points"
                    )));
                }
                if !seen.insert(i) {
                    return Err(GeometryError::InvalidLandmarks(format!(
                        "{name} contains duplicate index {i}"
                    )));
                }
            }
            Ok(())
        };
        check_list("femur_indices", &self.roles.femur_indices, N_FEMUR)?;
        check_list("tibia_indices", &self.roles.tibia_indices, N_TIBIA)?;
        for &i in self
            .roles
            .plateau_pair
            .iter()
            .chain(self.roles.tibia_extent_pair.iter())
        {
            if i >= n {
                return Err(GeometryError::IndexError(format!(
                    "pair index {i} out of bounds for {n} points"
                )));
            }
        }
        Ok(())
    }

    pub fn femur_points(&self) -> Vec<Point2D> {
        self.roles
            .femur_indices
            .iter()
            .map(|&i| self.points[i])
            .collect()
    }

    pub fn tibia_points(&self) -> Vec<Point2D> {
        self.roles
            .tibia_indices
            .iter()
            .map(|&i| self.points[i])
            .collect()
    }
}

/// The 221-element tibia-femur pairwise distance descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Js2Descriptor {
    pub values: Vec<f64>,
}

impl Js2Descriptor {
    pub fn from_landmarks(lm: &LandmarkSet) -> Result<Self, GeometryError> {
        let values = compute_js2(&lm.tibia_points(), &lm.femur_points())?;
        debug_assert_eq!(values.len(), JS2_LEN);
        Ok(Js2Descriptor { values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JswMeasurements {
    pub min_jsw: f64,
    pub med_fjsw: f64,
    pub lat_fjsw: f64,
    pub contours_intersect: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    /// Radians, normalized to (-pi, pi].
    pub rotation: f64,
    pub translation: (f64, f64),
    /// Rotation center used when composing the transform.
    pub center: (f64, f64),
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: 0.0,
            translation: (0.0, 0.0),
            center: (0.0, 0.0),
        }
    }

    pub fn apply(&self, p: Point2D) -> Point2D {
        let (s, c) = self.rotation.sin_cos();
        let dx = p.x - self.center.0;
        let dy = p.y - self.center.1;
        Point2D::new(
            self.center.0 + c * dx - s * dy + self.translation.0,
            self.center.1 + s * dx + c * dy + self.translation.1,
        )
    }
}

/// Pairwise tibia-femur Euclidean distances, outer loop over tibia points,
/// inner loop over femur points.
pub fn compute_js2(
    tibia_pts: &[Point2D],
    femur_pts: &[Point2D],
) -> Result<Vec<f64>, GeometryError> {
    if tibia_pts.is_empty() || femur_pts.is_empty() {
        return Err(GeometryError::InvalidLandmarks(
            "compute_js2 requires non-empty tibia and femur point lists".into(),
        ));
    }
    let mut out = Vec::with_capacity(tibia_pts.len() * femur_pts.len());
    for t in tibia_pts {
        for f in femur_pts {
            out.push(t.dist(f));
        }
    }
    Ok(out)
}

/// Flat descriptor index for a (tibia, femur) pair: tibia_i*13 + femur_i.
pub fn js2_index(tibia_i: usize, femur_i: usize) -> Result<usize, GeometryError> {
    if tibia_i >= N_TIBIA || femur_i >= N_FEMUR {
        return Err(GeometryError::IndexError(format!(
            "js2_index({tibia_i},{femur_i}) outside {N_TIBIA}x{N_FEMUR}"
        )));
    }
    Ok(tibia_i * N_FEMUR + femur_i)
}

/// Inverse of [`js2_index`].
pub fn js2_index_inverse(k: usize) -> Result<(usize, usize), GeometryError> {
    if k >= JS2_LEN {
        return Err(GeometryError::IndexError(format!(
            "descriptor index {k} outside 0..{JS2_LEN}"
        )));
    }
    Ok((k / N_FEMUR, k % N_FEMUR))
}

/// Euclidean distance between the two configured tibia-extent landmarks.
pub fn tibia_width(lm: &LandmarkSet) -> Result<f64, GeometryError> {
    let a = lm.points[lm.roles.tibia_extent_pair[0]];
    let b = lm.points[lm.roles.tibia_extent_pair[1]];
    let w = a.dist(&b);
    if w == 0.0 {
        return Err(GeometryError::DegenerateGeometry(
            "tibia extent points coincide".into(),
        ));
    }
    Ok(w)
}

/// Rotates the landmark set about the plateau-pair midpoint so the plateau
/// line becomes horizontal.
pub fn align_to_plateau(
    lm: &LandmarkSet,
) -> Result<(RigidTransform, LandmarkSet), GeometryError> {
    let a = lm.points[lm.roles.plateau_pair[0]];
    let b = lm.points[lm.roles.plateau_pair[1]];
    if a == b {
        return Err(GeometryError::DegenerateGeometry(
            "plateau points coincide".into(),
        ));
    }
    let theta = (b.y - a.y).atan2(b.x - a.x);
    let mut rot = -theta;
    if rot <= -std::f64::consts::PI {
        rot += 2.0 * std::f64::consts::PI;
    }
    let transform = RigidTransform {
        rotation: rot,
        translation: (0.0, 0.0),
        center: ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0),
    };
    let aligned = LandmarkSet {
        points: lm.points.iter().map(|&p| transform.apply(p)).collect(),
        roles: lm.roles.clone(),
    };
    Ok((transform, aligned))
}

/// Result of the minJSW measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinJsw {
    pub mm: f64,
    /// Set when the femur and tibia polylines intersect; `mm` is then 0.
    pub contours_intersect: bool,
}

/// Minimum distance from the densified tibia contour to the femur polyline.
///
/// Each polyline segment is resampled at ceil(len/step) uniform
/// subdivisions, which makes the measurement scale exactly with the
/// geometry when `densify_step` is scaled along.
pub fn min_jsw(lm: &LandmarkSet, densify_step: f64) -> Result<MinJsw, GeometryError> {
    if densify_step <= 0.0 {
        return Err(GeometryError::InvalidLandmarks(
            "densify_step must be > 0".into(),
        ));
    }
    let femur = lm.femur_points();
    let tibia = lm.tibia_points();
    if polylines_intersect(&femur, &tibia) {
        return Ok(MinJsw {
            mm: 0.0,
            contours_intersect: true,
        });
    }
    let samples = densify_polyline(&tibia, densify_step);
    let mut best = f64::INFINITY;
    for p in &samples {
        let d = point_to_polyline(*p, &femur);
        if d < best {
            best = d;
        }
    }
    Ok(MinJsw {
        mm: best,
        contours_intersect: best == 0.0,
    })
}

/// Vertical femur-tibia gap at a normalized location along the tibia
/// extent, divided by the tibia width. The landmark set must already be
/// plateau-aligned.
pub fn fixed_jsw(lm: &LandmarkSet, x_norm: f64) -> Result<f64, GeometryError> {
    if !(0.0..=1.0).contains(&x_norm) {
        return Err(GeometryError::IndexError(format!(
            "x_norm {x_norm} outside [0,1]"
        )));
    }
    let width = tibia_width(lm)?;
    let medial = lm.points[lm.roles.tibia_extent_pair[0]];
    let lateral = lm.points[lm.roles.tibia_extent_pair[1]];
    let xq = medial.x + x_norm * (lateral.x - medial.x);

    let femur_y = polyline_y_at(&lm.femur_points(), xq, false)
        .ok_or(GeometryError::OutOfSupport(x_norm))?;
    let tibia_y = polyline_y_at(&lm.tibia_points(), xq, true)
        .ok_or(GeometryError::OutOfSupport(x_norm))?;
    // Image convention: y grows downward and the femur sits above the tibia.
    let gap = (tibia_y - femur_y).max(0.0);
    Ok(gap / width)
}

/// Convenience wrapper: aligns, then measures minJSW and both fixed JSWs.
pub fn jsw_measurements(lm: &LandmarkSet) -> Result<JswMeasurements, GeometryError> {
    let (_, aligned) = align_to_plateau(lm)?;
    let mj = min_jsw(&aligned, DEFAULT_DENSIFY_STEP)?;
    let med = fixed_jsw(&aligned, MEDIAL_FJSW_X)?;
    let lat = fixed_jsw(&aligned, LATERAL_FJSW_X)?;
    Ok(JswMeasurements {
        min_jsw: mj.mm,
        med_fjsw: med,
        lat_fjsw: lat,
        contours_intersect: mj.contours_intersect,
    })
}

fn densify_polyline(pts: &[Point2D], step: f64) -> Vec<Point2D> {
    let mut out = Vec::new();
    for seg in pts.windows(2) {
        let len = seg[0].dist(&seg[1]);
        let m = (len / step).ceil().max(1.0) as usize;
        for j in 0..m {
            let t = j as f64 / m as f64;
            out.push(Point2D::new(
                seg[0].x + t * (seg[1].x - seg[0].x),
                seg[0].y + t * (seg[1].y - seg[0].y),
            ));
        }
    }
    if let Some(last) = pts.last() {
        out.push(*last);
    }
    out
}

fn point_to_segment(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.dist(&a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.dist(&Point2D::new(a.x + t * abx, a.y + t * aby))
}

fn point_to_polyline(p: Point2D, pts: &[Point2D]) -> f64 {
    pts.windows(2)
        .map(|seg| point_to_segment(p, seg[0], seg[1]))
        .fold(f64::INFINITY, f64::min)
}

fn segments_intersect(p1: Point2D, p2: Point2D, p3: Point2D, p4: Point2D) -> bool {
    let d = |a: Point2D, b: Point2D, c: Point2D| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let d1 = d(p3, p4, p1);
    let d2 = d(p3, p4, p2);
    let d3 = d(p1, p2, p3);
    let d4 = d(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2D, b: Point2D, c: Point2D| {
        d(a, b, c) == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(p3, p4, p1) || on(p3, p4, p2) || on(p1, p2, p3) || on(p1, p2, p4)
}

fn polylines_intersect(a: &[Point2D], b: &[Point2D]) -> bool {
    a.windows(2).any(|s1| {
        b.windows(2)
            .any(|s2| segments_intersect(s1[0], s1[1], s2[0], s2[1]))
    })
}

/// y of a vertical-line crossing with the polyline at x=xq. With several
/// crossings, returns the smallest y for `take_min`, else the largest;
/// None when xq is outside every segment's x span.
fn polyline_y_at(pts: &[Point2D], xq: f64, take_min: bool) -> Option<f64> {
    let mut best: Option<f64> = None;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let (lo, hi) = (a.x.min(b.x), a.x.max(b.x));
        if xq < lo || xq > hi {
            continue;
        }
        let y = if a.x == b.x {
            if take_min {
                a.y.min(b.y)
            } else {
                a.y.max(b.y)
            }
        } else {
            a.y + (xq - a.x) / (b.x - a.x) * (b.y - a.y)
        };
        best = Some(match best {
            None => y,
            Some(cur) => {
                if take_min {
                    cur.min(y)
                } else {
                    cur.max(y)
                }
            }
        });
    }
    best
}
