//! Event localization from shared photographing attention.
//!
//! Every photo contributes an attention trapezoid in front of the camera.
//! Grid cells whose centroids fall inside a trapezoid receive a location
//! weight, the per-cell sums are max-normalized, and cells above `loc_th`
//! form the event region whose centroid is the estimate.
//!
//! Trapezoid construction: `U` is the camera, the near edge sits `er` meters
//! ahead of it and the far edge `mvd` meters ahead, both spanning the half
//! view angle `eta`. The weighting reference point `S` is the midpoint of the
//! axis between the two edges, so weights peak mid-field.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomath::{
    angular_difference, point_in_convex_polygon, BoundingBox, Heading, PlanarPoint,
};

#[derive(Debug, Error, PartialEq)]
pub enum LocalizeError {
    #[error("at least two observations are required for dynamic mvd, got {0}")]
    FewerThanTwoObservations(usize),
    #[error("no observations")]
    NoObservations,
    #[error("invalid trapezoid geometry: mvd {mvd} must exceed er {er}")]
    InvalidGeometry { mvd: f64, er: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no grid cell centroid falls inside any attention trapezoid")]
    NoCoverage,
    #[error("no cell exceeds loc_th {0}")]
    EmptyRegion(f64),
}

/// One crowd picture's photographing context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoObservation {
    pub location: PlanarPoint,
    pub heading: Heading,
    pub timestamp: f64,
    pub contributor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvdMode {
    Static(f64),
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidConfig {
    /// Location error in meters.
    pub er: f64,
    /// Half view angle in radians.
    pub eta: f64,
    pub mvd_mode: MvdMode,
    pub mvd_min: f64,
    pub mvd_max: f64,
}

impl Default for TrapezoidConfig {
    fn default() -> Self {
        TrapezoidConfig {
            er: 5.0,
            eta: PI / 6.0,
            mvd_mode: MvdMode::Dynamic,
            mvd_min: 10.0,
            mvd_max: 100.0,
        }
    }
}

impl TrapezoidConfig {
    /// Fixed-range configuration used by the static-mvd baseline.
    pub fn static_mvd(mvd: f64) -> Self {
        TrapezoidConfig { mvd_mode: MvdMode::Static(mvd), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), LocalizeError> {
        let bad = |m: &str| Err(LocalizeError::InvalidConfig(m.to_string()));
        if !(self.eta > 0.0 && self.eta < PI / 2.0) {
            return bad("eta must lie in (0, pi/2)");
        }
        if !(self.er >= 0.0 && self.er < self.mvd_min && self.mvd_min <= self.mvd_max) {
            return bad("require 0 <= er < mvd_min <= mvd_max");
        }
        if let MvdMode::Static(m) = self.mvd_mode {
            if !(m > self.er) || !m.is_finite() {
                return bad("static mvd must be finite and exceed er");
            }
        }
        Ok(())
    }
}

/// How a covered cell is weighted by one trapezoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Normal density of the normalized distance to the trapezoid's mid-axis point.
    Gaussian,
    /// Every covered cell gets weight 1.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub glen: f64,
    pub sigma: f64,
    pub loc_th: f64,
    pub weighting: Weighting,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { glen: 5.0, sigma: 0.5, loc_th: 0.8, weighting: Weighting::Gaussian }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), LocalizeError> {
        if !(self.glen > 0.0 && self.glen.is_finite()) {
            return Err(LocalizeError::InvalidConfig("glen must be positive".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(LocalizeError::InvalidConfig("sigma must be positive".into()));
        }
        if !(self.loc_th > 0.0 && self.loc_th <= 1.0) {
            return Err(LocalizeError::InvalidConfig("loc_th must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrapezoid {
    /// near-left, near-right, far-right, far-left (counterclockwise)
    pub vertices: [PlanarPoint; 4],
    pub axis_mid: PlanarPoint,
    pub apex: PlanarPoint,
}

impl AttentionTrapezoid {
    pub fn contains(&self, p: PlanarPoint) -> bool {
        point_in_convex_polygon(p, &self.vertices)
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of_points(&self.vertices).expect("four vertices")
    }
}

/// Integer cell coordinates; cell `(i, j)` spans
/// `[origin.x + i·glen, origin.x + (i+1)·glen) × [origin.y + j·glen, …)`.
pub type CellIndex = (i64, i64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionGrid {
    pub origin: PlanarPoint,
    pub glen: f64,
    /// Normalized accumulated weight of every covered cell.
    pub cells: BTreeMap<CellIndex, f64>,
}

impl AttentionGrid {
    pub fn cell_centroid(&self, idx: CellIndex) -> PlanarPoint {
        cell_centroid(self.origin, self.glen, idx)
    }

    pub fn max_alc(&self) -> f64 {
        self.cells.values().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLocation {
    pub region: Vec<CellIndex>,
    pub centroid: PlanarPoint,
}

fn cell_centroid(origin: PlanarPoint, glen: f64, (i, j): CellIndex) -> PlanarPoint {
    PlanarPoint::new(
        origin.x + (i as f64 + 0.5) * glen,
        origin.y + (j as f64 + 0.5) * glen,
    )
}

/// Dynamic maximum visual distance from the farthest-apart observer pair.
pub fn compute_dmvd(
    observations: &[PhotoObservation],
    cfg: &TrapezoidConfig,
) -> Result<f64, LocalizeError> {
    if observations.len() < 2 {
        return Err(LocalizeError::FewerThanTwoObservations(observations.len()));
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..observations.len() {
        for j in i + 1..observations.len() {
            let d = observations[i].location.distance(observations[j].location);
            // strict comparison keeps the lexicographically first pair on ties
            if best.is_none_or(|(bd, _, _)| d > bd) {
                best = Some((d, i, j));
            }
        }
    }
    let (max_d, i, j) = best.expect("at least one pair");
    let half_angle = angular_difference(observations[i].heading, observations[j].heading) / 2.0;
    let s = half_angle.sin();
    let raw = 0.5 * max_d / s;
    let mvd = if raw.is_nan() || s <= 0.0 { cfg.mvd_max } else { raw };
    Ok(mvd.clamp(cfg.mvd_min, cfg.mvd_max))
}

pub fn build_trapezoid(
    obs: &PhotoObservation,
    mvd: f64,
    cfg: &TrapezoidConfig,
) -> Result<AttentionTrapezoid, LocalizeError> {
    if !(mvd > cfg.er) {
        return Err(LocalizeError::InvalidGeometry { mvd, er: cfg.er });
    }
    let u = obs.heading.unit();
    let left = PlanarPoint::new(-u.y, u.x);
    let apex = obs.location;
    let tan = cfg.eta.tan();
    let near_c = apex + u * cfg.er;
    let far_c = apex + u * mvd;
    let near_w = cfg.er * tan;
    let far_w = mvd * tan;
    Ok(AttentionTrapezoid {
        vertices: [
            near_c + left * near_w,
            near_c + left * -near_w,
            far_c + left * -far_w,
            far_c + left * far_w,
        ],
        axis_mid: apex + u * ((cfg.er + mvd) / 2.0),
        apex,
    })
}

/// Normal-density weight of a grid centroid inside `trap`.
pub fn loc_weight(grid_centroid: PlanarPoint, trap: &AttentionTrapezoid, sigma: f64) -> f64 {
    let x = grid_centroid.distance(trap.axis_mid) / trap.apex.distance(trap.axis_mid);
    gaussian_density(x, sigma)
}

fn gaussian_density(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Effective mvd for a set of observations under `cfg`.
pub fn resolve_mvd(
    observations: &[PhotoObservation],
    cfg: &TrapezoidConfig,
) -> Result<f64, LocalizeError> {
    match cfg.mvd_mode {
        MvdMode::Static(m) => {
            if observations.is_empty() {
                Err(LocalizeError::NoObservations)
            } else {
                Ok(m)
            }
        }
        MvdMode::Dynamic => compute_dmvd(observations, cfg),
    }
}

pub fn localize(
    observations: &[PhotoObservation],
    tcfg: &TrapezoidConfig,
    gcfg: &GridConfig,
) -> Result<(AttentionGrid, EventLocation), LocalizeError> {
    tcfg.validate()?;
    gcfg.validate()?;
    let mvd = resolve_mvd(observations, tcfg)?;
    let traps = observations
        .iter()
        .map(|o| build_trapezoid(o, mvd, tcfg))
        .collect::<Result<Vec<_>, _>>()?;

    let bbox = traps
        .iter()
        .map(AttentionTrapezoid::bounding_box)
        .reduce(BoundingBox::union)
        .ok_or(LocalizeError::NoObservations)?;
    let glen = gcfg.glen;
    let origin = PlanarPoint::new(
        (bbox.min.x / glen).floor() * glen,
        (bbox.min.y / glen).floor() * glen,
    );

    // Sums are accumulated in trapezoid order for every cell.
    let mut sums: BTreeMap<CellIndex, f64> = BTreeMap::new();
    for trap in &traps {
        let tb = trap.bounding_box();
        let i0 = ((tb.min.x - origin.x) / glen).floor() as i64;
        let i1 = ((tb.max.x - origin.x) / glen).floor() as i64;
        let j0 = ((tb.min.y - origin.y) / glen).floor() as i64;
        let j1 = ((tb.max.y - origin.y) / glen).floor() as i64;
        for i in i0..=i1 {
            for j in j0..=j1 {
                let c = cell_centroid(origin, glen, (i, j));
                if !trap.contains(c) {
                    continue;
                }
                let w = match gcfg.weighting {
                    Weighting::Gaussian => loc_weight(c, trap, gcfg.sigma),
                    Weighting::Uniform => 1.0,
                };
                *sums.entry((i, j)).or_insert(0.0) += w;
            }
        }
    }

    let max = sums.values().copied().fold(0.0, f64::max);
    if sums.is_empty() || max <= 0.0 {
        return Err(LocalizeError::NoCoverage);
    }
    let cells: BTreeMap<CellIndex, f64> = sums.into_iter().map(|(k, v)| (k, v / max)).collect();
    let grid = AttentionGrid { origin, glen, cells };
    let location = threshold_region(&grid, gcfg.loc_th)?;
    Ok((grid, location))
}

/// Cells with `alc > loc_th` and the mean of their centroids.
pub fn threshold_region(grid: &AttentionGrid, loc_th: f64) -> Result<EventLocation, LocalizeError> {
    let region: Vec<CellIndex> = grid
        .cells
        .iter()
        .filter(|(_, &alc)| alc > loc_th)
        .map(|(&k, _)| k)
        .collect();
    if region.is_empty() {
        return Err(LocalizeError::EmptyRegion(loc_th));
    }
    let n = region.len() as f64;
    let (sx, sy) = region.iter().fold((0.0, 0.0), |(sx, sy), &idx| {
        let c = grid.cell_centroid(idx);
        (sx + c.x, sy + c.y)
    });
    Ok(EventLocation { region, centroid: PlanarPoint::new(sx / n, sy / n) })
}

/// Euclidean distance between an estimate and the ground truth.
pub fn localization_error(estimate: PlanarPoint, truth: PlanarPoint) -> f64 {
    estimate.distance(truth)
}
