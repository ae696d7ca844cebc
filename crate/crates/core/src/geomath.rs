//! Planar geometry shared by every other module.
//!
//! All analysis runs in a local metric frame obtained with an equirectangular
//! projection around a fixed origin. Distances are meters, angles radians.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
}

/// WGS84 position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(GeoPoint { lat, lon })
    }
}

/// Meters east (`x`) and north (`y`) of a projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ORIGIN: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: PlanarPoint) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: PlanarPoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: PlanarPoint) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Heading of this vector, or `None` for the zero vector.
    pub fn heading(self) -> Option<Heading> {
        if self.x == 0.0 && self.y == 0.0 {
            None
        } else {
            Some(Heading::from_radians(self.y.atan2(self.x)))
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanarPoint {
    type Output = PlanarPoint;
    fn add(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanarPoint {
    type Output = PlanarPoint;
    fn sub(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for PlanarPoint {
    type Output = PlanarPoint;
    fn mul(self, k: f64) -> PlanarPoint {
        PlanarPoint::new(self.x * k, self.y * k)
    }
}

/// Direction measured counterclockwise from due east, kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Heading(f64);

impl Heading {
    pub fn from_radians(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if t >= TAU {
            t = 0.0;
        }
        Heading(t)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Heading::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn unit(self) -> PlanarPoint {
        PlanarPoint::new(self.0.cos(), self.0.sin())
    }

    pub fn rotated(self, by: f64) -> Self {
        Heading::from_radians(self.0 + by)
    }
}

/// Equirectangular projection around a fixed origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub origin: GeoPoint,
}

impl Projection {
    pub fn new(origin: GeoPoint) -> Self {
        Projection { origin }
    }

    /// Projection centered on the mean latitude/longitude of `points`.
    pub fn centered_on(points: &[GeoPoint]) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        let n = points.len() as f64;
        let lat = points.iter().map(|p| p.lat).sum::<f64>() / n;
        let lon = points.iter().map(|p| p.lon).sum::<f64>() / n;
        Some(Projection::new(GeoPoint { lat, lon }))
    }

    pub fn project(&self, p: GeoPoint) -> PlanarPoint {
        project(p, self.origin)
    }

    pub fn unproject(&self, p: PlanarPoint) -> GeoPoint {
        unproject(p, self.origin)
    }
}

pub fn project(p: GeoPoint, origin: GeoPoint) -> PlanarPoint {
    let k = EARTH_RADIUS_M * PI / 180.0;
    PlanarPoint {
        x: (p.lon - origin.lon) * origin.lat.to_radians().cos() * k,
        y: (p.lat - origin.lat) * k,
    }
}

/// Inverse of [`project`] for the same origin.
pub fn unproject(p: PlanarPoint, origin: GeoPoint) -> GeoPoint {
    let k = EARTH_RADIUS_M * PI / 180.0;
    GeoPoint {
        lat: origin.lat + p.y / k,
        lon: origin.lon + p.x / (origin.lat.to_radians().cos() * k),
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_to_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    p.distance(closest_point_on_segment(p, a, b).0)
}

/// Closest point on `ab` to `p` and its parameter `t ∈ [0, 1]` along the segment.
pub fn closest_point_on_segment(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> (PlanarPoint, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Sum of segment lengths along a polyline.
pub fn polyline_length(line: &[PlanarPoint]) -> f64 {
    line.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Minimum distance from `p` to any constituent segment of `line`.
pub fn point_to_polyline_distance(p: PlanarPoint, line: &[PlanarPoint]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => p.distance(*only),
        _ => line
            .windows(2)
            .map(|w| point_to_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Distance from `p` to `line` together with the arc-length position of the
/// closest point, measured from the first vertex.
pub fn locate_on_polyline(p: PlanarPoint, line: &[PlanarPoint]) -> (f64, f64) {
    if line.len() < 2 {
        return (point_to_polyline_distance(p, line), 0.0);
    }
    let mut best = (f64::INFINITY, 0.0);
    let mut walked = 0.0;
    for w in line.windows(2) {
        let (q, t) = closest_point_on_segment(p, w[0], w[1]);
        let seg_len = w[0].distance(w[1]);
        let d = p.distance(q);
        if d < best.0 {
            best = (d, walked + t * seg_len);
        }
        walked += seg_len;
    }
    best
}

/// Minimal absolute difference between two headings, in `[0, π]`.
pub fn angular_difference(a: Heading, b: Heading) -> f64 {
    let d = (a.radians() - b.radians()).abs();
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Closed point-in-polygon test for a convex polygon with counterclockwise
/// vertices. Zero-length edges are ignored so triangles given as degenerate
/// quadrilaterals still work.
pub fn point_in_convex_polygon(p: PlanarPoint, vertices: &[PlanarPoint]) -> bool {
    const EPS: f64 = 1e-9;
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let edge = b - a;
        let len = edge.norm();
        if len < EPS {
            continue;
        }
        // signed distance to the edge's supporting line
        if edge.cross(p - a) / len < -EPS {
            return false;
        }
    }
    true
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: PlanarPoint,
    pub max: PlanarPoint,
}

impl BoundingBox {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a PlanarPoint>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = BoundingBox { min: first, max: first };
        for p in it {
            bb.include(*p);
        }
        Some(bb)
    }

    pub fn include(&mut self, p: PlanarPoint) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(mut self, other: BoundingBox) -> Self {
        self.include(other.min);
        self.include(other.max);
        self
    }

    pub fn expanded(self, margin: f64) -> Self {
        BoundingBox {
            min: PlanarPoint::new(self.min.x - margin, self.min.y - margin),
            max: PlanarPoint::new(self.max.x + margin, self.max.y + margin),
        }
    }

    pub fn contains(&self, p: PlanarPoint) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}
