//! Driving-direction mining from taxi GPS trajectories.
//!
//! Trajectories are snapped point-by-point to their nearest segment, then
//! each segment's direction for a query origin/destination is the majority
//! direction among trajectories whose endpoints line up with the query.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomath::{angular_difference, locate_on_polyline, PlanarPoint};
use crate::network::{
    AllowedDirection, Direction, NodeId, RoadNetwork, RoadSegment, SegmentGrid, SegmentId,
};

pub const DEFAULT_ANGLE_TOL: f64 = PI / 4.0;
pub const DEFAULT_SNAP_GATE: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum DirectionError {
    #[error("no trajectory point lies within the snapping gate of any segment")]
    NoMatch,
    #[error("road network is empty")]
    EmptyNetwork,
    #[error("trajectory needs at least two points, got {0}")]
    TooShort(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<PlanarPoint>,
}

impl Trajectory {
    pub fn new(points: Vec<PlanarPoint>) -> Result<Self, DirectionError> {
        if points.len() < 2 {
            return Err(DirectionError::TooShort(points.len()));
        }
        Ok(Trajectory { points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Traversal {
    pub segment: SegmentId,
    pub direction: Direction,
}

impl Traversal {
    pub fn new(segment: SegmentId, direction: Direction) -> Self {
        Traversal { segment, direction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTrajectory {
    pub traversals: Vec<Traversal>,
    pub source: PlanarPoint,
    pub destination: PlanarPoint,
}

impl MatchedTrajectory {
    /// The same trip driven backwards.
    pub fn reversed(&self) -> MatchedTrajectory {
        MatchedTrajectory {
            traversals: self
                .traversals
                .iter()
                .rev()
                .map(|t| Traversal::new(t.segment, t.direction.reversed()))
                .collect(),
            source: self.destination,
            destination: self.source,
        }
    }
}

/// Run of consecutive points snapped to one segment.
struct Run {
    seg: usize,
    first_point: PlanarPoint,
    first_pos: f64,
    last_pos: f64,
}

pub fn match_trajectory(
    traj: &Trajectory,
    network: &RoadNetwork,
    snap_gate: f64,
) -> Result<MatchedTrajectory, DirectionError> {
    TrajectoryMatcher::new(network, snap_gate)?.match_trajectory(traj)
}

/// Nearest-segment snapper reusable across many trajectories.
pub struct TrajectoryMatcher<'a> {
    network: &'a RoadNetwork,
    grid: SegmentGrid,
    snap_gate: f64,
}

impl<'a> TrajectoryMatcher<'a> {
    pub fn new(network: &'a RoadNetwork, snap_gate: f64) -> Result<Self, DirectionError> {
        if network.is_empty() {
            return Err(DirectionError::EmptyNetwork);
        }
        let grid = SegmentGrid::new(network, snap_gate.max(1.0));
        Ok(TrajectoryMatcher { network, grid, snap_gate })
    }

    pub fn match_trajectory(&self, traj: &Trajectory) -> Result<MatchedTrajectory, DirectionError> {
        const TIE: f64 = 1e-6;
        let segs = self.network.segments();
        let mut runs: Vec<Run> = Vec::new();
        for &p in &traj.points {
            let current = runs.last().map(|r| r.seg);
            let mut best: Option<(usize, f64, f64)> = None;
            let mut current_hit: Option<(f64, f64)> = None;
            for i in self.grid.near(p, self.snap_gate) {
                let (d, pos) = locate_on_polyline(p, &segs[i].polyline);
                if Some(i) == current {
                    current_hit = Some((d, pos));
                }
                if best.is_none_or(|(_, bd, _)| d < bd) {
                    best = Some((i, d, pos));
                }
            }
            let Some((mut seg, d, mut pos)) = best else { continue };
            if d > self.snap_gate {
                continue;
            }
            // points at intersections stay on the segment already being driven
            if let (Some(c), Some((cd, cpos))) = (current, current_hit) {
                if cd <= d + TIE {
                    seg = c;
                    pos = cpos;
                }
            }
            match runs.last_mut() {
                Some(r) if r.seg == seg => r.last_pos = pos,
                _ => runs.push(Run { seg, first_point: p, first_pos: pos, last_pos: pos }),
            }
        }
        // a trip starting exactly on an intersection is equally near every
        // segment there; it belongs to the one it drives off along
        if runs.len() >= 2 && (runs[0].last_pos - runs[0].first_pos).abs() <= TIE {
            let p = runs[0].first_point;
            let (d0, _) = locate_on_polyline(p, &segs[runs[0].seg].polyline);
            let (d1, _) = locate_on_polyline(p, &segs[runs[1].seg].polyline);
            if d1 <= d0 + TIE {
                runs.remove(0);
            }
        }
        build_matched(traj, segs, &runs)
    }
}

fn build_matched(traj: &Trajectory, segs: &[RoadSegment], runs: &[Run]) -> Result<MatchedTrajectory, DirectionError> {
    const TIE: f64 = 1e-6;
    if runs.is_empty() {
        return Err(DirectionError::NoMatch);
    }

    let mut traversals: Vec<Traversal> = Vec::with_capacity(runs.len());
    for k in 0..runs.len() {
        let s = &segs[runs[k].seg];
        let delta = runs[k].last_pos - runs[k].first_pos;
        let direction = if delta.abs() > TIE {
            if delta > 0.0 { Direction::Forward } else { Direction::Backward }
        } else {
            infer_from_neighbors(s, k, runs, segs, traversals.last())
        };
        let t = Traversal::new(s.id, direction);
        if traversals.last() != Some(&t) {
            traversals.push(t);
        }
    }
    Ok(MatchedTrajectory {
        traversals,
        source: traj.points[0],
        destination: *traj.points.last().expect("two points"),
    })
}

/// Direction of a run with no along-segment movement, from the node shared
/// with the previous traversal or else the next segment.
fn infer_from_neighbors(
    s: &RoadSegment,
    k: usize,
    runs: &[Run],
    segs: &[RoadSegment],
    prev: Option<&Traversal>,
) -> Direction {
    if let Some(t) = prev {
        let prev_seg = &segs[runs[k - 1].seg];
        let exit = prev_seg.exit(t.direction);
        if exit == s.u {
            return Direction::Forward;
        }
        if exit == s.v {
            return Direction::Backward;
        }
    }
    if let Some(next) = runs.get(k + 1) {
        let n = &segs[next.seg];
        if n.u == s.v || n.v == s.v {
            return Direction::Forward;
        }
        if n.u == s.u || n.v == s.u {
            return Direction::Backward;
        }
    }
    Direction::Forward
}

fn heading_close(from: PlanarPoint, to: PlanarPoint, ref_from: PlanarPoint, ref_to: PlanarPoint, tol: f64) -> bool {
    match ((to - from).heading(), (ref_to - ref_from).heading()) {
        (Some(a), Some(b)) => angular_difference(a, b) <= tol,
        // coincident points carry no directional evidence against the trip
        _ => true,
    }
}

/// Segment endpoint nearer to `start` (ties: `u`).
pub fn near_node(segment: &RoadSegment, network: &RoadNetwork, start: PlanarPoint) -> NodeId {
    let pu = network.node(segment.u).expect("endpoint");
    let pv = network.node(segment.v).expect("endpoint");
    if pv.distance(start) < pu.distance(start) {
        segment.v
    } else {
        segment.u
    }
}

/// Majority direction of `segment` among trajectories whose source and
/// destination line up with `start → end` as seen from the segment's near
/// node. `Both` when nothing is kept or the vote ties.
pub fn determine_direction(
    segment: &RoadSegment,
    network: &RoadNetwork,
    trajectories: &[MatchedTrajectory],
    start: PlanarPoint,
    end: PlanarPoint,
    angle_tol: f64,
) -> AllowedDirection {
    let near = network.node(near_node(segment, network, start)).expect("endpoint");
    let (mut forward, mut backward) = (0usize, 0usize);
    for t in trajectories {
        if !t.traversals.iter().any(|x| x.segment == segment.id) {
            continue;
        }
        let kept = heading_close(t.source, near, start, near, angle_tol)
            && heading_close(near, t.destination, near, end, angle_tol);
        if !kept {
            continue;
        }
        for x in t.traversals.iter().filter(|x| x.segment == segment.id) {
            match x.direction {
                Direction::Forward => forward += 1,
                Direction::Backward => backward += 1,
            }
        }
    }
    match forward.cmp(&backward) {
        std::cmp::Ordering::Greater => AllowedDirection::Forward,
        std::cmp::Ordering::Less => AllowedDirection::Backward,
        std::cmp::Ordering::Equal => AllowedDirection::Both,
    }
}

/// Directions for every segment of `network`, in segment order.
pub fn determine_all(
    network: &RoadNetwork,
    trajectories: &[MatchedTrajectory],
    start: PlanarPoint,
    end: PlanarPoint,
    angle_tol: f64,
) -> Vec<(SegmentId, AllowedDirection)> {
    network
        .segments()
        .iter()
        .map(|s| (s.id, determine_direction(s, network, trajectories, start, end, angle_tol)))
        .collect()
}
