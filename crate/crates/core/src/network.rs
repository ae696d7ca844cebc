//! Road network shared by scoring, direction mining and planning.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomath::{polyline_length, BoundingBox, PlanarPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Direction of travel along a segment; `Forward` is `u → v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllowedDirection {
    Forward,
    Backward,
    Both,
}

impl AllowedDirection {
    pub fn permits(self, d: Direction) -> bool {
        matches!(
            (self, d),
            (AllowedDirection::Both, _)
                | (AllowedDirection::Forward, Direction::Forward)
                | (AllowedDirection::Backward, Direction::Backward)
        )
    }

    pub fn permitted(self) -> &'static [Direction] {
        match self {
            AllowedDirection::Forward => &[Direction::Forward],
            AllowedDirection::Backward => &[Direction::Backward],
            AllowedDirection::Both => &[Direction::Forward, Direction::Backward],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AllowedDirection::Forward => "forward",
            AllowedDirection::Backward => "backward",
            AllowedDirection::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Some(AllowedDirection::Forward),
            "backward" => Some(AllowedDirection::Backward),
            "both" => Some(AllowedDirection::Both),
            _ => None,
        }
    }
}

impl From<Direction> for AllowedDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Forward => AllowedDirection::Forward,
            Direction::Backward => AllowedDirection::Backward,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("segment {segment} references unknown node {node}")]
    DanglingEndpoint { segment: SegmentId, node: NodeId },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate segment id {0}")]
    DuplicateSegment(SegmentId),
    #[error("segment {0} has zero length")]
    ZeroLength(SegmentId),
    #[error("non-finite coordinate on {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub id: SegmentId,
    pub u: NodeId,
    pub v: NodeId,
    /// Full geometry from `u`'s point to `v`'s point.
    pub polyline: Vec<PlanarPoint>,
    pub length: f64,
}

impl RoadSegment {
    /// Node where a traversal in direction `d` starts.
    pub fn entry(&self, d: Direction) -> NodeId {
        match d {
            Direction::Forward => self.u,
            Direction::Backward => self.v,
        }
    }

    pub fn exit(&self, d: Direction) -> NodeId {
        match d {
            Direction::Forward => self.v,
            Direction::Backward => self.u,
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of_points(&self.polyline).expect("polyline has endpoints")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    nodes: BTreeMap<NodeId, PlanarPoint>,
    /// Sorted by id.
    segments: Vec<RoadSegment>,
    #[serde(skip)]
    index: HashMap<SegmentId, usize>,
}

impl RoadNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, at: PlanarPoint) -> Result<(), NetworkError> {
        if !at.is_finite() {
            return Err(NetworkError::NonFinite(format!("node {id}")));
        }
        if self.nodes.insert(id, at).is_some() {
            return Err(NetworkError::DuplicateNode(id));
        }
        Ok(())
    }

    /// Adds a segment. `interior` holds optional shape points; if its first or
    /// last point is within a meter of the matching node it is taken to be
    /// that endpoint.
    pub fn add_segment(
        &mut self,
        id: SegmentId,
        u: NodeId,
        v: NodeId,
        interior: &[PlanarPoint],
    ) -> Result<(), NetworkError> {
        if self.index.contains_key(&id) {
            return Err(NetworkError::DuplicateSegment(id));
        }
        let pu = *self.nodes.get(&u).ok_or(NetworkError::DanglingEndpoint { segment: id, node: u })?;
        let pv = *self.nodes.get(&v).ok_or(NetworkError::DanglingEndpoint { segment: id, node: v })?;
        let mut shape: &[PlanarPoint] = interior;
        if shape.first().is_some_and(|p| p.distance(pu) < 1.0) {
            shape = &shape[1..];
        }
        if shape.last().is_some_and(|p| p.distance(pv) < 1.0) {
            shape = &shape[..shape.len() - 1];
        }
        if shape.iter().any(|p| !p.is_finite()) {
            return Err(NetworkError::NonFinite(format!("segment {id}")));
        }
        let mut polyline = Vec::with_capacity(shape.len() + 2);
        polyline.push(pu);
        polyline.extend_from_slice(shape);
        polyline.push(pv);
        let length = polyline_length(&polyline);
        if !(length > 0.0) {
            return Err(NetworkError::ZeroLength(id));
        }
        let seg = RoadSegment { id, u, v, polyline, length };
        let pos = self.segments.partition_point(|s| s.id < id);
        self.segments.insert(pos, seg);
        if pos + 1 == self.segments.len() {
            self.index.insert(id, pos);
        } else {
            self.reindex();
        }
        Ok(())
    }

    fn reindex(&mut self) {
        self.index = self.segments.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, PlanarPoint> {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<PlanarPoint> {
        self.nodes.get(&id).copied()
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn segment(&self, id: SegmentId) -> Option<&RoadSegment> {
        self.segment_index(id).map(|i| &self.segments[i])
    }

    /// Position of `id` within [`segments`](Self::segments).
    pub fn segment_index(&self, id: SegmentId) -> Option<usize> {
        if self.index.len() != self.segments.len() {
            // deserialized without the index
            return self.segments.binary_search_by_key(&id, |s| s.id).ok();
        }
        self.index.get(&id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Nearest node to `p` (ties: smallest id) and its distance.
    pub fn nearest_node(&self, p: PlanarPoint) -> Option<(NodeId, f64)> {
        self.nodes
            .iter()
            .map(|(&id, &q)| (id, q.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Sub-network of the segments accepted by `keep`, with their endpoint nodes.
    pub fn filtered(&self, mut keep: impl FnMut(&RoadSegment) -> bool) -> RoadNetwork {
        let segments: Vec<RoadSegment> = self.segments.iter().filter(|s| keep(s)).cloned().collect();
        let mut nodes = BTreeMap::new();
        for s in &segments {
            nodes.insert(s.u, self.nodes[&s.u]);
            nodes.insert(s.v, self.nodes[&s.v]);
        }
        let mut out = RoadNetwork { nodes, segments, index: HashMap::new() };
        out.reindex();
        out
    }

    /// Same network with every coordinate shifted by `by`.
    pub fn translated(&self, by: PlanarPoint) -> RoadNetwork {
        let mut out = self.clone();
        for p in out.nodes.values_mut() {
            *p = *p + by;
        }
        for s in &mut out.segments {
            for p in &mut s.polyline {
                *p = *p + by;
            }
        }
        out
    }
}

/// Uniform bucket grid over segment bounding boxes.
#[derive(Debug, Clone)]
pub struct SegmentGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SegmentGrid {
    pub fn new(network: &RoadNetwork, cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, s) in network.segments().iter().enumerate() {
            let bb = s.bounding_box();
            let (i0, j0) = Self::key(bb.min, cell);
            let (i1, j1) = Self::key(bb.max, cell);
            for a in i0..=i1 {
                for b in j0..=j1 {
                    buckets.entry((a, b)).or_default().push(i);
                }
            }
        }
        SegmentGrid { cell, buckets }
    }

    fn key(p: PlanarPoint, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices (ascending) of segments whose bounding box may lie within
    /// `radius` of `p`.
    pub fn near(&self, p: PlanarPoint, radius: f64) -> Vec<usize> {
        let (i0, j0) = Self::key(PlanarPoint::new(p.x - radius, p.y - radius), self.cell);
        let (i1, j1) = Self::key(PlanarPoint::new(p.x + radius, p.y + radius), self.cell);
        let mut out = Vec::new();
        for a in i0..=i1 {
            for b in j0..=j1 {
                if let Some(v) = self.buckets.get(&(a, b)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> PlanarPoint {
        PlanarPoint::new(x, y)
    }

    #[test]
    fn builds_and_orders_segments() {
        let mut net = RoadNetwork::new();
        net.add_node(NodeId(1), p(0.0, 0.0)).unwrap();
        net.add_node(NodeId(2), p(100.0, 0.0)).unwrap();
        net.add_node(NodeId(3), p(100.0, 50.0)).unwrap();
        net.add_segment(SegmentId(9), NodeId(2), NodeId(3), &[]).unwrap();
        net.add_segment(SegmentId(4), NodeId(1), NodeId(2), &[p(50.0, 10.0)]).unwrap();
        let ids: Vec<_> = net.segments().iter().map(|s| s.id.0).collect();
        assert_eq!(ids, vec![4, 9]);
        assert_eq!(net.segment(SegmentId(9)).unwrap().length, 50.0);
        let bent = net.segment(SegmentId(4)).unwrap();
        assert_eq!(bent.polyline.len(), 3);
        assert!((bent.length - 2.0 * 50.0f64.hypot(10.0)).abs() < 1e-9);
    }

    #[test]
    fn shape_endpoints_are_merged() {
        let mut net = RoadNetwork::new();
        net.add_node(NodeId(1), p(0.0, 0.0)).unwrap();
        net.add_node(NodeId(2), p(10.0, 0.0)).unwrap();
        net.add_segment(SegmentId(1), NodeId(1), NodeId(2), &[p(0.1, 0.0), p(5.0, 1.0), p(10.0, 0.2)])
            .unwrap();
        let s = net.segment(SegmentId(1)).unwrap();
        assert_eq!(s.polyline, vec![p(0.0, 0.0), p(5.0, 1.0), p(10.0, 0.0)]);
    }

    #[test]
    fn rejects_bad_segments() {
        let mut net = RoadNetwork::new();
        net.add_node(NodeId(1), p(0.0, 0.0)).unwrap();
        assert_eq!(
            net.add_segment(SegmentId(1), NodeId(1), NodeId(7), &[]),
            Err(NetworkError::DanglingEndpoint { segment: SegmentId(1), node: NodeId(7) })
        );
        assert_eq!(net.add_segment(SegmentId(1), NodeId(1), NodeId(1), &[]), Err(NetworkError::ZeroLength(SegmentId(1))));
        assert_eq!(net.add_node(NodeId(1), p(1.0, 1.0)), Err(NetworkError::DuplicateNode(NodeId(1))));
    }

    #[test]
    fn segment_grid_finds_nearby() {
        let mut net = RoadNetwork::new();
        net.add_node(NodeId(1), p(0.0, 0.0)).unwrap();
        net.add_node(NodeId(2), p(100.0, 0.0)).unwrap();
        net.add_node(NodeId(3), p(1000.0, 1000.0)).unwrap();
        net.add_segment(SegmentId(1), NodeId(1), NodeId(2), &[]).unwrap();
        net.add_segment(SegmentId(2), NodeId(2), NodeId(3), &[]).unwrap();
        let g = SegmentGrid::new(&net, 30.0);
        assert_eq!(g.near(p(50.0, 10.0), 30.0), vec![0]);
        assert_eq!(g.near(p(120.0, 20.0), 30.0), vec![0, 1]);
        assert_eq!(g.near(p(-500.0, 900.0), 30.0), Vec::<usize>::new());
    }

    #[test]
    fn allowed_direction_permits() {
        assert!(AllowedDirection::Both.permits(Direction::Backward));
        assert!(!AllowedDirection::Forward.permits(Direction::Backward));
        assert_eq!(AllowedDirection::parse(" Both "), Some(AllowedDirection::Both));
        assert_eq!(AllowedDirection::parse("sideways"), None);
    }
}
