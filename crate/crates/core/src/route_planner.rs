//! Budget-constrained scenic route planning.
//!
//! A route starts as the shortest path from origin to destination. Candidate
//! segments inside the query's rectangle are then offered one at a time, in
//! an order set by the selection strategy, and each is spliced into the
//! route at the cheapest position and direction. A candidate whose cheapest
//! splice would exceed the distance budget is dropped for good. Planning
//! ends when no candidates remain.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direction_miner::Traversal;
use crate::geomath::{BoundingBox, PlanarPoint};
use crate::network::{AllowedDirection, Direction, NodeId, SegmentId};
use crate::scenic_scorer::ScoredRoadNetwork;

/// Origin and destination must snap to a node within this many meters.
pub const SNAP_RADIUS_M: f64 = 250.0;
/// Added to every score so zero-score segments stay selectable.
pub const PBS_WEIGHT_FLOOR: f64 = 1e-6;
pub const DEFAULT_TRIALS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no road segment lies inside the interested area")]
    EmptyArea,
    #[error("origin and destination coincide")]
    SamePoint,
    #[error("{which} is {distance:.1} m from the nearest node (limit {SNAP_RADIUS_M} m)")]
    SnapTooFar { which: &'static str, distance: f64 },
    #[error("node {0} is not part of the routing graph")]
    UnknownNode(NodeId),
    #[error("unknown segment {0}")]
    UnknownSegment(SegmentId),
    #[error("no path from node {from} to node {to}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("shortest path is {shortest:.3} m but the budget is {distmax:.3} m")]
    InfeasibleBudget { shortest: f64, distmax: f64 },
    #[error("no candidate segments to select from")]
    EmptyCandidates,
    #[error("segment {0} is already selected")]
    AlreadySelected(SegmentId),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Highest score first.
    #[serde(rename = "hfs")]
    HfS,
    /// Probability proportional to score.
    #[serde(rename = "pbs")]
    PbS,
    /// Uniformly random.
    #[serde(rename = "rbs")]
    RbS,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::HfS, Strategy::PbS, Strategy::RbS];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::HfS => "hfs",
            Strategy::PbS => "pbs",
            Strategy::RbS => "rbs",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hfs" => Ok(Strategy::HfS),
            "pbs" => Ok(Strategy::PbS),
            "rbs" => Ok(Strategy::RbS),
            other => Err(format!("unknown strategy '{other}' (expected hfs, pbs or rbs)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteQuery {
    pub origin: PlanarPoint,
    pub destination: PlanarPoint,
    pub distmax: f64,
    pub strategy: Strategy,
    pub trials: usize,
    pub seed: u64,
    pub area_margin: f64,
}

impl RouteQuery {
    pub fn new(origin: PlanarPoint, destination: PlanarPoint, distmax: f64, strategy: Strategy) -> Self {
        RouteQuery { origin, destination, distmax, strategy, trials: DEFAULT_TRIALS, seed: 0, area_margin: 0.0 }
    }

    fn validate(&self) -> Result<(), PlanError> {
        if !(self.distmax > 0.0) {
            return Err(PlanError::InvalidQuery("distmax must be positive".into()));
        }
        if self.trials == 0 {
            return Err(PlanError::InvalidQuery("trials must be at least 1".into()));
        }
        if !(self.area_margin >= 0.0) {
            return Err(PlanError::InvalidQuery("area margin must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelRoute {
    pub origin: NodeId,
    pub destination: NodeId,
    pub traversals: Vec<Traversal>,
    pub total_distance: f64,
    pub scenic_score: f64,
    /// Deliberately inserted segments, in route order, with their chosen direction.
    pub selected: Vec<Traversal>,
}

impl TravelRoute {
    pub fn selected_segments(&self) -> Vec<SegmentId> {
        self.selected.iter().map(|t| t.segment).collect()
    }

    /// Node sequence visited by the route, starting at `origin`.
    pub fn node_sequence(&self, net: &ScoredRoadNetwork) -> Vec<NodeId> {
        let mut out = vec![self.origin];
        for t in &self.traversals {
            let s = net.network.segment(t.segment).expect("route segment in network");
            out.push(s.exit(t.direction));
        }
        out
    }
}

/// Axis-aligned rectangle spanning `p_o` and `p_d`, grown by `margin`.
pub fn interested_rectangle(p_o: PlanarPoint, p_d: PlanarPoint, margin: f64) -> BoundingBox {
    BoundingBox::of_points(&[p_o, p_d]).expect("two points").expanded(margin)
}

/// Sub-network of segments whose geometry lies entirely inside the rectangle.
pub fn interested_area(
    network: &ScoredRoadNetwork,
    p_o: PlanarPoint,
    p_d: PlanarPoint,
    margin: f64,
) -> Result<ScoredRoadNetwork, PlanError> {
    if p_o == p_d {
        return Err(PlanError::SamePoint);
    }
    let rect = interested_rectangle(p_o, p_d, margin);
    if !(rect.width() > 0.0 && rect.height() > 0.0) {
        return Err(PlanError::EmptyArea);
    }
    let sub = network.filtered(|s| s.polyline.iter().all(|p| rect.contains(*p)));
    if sub.network.is_empty() {
        return Err(PlanError::EmptyArea);
    }
    Ok(sub)
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    dir: Direction,
    len: f64,
    id: SegmentId,
}

#[derive(Debug)]
struct Tree {
    dist: Vec<f64>,
    /// (previous node, arc index in adjacency of previous node)
    pred: Vec<Option<(usize, usize)>>,
}

/// Segment data by network position, with endpoints as node indices.
#[derive(Debug, Clone, Copy)]
struct SegInfo {
    id: SegmentId,
    len: f64,
    u: usize,
    v: usize,
    allowed: AllowedDirection,
}

impl SegInfo {
    /// (entry, exit) node indices when driven in `dir`.
    fn ends(&self, dir: Direction) -> (usize, usize) {
        match dir {
            Direction::Forward => (self.u, self.v),
            Direction::Backward => (self.v, self.u),
        }
    }
}

/// A selected segment as (network position, direction).
type Stop = (usize, Direction);

/// Directed view of a scored network honoring allowed directions, with
/// lazily computed single-source shortest-path trees shared across trials.
pub struct RoutingGraph<'a> {
    net: &'a ScoredRoadNetwork,
    node_ids: Vec<NodeId>,
    node_index: HashMap<NodeId, usize>,
    adj: Vec<Vec<Arc>>,
    segs: Vec<SegInfo>,
    trees: Vec<OnceLock<Tree>>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Connector distances around each insertion position of a fixed stop list.
struct Gaps<'g> {
    prev_trees: Vec<&'g Tree>,
    next_nodes: Vec<usize>,
    gaps: Vec<f64>,
    base: f64,
}

impl<'g> Gaps<'g> {
    fn new(g: &'g RoutingGraph<'_>, o: usize, d: usize, stops: &[Stop]) -> Self {
        let n = stops.len();
        let mut prev_trees = Vec::with_capacity(n + 1);
        let mut next_nodes = Vec::with_capacity(n + 1);
        let mut gaps = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let prev = if k == 0 { o } else { g.segs[stops[k - 1].0].ends(stops[k - 1].1).1 };
            let next = if k == n { d } else { g.segs[stops[k].0].ends(stops[k].1).0 };
            let tree = g.tree(prev);
            gaps.push(tree.dist[next]);
            prev_trees.push(tree);
            next_nodes.push(next);
        }
        let base = gaps.iter().sum::<f64>() + stops.iter().map(|s| g.segs[s.0].len).sum::<f64>();
        Gaps { prev_trees, next_nodes, gaps, base }
    }

    /// Cheapest (position, direction, estimated total) for inserting the
    /// segment at network position `pos`. Ties keep the earliest position,
    /// forward before backward.
    fn best(&self, g: &'g RoutingGraph<'_>, pos: usize) -> Option<(usize, Direction, f64)> {
        let s = g.segs[pos];
        let mut best: Option<(usize, Direction, f64)> = None;
        for &dir in s.allowed.permitted() {
            let (entry, exit) = s.ends(dir);
            let from_exit = &g.tree(exit).dist;
            for k in 0..self.gaps.len() {
                let total = self.base - self.gaps[k]
                    + self.prev_trees[k].dist[entry]
                    + s.len
                    + from_exit[self.next_nodes[k]];
                if !total.is_finite() {
                    continue;
                }
                let wins = match best {
                    None => true,
                    Some((bk, bd, bt)) => total < bt || (total == bt && (k, dir) < (bk, bd)),
                };
                if wins {
                    best = Some((k, dir, total));
                }
            }
        }
        best
    }
}

impl<'a> RoutingGraph<'a> {
    pub fn new(net: &'a ScoredRoadNetwork) -> Self {
        let node_ids: Vec<NodeId> = net.network.nodes().keys().copied().collect();
        let node_index: HashMap<NodeId, usize> =
            node_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adj = vec![Vec::new(); node_ids.len()];
        let mut segs = Vec::with_capacity(net.network.segments().len());
        for (s, _, allowed) in net.iter() {
            let info = SegInfo { id: s.id, len: s.length, u: node_index[&s.u], v: node_index[&s.v], allowed };
            for &dir in allowed.permitted() {
                let (from, to) = info.ends(dir);
                adj[from].push(Arc { to, dir, len: s.length, id: s.id });
            }
            segs.push(info);
        }
        let trees = (0..node_ids.len()).map(|_| OnceLock::new()).collect();
        RoutingGraph { net, node_ids, node_index, adj, segs, trees }
    }

    pub fn network(&self) -> &ScoredRoadNetwork {
        self.net
    }

    fn idx(&self, n: NodeId) -> Result<usize, PlanError> {
        self.node_index.get(&n).copied().ok_or(PlanError::UnknownNode(n))
    }

    fn seg_pos(&self, id: SegmentId) -> Result<usize, PlanError> {
        self.net.network.segment_index(id).ok_or(PlanError::UnknownSegment(id))
    }

    fn tree(&self, src: usize) -> &Tree {
        self.trees[src].get_or_init(|| self.dijkstra(src))
    }

    fn dijkstra(&self, src: usize) -> Tree {
        let n = self.node_ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem { dist: 0.0, node: src });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            for (ai, arc) in self.adj[node].iter().enumerate() {
                if done[arc.to] {
                    continue;
                }
                let nd = d + arc.len;
                let better = nd < dist[arc.to]
                    || (nd == dist[arc.to]
                        && pred[arc.to].is_some_and(|(pn, pa)| arc.id < self.adj[pn][pa].id));
                if better {
                    let improved = nd < dist[arc.to];
                    dist[arc.to] = nd;
                    pred[arc.to] = Some((node, ai));
                    if improved {
                        heap.push(HeapItem { dist: nd, node: arc.to });
                    }
                }
            }
        }
        Tree { dist, pred }
    }

    /// Shortest distance from `a` to `b`, infinite when unreachable.
    pub fn distance(&self, a: NodeId, b: NodeId) -> Result<f64, PlanError> {
        Ok(self.tree(self.idx(a)?).dist[self.idx(b)?])
    }

    fn path_arcs(&self, a: usize, b: usize) -> Option<Vec<Arc>> {
        let tree = self.tree(a);
        if !tree.dist[b].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        let mut at = b;
        while at != a {
            let (prev, ai) = tree.pred[at].expect("reachable node has predecessor");
            out.push(self.adj[prev][ai]);
            at = prev;
        }
        out.reverse();
        Some(out)
    }

    /// Minimal-length path honoring allowed directions. Among equal-length
    /// alternatives the one entering each node through the smallest segment id wins.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Result<(Vec<Traversal>, f64), PlanError> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let arcs = self.path_arcs(ia, ib).ok_or(PlanError::Unreachable { from: a, to: b })?;
        Ok((arcs.iter().map(|x| Traversal::new(x.id, x.dir)).collect(), self.tree(ia).dist[ib]))
    }

    /// Σ `si` over distinct segments of `traversals`.
    pub fn score(&self, traversals: &[Traversal]) -> f64 {
        route_score_of(traversals, self.net)
    }

    fn positions(&self, ids: &[SegmentId]) -> Vec<usize> {
        ids.iter().map(|&id| self.seg_pos(id).expect("candidate in graph")).collect()
    }

    fn stops_of(&self, selected: &[Traversal]) -> Result<Vec<Stop>, PlanError> {
        selected.iter().map(|t| Ok((self.seg_pos(t.segment)?, t.direction))).collect()
    }

    /// Builds the route visiting `stops` in order with shortest-path connectors.
    fn materialize(&self, origin: usize, dest: usize, stops: &[Stop]) -> Option<TravelRoute> {
        let mut traversals = Vec::new();
        let mut total_distance = 0.0;
        let mut at = origin;
        let mut push = |x: Traversal, len: f64, out: &mut Vec<Traversal>| {
            total_distance += len;
            out.push(x);
        };
        for &(pos, dir) in stops {
            let s = self.segs[pos];
            let (entry, exit) = s.ends(dir);
            for a in self.path_arcs(at, entry)? {
                push(Traversal::new(a.id, a.dir), a.len, &mut traversals);
            }
            push(Traversal::new(s.id, dir), s.len, &mut traversals);
            at = exit;
        }
        for a in self.path_arcs(at, dest)? {
            push(Traversal::new(a.id, a.dir), a.len, &mut traversals);
        }
        let scenic_score = self.score(&traversals);
        Some(TravelRoute {
            origin: self.node_ids[origin],
            destination: self.node_ids[dest],
            traversals,
            total_distance,
            scenic_score,
            selected: stops.iter().map(|&(pos, dir)| Traversal::new(self.segs[pos].id, dir)).collect(),
        })
    }

    /// Shortest path between two nodes as a route with nothing selected.
    pub fn initial_route(&self, origin: NodeId, dest: NodeId) -> Result<TravelRoute, PlanError> {
        let (o, d) = (self.idx(origin)?, self.idx(dest)?);
        self.materialize(o, d, &[]).ok_or(PlanError::Unreachable { from: origin, to: dest })
    }

    /// Splices `seg` into `route` at the cheapest of the `n + 1` positions
    /// between already-selected segments, trying every permitted direction.
    /// Ties keep the earliest position, forward before backward.
    pub fn insert_segment(&self, route: &TravelRoute, seg: SegmentId) -> Result<TravelRoute, PlanError> {
        if route.selected.iter().any(|t| t.segment == seg) {
            return Err(PlanError::AlreadySelected(seg));
        }
        let pos = self.seg_pos(seg)?;
        let o = self.idx(route.origin)?;
        let d = self.idx(route.destination)?;
        let unreachable = PlanError::Unreachable { from: route.origin, to: route.destination };
        let mut stops = self.stops_of(&route.selected)?;
        let Some((k, dir, _)) = Gaps::new(self, o, d, &stops).best(self, pos) else {
            return Err(unreachable);
        };
        stops.insert(k, (pos, dir));
        self.materialize(o, d, &stops).ok_or(unreachable)
    }

    /// One greedy insertion pass over segment positions in `order`. Each
    /// candidate is offered once; it stays only if its cheapest splice fits
    /// the budget and does not lower the score (rerouted connectors can drop
    /// scenic segments).
    fn run_pass(&self, start: &TravelRoute, order: &[usize], distmax: f64) -> TravelRoute {
        let o = self.node_index[&start.origin];
        let d = self.node_index[&start.destination];
        let mut route = start.clone();
        let mut stops = self.stops_of(&route.selected).expect("route built on this graph");
        let mut gaps = Gaps::new(self, o, d, &stops);
        for &pos in order {
            let Some((k, dir, estimate)) = gaps.best(self, pos) else {
                continue;
            };
            if estimate > distmax * (1.0 + 1e-9) {
                continue;
            }
            let mut next_stops = stops.clone();
            next_stops.insert(k, (pos, dir));
            if let Some(next) = self.materialize(o, d, &next_stops) {
                if next.total_distance <= distmax && next.scenic_score >= route.scenic_score {
                    route = next;
                    stops = next_stops;
                    gaps = Gaps::new(self, o, d, &stops);
                }
            }
        }
        route
    }
}

/// Shortest path on `network` honoring its allowed directions.
pub fn shortest_path(
    network: &ScoredRoadNetwork,
    a: NodeId,
    b: NodeId,
) -> Result<(Vec<Traversal>, f64), PlanError> {
    RoutingGraph::new(network).shortest_path(a, b)
}

/// Picks one candidate `(id, si)` according to `strategy`.
pub fn select_segment<R: Rng + ?Sized>(
    candidates: &[(SegmentId, f64)],
    strategy: Strategy,
    rng: &mut R,
) -> Result<SegmentId, PlanError> {
    if candidates.is_empty() {
        return Err(PlanError::EmptyCandidates);
    }
    Ok(match strategy {
        Strategy::HfS => {
            candidates
                .iter()
                .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
                .expect("nonempty")
                .0
        }
        Strategy::RbS => candidates[rng.random_range(0..candidates.len())].0,
        Strategy::PbS => {
            let total: f64 = candidates.iter().map(|c| c.1.max(0.0) + PBS_WEIGHT_FLOOR).sum();
            let mut u = rng.random::<f64>() * total;
            for c in candidates {
                u -= c.1.max(0.0) + PBS_WEIGHT_FLOOR;
                if u < 0.0 {
                    return Ok(c.0);
                }
            }
            candidates.last().expect("nonempty").0
        }
    })
}

/// Order in which one trial offers candidates. For the random strategies this
/// is a complete draw without replacement: repeated uniform picks for RbS,
/// repeated score-proportional picks for PbS (drawn up front with
/// exponential keys, which yields the same sequential distribution).
fn selection_order(candidates: &[(SegmentId, f64)], strategy: Strategy, rng: &mut ChaCha8Rng) -> Vec<SegmentId> {
    let mut c = candidates.to_vec();
    c.sort_by_key(|a| a.0);
    match strategy {
        Strategy::HfS => {
            c.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            c.into_iter().map(|x| x.0).collect()
        }
        Strategy::RbS => {
            use rand::seq::SliceRandom;
            c.shuffle(rng);
            c.into_iter().map(|x| x.0).collect()
        }
        Strategy::PbS => {
            let mut keyed: Vec<(f64, SegmentId)> = c
                .into_iter()
                .map(|(id, si)| {
                    // u ∈ (0, 1]
                    let u = 1.0 - rng.random::<f64>();
                    (u.ln() / (si.max(0.0) + PBS_WEIGHT_FLOOR), id)
                })
                .collect();
            keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().map(|x| x.1).collect()
        }
    }
}

/// RNG for trial `trial` of a query seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// True when `a` is a strictly better plan than `b`: higher score, then
/// fewer meters, then lexicographically smaller traversal sequence.
fn better(a: &TravelRoute, b: &TravelRoute) -> bool {
    let key = |r: &TravelRoute| r.traversals.iter().map(|t| (t.segment, t.direction)).collect::<Vec<_>>();
    match a.scenic_score.total_cmp(&b.scenic_score) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match a.total_distance.total_cmp(&b.total_distance) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => key(a) < key(b),
        },
    }
}

/// Snaps `p` to the nearest node of `net` within [`SNAP_RADIUS_M`].
pub fn snap_to_node(net: &ScoredRoadNetwork, p: PlanarPoint, which: &'static str) -> Result<NodeId, PlanError> {
    let (id, distance) = net.network.nearest_node(p).ok_or(PlanError::EmptyArea)?;
    if distance > SNAP_RADIUS_M {
        return Err(PlanError::SnapTooFar { which, distance });
    }
    Ok(id)
}

pub fn plan_route(query: &RouteQuery, network: &ScoredRoadNetwork) -> Result<TravelRoute, PlanError> {
    query.validate()?;
    let area = interested_area(network, query.origin, query.destination, query.area_margin)?;
    let graph = RoutingGraph::new(&area);
    let o = snap_to_node(&area, query.origin, "origin")?;
    let d = snap_to_node(&area, query.destination, "destination")?;
    let start = graph.initial_route(o, d)?;
    if start.total_distance > query.distmax {
        return Err(PlanError::InfeasibleBudget { shortest: start.total_distance, distmax: query.distmax });
    }
    let candidates: Vec<(SegmentId, f64)> = area.iter().map(|(s, sc, _)| (s.id, sc.si)).collect();

    if query.strategy == Strategy::HfS {
        let mut rng = trial_rng(query.seed, 0);
        let order = graph.positions(&selection_order(&candidates, Strategy::HfS, &mut rng));
        return Ok(graph.run_pass(&start, &order, query.distmax));
    }
    let routes: Vec<TravelRoute> = (0..query.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(query.seed, t);
            let order = graph.positions(&selection_order(&candidates, query.strategy, &mut rng));
            graph.run_pass(&start, &order, query.distmax)
        })
        .collect();
    let mut best = routes.into_iter();
    let first = best.next().expect("at least one trial");
    Ok(best.fold(first, |acc, r| if better(&r, &acc) { r } else { acc }))
}

fn route_score_of(traversals: &[Traversal], network: &ScoredRoadNetwork) -> f64 {
    let distinct: BTreeSet<SegmentId> = traversals.iter().map(|t| t.segment).collect();
    distinct.into_iter().map(|id| network.si(id)).sum()
}

/// Σ `si` over the distinct segments the route traverses.
pub fn route_score(route: &TravelRoute, network: &ScoredRoadNetwork) -> f64 {
    route_score_of(&route.traversals, network)
}

/// Checks connectivity, endpoints, recorded distance and the budget.
pub fn check_route(route: &TravelRoute, network: &ScoredRoadNetwork, distmax: f64) -> Result<(), String> {
    let mut at = route.origin;
    let mut total = 0.0;
    for (i, t) in route.traversals.iter().enumerate() {
        let s = network
            .network
            .segment(t.segment)
            .ok_or_else(|| format!("traversal {i}: unknown segment {}", t.segment))?;
        if s.entry(t.direction) != at {
            return Err(format!("traversal {i} ({}) does not start at node {at}", t.segment));
        }
        if !network.direction(t.segment).expect("known").permits(t.direction) {
            return Err(format!("traversal {i} ({}) violates the allowed direction", t.segment));
        }
        total += s.length;
        at = s.exit(t.direction);
    }
    if at != route.destination {
        return Err(format!("route ends at {at}, expected {}", route.destination));
    }
    if total != route.total_distance {
        return Err(format!("recorded distance {} != {}", route.total_distance, total));
    }
    if total > distmax {
        return Err(format!("distance {total} exceeds budget {distmax}"));
    }
    for sel in &route.selected {
        if !route.traversals.contains(sel) {
            return Err(format!("selected segment {} not on route", sel.segment));
        }
    }
    Ok(())
}
