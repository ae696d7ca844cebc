//! Fixtures and brute-force references shared by the integration tests.
#![allow(dead_code)]

use crowdmine::network::{AllowedDirection, Direction, NodeId, RoadNetwork, SegmentId};
use crowdmine::scenic_scorer::{ScoredRoadNetwork, SegmentScore};
use crowdmine::PlanarPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random multigraph on 2..=`max_nodes` nodes with float coordinates, random
/// allowed directions and random scores. Some segments get a bent shape.
pub fn random_graph(seed: u64, max_nodes: usize, max_segments: usize) -> ScoredRoadNetwork {
    let mut r = rng(seed);
    let n = r.random_range(2..=max_nodes);
    let mut net = RoadNetwork::new();
    for i in 0..n {
        let p = PlanarPoint::new(r.random_range(0.0..1000.0), r.random_range(0.0..1000.0));
        net.add_node(NodeId(i as u64), p).unwrap();
    }
    let m = r.random_range(1..=max_segments);
    let mut dirs = Vec::new();
    let mut next = 0u64;
    while (next as usize) < m {
        let u = r.random_range(0..n) as u64;
        let v = r.random_range(0..n) as u64;
        if u == v {
            continue;
        }
        let bend = if r.random_bool(0.3) {
            vec![PlanarPoint::new(r.random_range(0.0..1000.0), r.random_range(0.0..1000.0))]
        } else {
            vec![]
        };
        if net.add_segment(SegmentId(next), NodeId(u), NodeId(v), &bend).is_err() {
            continue;
        }
        dirs.push(match r.random_range(0..4) {
            0 => AllowedDirection::Forward,
            1 => AllowedDirection::Backward,
            _ => AllowedDirection::Both,
        });
        next += 1;
    }
    let scores = (0..m)
        .map(|_| {
            let si = r.random_range(0.0..1.0);
            SegmentScore { sp: 1.0, sc: si, si }
        })
        .collect();
    let mut scored = ScoredRoadNetwork::new(net, scores);
    for (i, d) in dirs.into_iter().enumerate() {
        scored.set_direction(SegmentId(i as u64), d).unwrap();
    }
    scored
}

/// Directed moves out of `node`: (segment, direction, next node, length).
pub fn moves(net: &ScoredRoadNetwork, node: NodeId) -> Vec<(SegmentId, Direction, NodeId, f64)> {
    let mut out = Vec::new();
    for (s, _, allowed) in net.iter() {
        for d in [Direction::Forward, Direction::Backward] {
            if allowed.permits(d) && s.entry(d) == node {
                out.push((s.id, d, s.exit(d), s.length));
            }
        }
    }
    out
}

pub type Walk = Vec<(SegmentId, Direction)>;

/// Shortest walk from `a` to `b` by enumerating every simple path; lengths
/// are summed from the origin in travel order. The first minimum found wins.
pub fn brute_shortest_path(net: &ScoredRoadNetwork, a: NodeId, b: NodeId) -> Option<(f64, Walk)> {
    fn dfs(
        net: &ScoredRoadNetwork,
        at: NodeId,
        b: NodeId,
        acc: f64,
        seen: &mut Vec<NodeId>,
        walk: &mut Walk,
        best: &mut Option<(f64, Walk)>,
    ) {
        if at == b {
            if best.as_ref().is_none_or(|x| acc < x.0) {
                *best = Some((acc, walk.clone()));
            }
            return;
        }
        for (seg, dir, next, len) in moves(net, at) {
            if seen.contains(&next) {
                continue;
            }
            seen.push(next);
            walk.push((seg, dir));
            dfs(net, next, b, acc + len, seen, walk, best);
            walk.pop();
            seen.pop();
        }
    }
    let mut best = None;
    dfs(net, a, b, 0.0, &mut vec![a], &mut Vec::new(), &mut best);
    best
}

pub fn brute_shortest(net: &ScoredRoadNetwork, a: NodeId, b: NodeId) -> Option<f64> {
    brute_shortest_path(net, a, b).map(|x| x.0)
}

/// Sum of segment lengths along `path`, from the first traversal on.
pub fn path_length(net: &ScoredRoadNetwork, path: &[crowdmine::direction_miner::Traversal]) -> f64 {
    path.iter().fold(0.0, |acc, t| acc + net.network.segment(t.segment).unwrap().length)
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
