//! Route planner against brute-force references.

mod common;

use std::collections::BTreeSet;

use crowdmine::data_io::gen_grid_network;
use crowdmine::data_io::synth::grid_node;
use crowdmine::direction_miner::Traversal;
use crowdmine::network::{Direction, NodeId, SegmentId};
use crowdmine::route_planner::{
    check_route, plan_route, route_score, select_segment, shortest_path, trial_rng, PlanError, RouteQuery,
    RoutingGraph, Strategy,
};
use crowdmine::scenic_scorer::{ScoredRoadNetwork, SegmentScore};
use proptest::prelude::*;
use rand::Rng;

use common::{brute_shortest, brute_shortest_path, random_graph, rng, Walk};

/// Walk visiting `stops` in order with brute-force connectors, and its length.
fn brute_route(net: &ScoredRoadNetwork, o: NodeId, d: NodeId, stops: &[(SegmentId, Direction)]) -> Option<(f64, Walk)> {
    let mut walk = Vec::new();
    let mut at = o;
    for &(id, dir) in stops {
        let s = net.network.segment(id).unwrap();
        walk.extend(brute_shortest_path(net, at, s.entry(dir))?.1);
        walk.push((id, dir));
        at = s.exit(dir);
    }
    walk.extend(brute_shortest_path(net, at, d)?.1);
    let len = walk.iter().fold(0.0, |acc, (id, _)| acc + net.network.segment(*id).unwrap().length);
    Some((len, walk))
}

fn walk_score(net: &ScoredRoadNetwork, walk: &Walk) -> f64 {
    let ids: BTreeSet<SegmentId> = walk.iter().map(|x| x.0).collect();
    ids.into_iter().map(|id| net.si(id)).sum()
}

fn permitted(net: &ScoredRoadNetwork, id: SegmentId) -> Vec<Direction> {
    net.direction(id).unwrap().permitted().to_vec()
}

/// Cheapest splice of `seg` into `stops`: earliest position, forward first on ties.
fn brute_insert(
    net: &ScoredRoadNetwork,
    o: NodeId,
    d: NodeId,
    stops: &[(SegmentId, Direction)],
    seg: SegmentId,
) -> Option<(f64, Walk, Vec<(SegmentId, Direction)>)> {
    let mut best: Option<(f64, Walk, Vec<(SegmentId, Direction)>)> = None;
    for k in 0..=stops.len() {
        for dir in permitted(net, seg) {
            let mut next = stops.to_vec();
            next.insert(k, (seg, dir));
            if let Some((len, walk)) = brute_route(net, o, d, &next) {
                if best.as_ref().is_none_or(|b| len < b.0) {
                    best = Some((len, walk, next));
                }
            }
        }
    }
    best
}

/// Highest-score-first greedy insertion simulated from scratch.
fn simulate_hfs(net: &ScoredRoadNetwork, o: NodeId, d: NodeId, distmax: f64) -> Option<Walk> {
    let (len, mut walk) = brute_shortest_path(net, o, d)?;
    if len > distmax {
        return None;
    }
    let mut order: Vec<(SegmentId, f64)> = net.iter().map(|(s, sc, _)| (s.id, sc.si)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut stops = Vec::new();
    for (id, _) in order {
        if let Some((len, next_walk, next_stops)) = brute_insert(net, o, d, &stops, id) {
            if len <= distmax && walk_score(net, &next_walk) >= walk_score(net, &walk) {
                walk = next_walk;
                stops = next_stops;
            }
        }
    }
    Some(walk)
}

fn as_walk(t: &[Traversal]) -> Walk {
    t.iter().map(|x| (x.segment, x.direction)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn shortest_paths_match_enumeration(seed in any::<u64>()) {
        let net = random_graph(seed, 8, 14);
        let nodes: Vec<NodeId> = net.network.nodes().keys().copied().collect();
        for &a in &nodes {
            for &b in &nodes {
                match (brute_shortest(&net, a, b), shortest_path(&net, a, b)) {
                    (Some(want), Ok((path, got))) => {
                        prop_assert_eq!(got, want);
                        let empty = ScoredRoadNetwork::uniform(net.network.clone(), 0.0);
                        let route = RoutingGraph::new(&net).initial_route(a, b).unwrap();
                        prop_assert_eq!(&route.traversals, &path);
                        check_route(&route, &net, got).map_err(TestCaseError::fail)?;
                        prop_assert_eq!(route_score(&route, &empty), 0.0);
                    }
                    (None, Err(PlanError::Unreachable { .. })) => {}
                    (want, got) => prop_assert!(false, "{:?} vs {:?}", want, got),
                }
            }
        }
    }

    #[test]
    fn insertion_is_cheapest_variant(seed in any::<u64>()) {
        let net = random_graph(seed, 6, 10);
        let graph = RoutingGraph::new(&net);
        let mut r = rng(seed ^ 0x5eed);
        let nodes: Vec<NodeId> = net.network.nodes().keys().copied().collect();
        let (o, d) = (nodes[r.random_range(0..nodes.len())], nodes[r.random_range(0..nodes.len())]);
        let Ok(mut route) = graph.initial_route(o, d) else { return Ok(()) };
        let ids: Vec<SegmentId> = net.network.segments().iter().map(|s| s.id).collect();
        let mut picked = BTreeSet::new();
        for _ in 0..3 {
            let seg = ids[r.random_range(0..ids.len())];
            if !picked.insert(seg) {
                continue;
            }
            let stops = as_walk(&route.selected);
            match (brute_insert(&net, o, d, &stops, seg), graph.insert_segment(&route, seg)) {
                (Some((len, _, next)), Ok(got)) => {
                    prop_assert!((got.total_distance - len).abs() <= 1e-9 * len.max(1.0), "{} vs {}", got.total_distance, len);
                    prop_assert_eq!(got.selected.len(), next.len());
                    let kept: Vec<_> = as_walk(&got.selected).into_iter().filter(|x| x.0 != seg).collect();
                    prop_assert_eq!(kept, stops);
                    check_route(&got, &net, f64::INFINITY).map_err(TestCaseError::fail)?;
                    route = got;
                }
                (None, Err(PlanError::Unreachable { .. })) => {}
                (want, got) => prop_assert!(false, "{:?} vs {:?}", want.map(|w| w.0), got.map(|g| g.total_distance)),
            }
        }
    }

    #[test]
    fn greedy_matches_simulation_on_tiny_networks(seed in any::<u64>()) {
        let net = random_graph(seed, 5, 6);
        let mut r = rng(seed ^ 0xa11);
        let nodes: Vec<NodeId> = net.network.nodes().keys().copied().collect();
        let o = nodes[r.random_range(0..nodes.len())];
        let d = nodes[r.random_range(0..nodes.len())];
        prop_assume!(o != d);
        let Some(base) = brute_shortest(&net, o, d) else { return Ok(()) };
        let distmax = base * r.random_range(1.0..3.0);
        let want = simulate_hfs(&net, o, d, distmax).unwrap();
        let mut q = RouteQuery::new(net.network.node(o).unwrap(), net.network.node(d).unwrap(), distmax, Strategy::HfS);
        q.area_margin = 1e6;
        let got = plan_route(&q, &net).unwrap();
        check_route(&got, &net, distmax).map_err(TestCaseError::fail)?;
        prop_assert_eq!(as_walk(&got.traversals), want.clone());
        prop_assert!((got.scenic_score - walk_score(&net, &want)).abs() <= 1e-12);
    }
}

#[test]
fn probability_selection_follows_scores() {
    let cands = [(SegmentId(1), 3.0), (SegmentId(2), 1.0)];
    let mut r = trial_rng(7, 0);
    let n = 100_000;
    let hits = (0..n).filter(|_| select_segment(&cands, Strategy::PbS, &mut r).unwrap() == SegmentId(1)).count();
    let p = (3.0 + 1e-6) / (4.0 + 2e-6);
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    let got = hits as f64 / n as f64;
    assert!((got - p).abs() <= 3.0 * sd, "{got} vs {p} ± {}", 3.0 * sd);

    let mut r = trial_rng(7, 1);
    let uniform = (0..n).filter(|_| select_segment(&cands, Strategy::RbS, &mut r).unwrap() == SegmentId(1)).count();
    let sd = (0.25 / n as f64).sqrt();
    assert!((uniform as f64 / n as f64 - 0.5).abs() <= 3.0 * sd);
    for _ in 0..10 {
        assert_eq!(select_segment(&cands, Strategy::HfS, &mut r).unwrap(), SegmentId(1));
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let fx = gen_grid_network(12, 12, 100.0, 5.0, 0.01, 4).unwrap();
    let net = &fx.scored;
    let o = net.network.node(grid_node(12, 0, 0)).unwrap();
    let d = net.network.node(grid_node(12, 11, 11)).unwrap();
    for strategy in [Strategy::PbS, Strategy::RbS] {
        let mut q = RouteQuery::new(o, d, 3300.0, strategy);
        q.trials = 16;
        q.seed = 99;
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| plan_route(&q, net).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(1));
    }
}

#[test]
fn generous_budget_takes_the_corridor() {
    let fx = gen_grid_network(20, 20, 100.0, 5.0, 0.01, 11).unwrap();
    let net = &fx.scored;
    let o = net.network.node(grid_node(20, 0, 0)).unwrap();
    let d = net.network.node(grid_node(20, 19, 19)).unwrap();
    let route = plan_route(&RouteQuery::new(o, d, 5700.0, Strategy::HfS), net).unwrap();
    check_route(&route, net, 5700.0).unwrap();
    let on: BTreeSet<SegmentId> = route.traversals.iter().map(|t| t.segment).collect();
    assert!(fx.corridor.iter().all(|s| on.contains(s)));
}

#[test]
fn larger_budget_never_scores_lower_on_planted_grid() {
    for seed in 0..6u64 {
        let fx = gen_grid_network(10, 10, 100.0, 5.0, 0.01, seed).unwrap();
        let net = &fx.scored;
        let o = net.network.node(grid_node(10, 0, 0)).unwrap();
        let d = net.network.node(grid_node(10, 9, 9)).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 0..16 {
            let distmax = 1800.0 + 100.0 * k as f64;
            let route = plan_route(&RouteQuery::new(o, d, distmax, Strategy::HfS), net).unwrap();
            assert!(route.scenic_score >= last, "seed {seed}, budget {distmax}");
            last = route.scenic_score;
        }
    }
}

/// Greedy insertion is not monotone in the budget in general: an early
/// detour that only fits the larger budget changes which later ones fit.
#[test]
fn larger_budget_can_score_lower_on_random_scores() {
    let seed = 3;
    let mut fx = gen_grid_network(6, 6, 100.0, 5.0, 0.01, seed).unwrap();
    let mut r = rng(seed);
    for i in 0..60u64 {
        let si = r.random_range(0.0..1.0);
        fx.scored.set_score(SegmentId(i), SegmentScore { sp: 1.0, sc: si, si }).unwrap();
    }
    let net = &fx.scored;
    let o = net.network.node(grid_node(6, 0, r.random_range(0..3))).unwrap();
    let d = net.network.node(grid_node(6, 5, r.random_range(3..6))).unwrap();
    let score = |distmax: f64| plan_route(&RouteQuery::new(o, d, distmax, Strategy::HfS), net).unwrap().scenic_score;
    assert!(score(1900.0) < score(1850.0));
}
