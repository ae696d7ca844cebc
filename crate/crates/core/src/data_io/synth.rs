//! Seeded synthetic fixtures. Every generator is a pure function of its
//! arguments.

use std::f64::consts::TAU;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::DataError;
use crate::direction_miner::{Traversal, Trajectory};
use crate::event_localizer::PhotoObservation;
use crate::geomath::{Heading, PlanarPoint};
use crate::network::{NodeId, RoadNetwork, SegmentId};
use crate::route_planner::RoutingGraph;
use crate::scenic_scorer::{CheckIn, GeoTaggedPhoto, PoiGroup, ScoredRoadNetwork, SegmentScore};
use crate::stream_segmenter::{PictureEvent, PictureStream, Segmentation, ViewerCount};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(sigma: f64) -> Result<Normal<f64>, DataError> {
    Normal::new(0.0, sigma).map_err(|e| DataError::InvalidParameter(format!("sigma {sigma}: {e}")))
}

/// `n_viewers` photographers equally spaced (random phase) on a circle about
/// `truth`, each aiming at it, then perturbed in position and heading.
pub fn gen_event_scene(
    truth: PlanarPoint,
    n_viewers: usize,
    radius: f64,
    gps_sigma: f64,
    heading_sigma_deg: f64,
    seed: u64,
) -> Result<Vec<PhotoObservation>, DataError> {
    if n_viewers < 2 {
        return Err(DataError::InvalidParameter(format!("need at least 2 viewers, got {n_viewers}")));
    }
    if !(radius > 0.0) {
        return Err(DataError::InvalidParameter("radius must be positive".into()));
    }
    let mut rng = rng(seed);
    let gps = normal(gps_sigma)?;
    let head = normal(heading_sigma_deg.to_radians())?;
    let phase = rng.random::<f64>() * TAU;
    let mut out = Vec::with_capacity(n_viewers);
    for i in 0..n_viewers {
        let a = phase + TAU * i as f64 / n_viewers as f64;
        let at = truth + PlanarPoint::new(a.cos(), a.sin()) * radius;
        let aim = (truth - at).heading().expect("radius > 0").radians();
        let noise = PlanarPoint::new(gps.sample(&mut rng), gps.sample(&mut rng));
        out.push(PhotoObservation {
            location: at + noise,
            heading: Heading::from_radians(aim + head.sample(&mut rng)),
            timestamp: i as f64,
            contributor: format!("v{}", i + 1),
        });
    }
    Ok(out)
}

/// Stream of `k` sub-events. Each sub-event gets one picture from each of
/// ⌈coverage·viewers⌉ distinct contributors in random order, plus a
/// Poisson(`bias`) number of repeat pictures from a random third of them,
/// each placed after that contributor's first picture. The viewer count is
/// known to be `viewers`.
pub fn gen_picture_stream(
    k: usize,
    viewers: usize,
    coverage: f64,
    bias: f64,
    seed: u64,
) -> Result<(PictureStream, Segmentation), DataError> {
    if k == 0 || viewers == 0 {
        return Err(DataError::InvalidParameter("k and viewers must be positive".into()));
    }
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(DataError::InvalidParameter(format!("coverage {coverage} outside (0, 1]")));
    }
    if !(bias >= 0.0 && bias.is_finite()) {
        return Err(DataError::InvalidParameter(format!("bias {bias} must be non-negative")));
    }
    let mut rng = rng(seed);
    let m = ((coverage * viewers as f64).ceil() as usize).clamp(1, viewers);
    let extras = if bias > 0.0 {
        Some(Poisson::new(bias).map_err(|e| DataError::InvalidParameter(e.to_string()))?)
    } else {
        None
    };
    let mut events = Vec::new();
    let mut sizes = Vec::with_capacity(k);
    let mut t = 0.0;
    for _ in 0..k {
        let mut who: Vec<usize> = index::sample(&mut rng, viewers, m).into_vec();
        who.shuffle(&mut rng);
        let minority = &who[..m.div_ceil(3)];
        let n_extra = extras.map_or(0, |p| p.sample(&mut rng) as usize);
        let mut seq = who.clone();
        for _ in 0..n_extra {
            let c = minority[rng.random_range(0..minority.len())];
            let first = seq.iter().position(|&x| x == c).expect("minority member present");
            let at = rng.random_range(first + 1..=seq.len());
            seq.insert(at, c);
        }
        sizes.push(seq.len());
        for c in seq {
            events.push(PictureEvent::new(t, format!("u{c}")));
            t += 1.0;
        }
        t += 60.0;
    }
    let stream = PictureStream::new(events, ViewerCount::Known(viewers)).expect("sorted by construction");
    let truth = Segmentation::from_sizes(&sizes).expect("nonempty sub-events");
    Ok((stream, truth))
}

#[derive(Debug, Clone)]
pub struct GridFixture {
    pub scored: ScoredRoadNetwork,
    /// Planted corridor from the lower-left to the upper-right corner, in path order.
    pub corridor: Vec<SegmentId>,
}

/// Node id of lattice row `i`, column `j` on an `m`-column grid.
pub fn grid_node(m: usize, i: usize, j: usize) -> NodeId {
    NodeId((i * m + j) as u64)
}

/// `n` rows by `m` columns of nodes `cell_len` apart, lower-left node at the
/// origin. Horizontal segments are numbered first, row by row, then vertical
/// ones; every segment runs toward +x or +y. A random monotone staircase from
/// the lower-left to the upper-right corner scores `corridor_si`, every other
/// segment `background_si`.
pub fn gen_grid_network(
    n: usize,
    m: usize,
    cell_len: f64,
    corridor_si: f64,
    background_si: f64,
    seed: u64,
) -> Result<GridFixture, DataError> {
    if n < 2 || m < 2 {
        return Err(DataError::InvalidParameter(format!("grid must be at least 2x2, got {n}x{m}")));
    }
    if !(cell_len > 0.0) {
        return Err(DataError::InvalidParameter("cell length must be positive".into()));
    }
    let mut net = RoadNetwork::new();
    for i in 0..n {
        for j in 0..m {
            net.add_node(grid_node(m, i, j), PlanarPoint::new(j as f64 * cell_len, i as f64 * cell_len))
                .expect("unique node");
        }
    }
    let mut next = 0u64;
    let mut horizontal = vec![vec![SegmentId(0); m - 1]; n];
    for (i, row) in horizontal.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = SegmentId(next);
            net.add_segment(SegmentId(next), grid_node(m, i, j), grid_node(m, i, j + 1), &[]).expect("valid");
            next += 1;
        }
    }
    let mut vertical = vec![vec![SegmentId(0); m]; n - 1];
    for (i, row) in vertical.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = SegmentId(next);
            net.add_segment(SegmentId(next), grid_node(m, i, j), grid_node(m, i + 1, j), &[]).expect("valid");
            next += 1;
        }
    }
    let mut steps: Vec<bool> = std::iter::repeat_n(true, m - 1).chain(std::iter::repeat_n(false, n - 1)).collect();
    let mut rng = rng(seed);
    steps.shuffle(&mut rng);
    let (mut i, mut j) = (0, 0);
    let mut corridor = Vec::with_capacity(steps.len());
    for right in steps {
        if right {
            corridor.push(horizontal[i][j]);
            j += 1;
        } else {
            corridor.push(vertical[i][j]);
            i += 1;
        }
    }
    let mut scored = ScoredRoadNetwork::uniform(net, background_si);
    for &id in &corridor {
        scored.set_score(id, SegmentScore { sp: 1.0, sc: corridor_si, si: corridor_si }).expect("corridor segment exists");
    }
    Ok(GridFixture { scored, corridor })
}

/// Photos and check-ins scattered along every segment, denser where the
/// segment's score is higher. Per segment the photo count is
/// Poisson(0.5 + `per_si`·si) and the check-in count half that; a check-in is
/// natural scenery with probability si / max si, otherwise a generic venue.
pub fn gen_scenic_media(
    scored: &ScoredRoadNetwork,
    per_si: f64,
    seed: u64,
) -> Result<(Vec<GeoTaggedPhoto>, Vec<CheckIn>), DataError> {
    if !(per_si >= 0.0 && per_si.is_finite()) {
        return Err(DataError::InvalidParameter("per_si must be non-negative".into()));
    }
    let mut rng = rng(seed);
    let jitter = normal(5.0)?;
    let max_si = scored.scores().iter().map(|s| s.si).fold(0.0, f64::max);
    let mut photos = Vec::new();
    let mut checkins = Vec::new();
    for (seg, sc, _) in scored.iter() {
        let si = sc.si.max(0.0);
        let along = |rng: &mut ChaCha8Rng| {
            let at = rng.random::<f64>() * seg.length;
            point_at(&seg.polyline, at) + PlanarPoint::new(jitter.sample(rng), jitter.sample(rng))
        };
        let n_photo = Poisson::new(0.5 + per_si * si).expect("positive rate").sample(&mut rng) as usize;
        for _ in 0..n_photo {
            photos.push(GeoTaggedPhoto { loc: along(&mut rng) });
        }
        let n_ck = Poisson::new(0.25 + per_si * si / 2.0).expect("positive rate").sample(&mut rng) as usize;
        for _ in 0..n_ck {
            let loc = along(&mut rng);
            let scenic = max_si > 0.0 && rng.random::<f64>() < si / max_si;
            let category = if scenic { PoiGroup::NaturalScenery } else { PoiGroup::Others };
            checkins.push(CheckIn { loc, category });
        }
    }
    Ok((photos, checkins))
}

/// Point `at` meters along `line`.
fn point_at(line: &[PlanarPoint], mut at: f64) -> PlanarPoint {
    for w in line.windows(2) {
        let len = w[0].distance(w[1]);
        if at <= len {
            return w[0] + (w[1] - w[0]) * (at / len);
        }
        at -= len;
    }
    *line.last().expect("nonempty polyline")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetParams {
    pub trips: usize,
    /// Trip ends are drawn among nodes within this distance of the query points.
    pub spread: f64,
    pub gps_sigma: f64,
    /// Distance between consecutive GPS fixes along the driven path.
    pub spacing: f64,
}

impl Default for FleetParams {
    fn default() -> Self {
        FleetParams { trips: 40, spread: 150.0, gps_sigma: 3.0, spacing: 20.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Fleet {
    pub trajectories: Vec<Trajectory>,
    /// The path each trajectory was sampled from.
    pub paths: Vec<Vec<Traversal>>,
}

fn nodes_near(net: &RoadNetwork, p: PlanarPoint, spread: f64) -> Vec<NodeId> {
    let near: Vec<NodeId> = net.nodes().iter().filter(|(_, q)| q.distance(p) <= spread).map(|(id, _)| *id).collect();
    if near.is_empty() {
        net.nearest_node(p).map(|(id, _)| vec![id]).unwrap_or_default()
    } else {
        near
    }
}

/// Taxi trips driving shortest paths (honoring allowed directions) from
/// nodes near `start` to nodes near `end`, sampled every `spacing` meters
/// with Gaussian GPS noise.
pub fn gen_taxi_fleet(
    network: &ScoredRoadNetwork,
    start: PlanarPoint,
    end: PlanarPoint,
    params: &FleetParams,
    seed: u64,
) -> Result<Fleet, DataError> {
    if !(params.spacing > 0.0) {
        return Err(DataError::InvalidParameter("spacing must be positive".into()));
    }
    let net = &network.network;
    let sources = nodes_near(net, start, params.spread);
    let sinks = nodes_near(net, end, params.spread);
    if sources.is_empty() || sinks.is_empty() {
        return Err(DataError::InvalidParameter("network has no nodes".into()));
    }
    let graph = RoutingGraph::new(network);
    let gps = normal(params.gps_sigma)?;
    let mut rng = rng(seed);
    let mut fleet = Fleet { trajectories: Vec::new(), paths: Vec::new() };
    for _ in 0..params.trips {
        let a = sources[rng.random_range(0..sources.len())];
        let b = sinks[rng.random_range(0..sinks.len())];
        let Ok((path, _)) = graph.shortest_path(a, b) else { continue };
        if path.is_empty() {
            continue;
        }
        let mut line: Vec<PlanarPoint> = Vec::new();
        for t in &path {
            let s = net.segment(t.segment).expect("path segment");
            let mut pts = s.polyline.clone();
            if t.direction == crate::network::Direction::Backward {
                pts.reverse();
            }
            let skip = usize::from(!line.is_empty());
            line.extend_from_slice(&pts[skip..]);
        }
        let points = sample_along(&line, params.spacing)
            .into_iter()
            .map(|p| p + PlanarPoint::new(gps.sample(&mut rng), gps.sample(&mut rng)))
            .collect();
        fleet.trajectories.push(Trajectory::new(points).expect("path has positive length"));
        fleet.paths.push(path);
    }
    Ok(fleet)
}

/// Points every `spacing` meters along `line`, always including both ends.
fn sample_along(line: &[PlanarPoint], spacing: f64) -> Vec<PlanarPoint> {
    let mut out = vec![line[0]];
    let mut carried = 0.0;
    for w in line.windows(2) {
        let len = w[0].distance(w[1]);
        let mut at = spacing - carried;
        while at < len {
            out.push(w[0] + (w[1] - w[0]) * (at / len));
            at += spacing;
        }
        carried = (carried + len) % spacing;
    }
    if out.last() != line.last() {
        out.push(*line.last().expect("nonempty"));
    }
    out
}
