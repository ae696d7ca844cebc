use std::collections::HashMap;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::direction_miner::Trajectory;
use crate::event_localizer::PhotoObservation;
use crate::geomath::{GeoPoint, Heading, PlanarPoint, Projection};
use crate::network::{AllowedDirection, NodeId, RoadNetwork, SegmentId};
use crate::scenic_scorer::{categorize_poi, CheckIn, GeoTaggedPhoto, ScoredRoadNetwork, SegmentScore};
use crate::stream_segmenter::{PictureEvent, Segmentation};

/// A network together with the projection its coordinates are expressed in.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: RoadNetwork,
    pub projection: Projection,
}

/// Parsed rows with their 1-based line numbers. An empty file yields no rows.
fn read_rows<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<(u64, T)>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::parse(path, 1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(DataError::parse(path, 1, format!("missing column '{col}'")));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| DataError::parse(path, line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

fn geo(path: &Path, line: u64, lat: f64, lon: f64) -> Result<GeoPoint, DataError> {
    GeoPoint::new(lat, lon).map_err(|e| DataError::parse(path, line, e.to_string()))
}

fn writer(path: &Path) -> Result<csv::Writer<File>, DataError> {
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_write_err(path: &Path, e: csv::Error) -> DataError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::io(path, io),
        other => DataError::parse(path, 0, format!("{other:?}")),
    }
}

#[derive(Deserialize, Serialize)]
struct NodeRow {
    id: u64,
    lat: f64,
    lon: f64,
}

#[derive(Deserialize, Serialize)]
struct EdgeRow {
    id: u64,
    u: u64,
    v: u64,
    #[serde(default)]
    polyline: Option<String>,
}

/// Parses `"lon lat;lon lat;…"`.
fn parse_polyline(text: &str) -> Result<Vec<GeoPoint>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let mut it = pair.split_whitespace();
            let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
                return Err(format!("bad polyline vertex '{pair}'"));
            };
            let lon = f64::from_str(x).map_err(|_| format!("bad longitude '{x}'"))?;
            let lat = f64::from_str(y).map_err(|_| format!("bad latitude '{y}'"))?;
            GeoPoint::new(lat, lon).map_err(|e| e.to_string())
        })
        .collect()
}

/// Loads `nodes` (`id,lat,lon`) and `edges` (`id,u,v[,polyline]`). The
/// projection is centered on the mean node position.
pub fn load_network(nodes: &Path, edges: &Path) -> Result<LoadedNetwork, DataError> {
    let node_rows: Vec<(u64, NodeRow)> = read_rows(nodes, &["id", "lat", "lon"])?;
    let mut geos = Vec::with_capacity(node_rows.len());
    for (line, r) in &node_rows {
        geos.push(geo(nodes, *line, r.lat, r.lon)?);
    }
    let projection = Projection::centered_on(&geos).unwrap_or(Projection::new(GeoPoint { lat: 0.0, lon: 0.0 }));
    let mut network = RoadNetwork::new();
    for ((line, r), g) in node_rows.iter().zip(&geos) {
        network
            .add_node(NodeId(r.id), projection.project(*g))
            .map_err(|source| DataError::Network { path: nodes.into(), line: *line, source })?;
    }
    let edge_rows: Vec<(u64, EdgeRow)> = read_rows(edges, &["id", "u", "v"])?;
    for (line, r) in edge_rows {
        let shape = match r.polyline.as_deref() {
            Some(text) => parse_polyline(text).map_err(|msg| DataError::parse(edges, line, msg))?,
            None => Vec::new(),
        };
        let interior: Vec<PlanarPoint> = shape.into_iter().map(|g| projection.project(g)).collect();
        network
            .add_segment(SegmentId(r.id), NodeId(r.u), NodeId(r.v), &interior)
            .map_err(|source| DataError::Network { path: edges.into(), line, source })?;
    }
    Ok(LoadedNetwork { network, projection })
}

/// Writes the network in the format [`load_network`] reads. Shape points
/// strictly between the endpoints go to the `polyline` column.
pub fn save_network(network: &RoadNetwork, projection: &Projection, nodes: &Path, edges: &Path) -> Result<(), DataError> {
    let mut w = writer(nodes)?;
    for (id, p) in network.nodes() {
        let g = projection.unproject(*p);
        w.serialize(NodeRow { id: id.0, lat: g.lat, lon: g.lon }).map_err(|e| csv_write_err(nodes, e))?;
    }
    w.flush().map_err(|e| DataError::io(nodes, e))?;
    let mut w = writer(edges)?;
    for s in network.segments() {
        let interior = &s.polyline[1..s.polyline.len() - 1];
        let polyline = interior
            .iter()
            .map(|p| {
                let g = projection.unproject(*p);
                format!("{} {}", g.lon, g.lat)
            })
            .collect::<Vec<_>>()
            .join(";");
        let row = EdgeRow { id: s.id.0, u: s.u.0, v: s.v.0, polyline: Some(polyline) };
        w.serialize(row).map_err(|e| csv_write_err(edges, e))?;
    }
    w.flush().map_err(|e| DataError::io(edges, e))
}

#[derive(Deserialize, Serialize)]
struct ScoreRow {
    segment_id: u64,
    sp: f64,
    sc: f64,
    si: f64,
    allowed_direction: String,
}

/// Writes `segment_id,sp,sc,si,allowed_direction` in segment order.
pub fn save_scores(scored: &ScoredRoadNetwork, path: &Path) -> Result<(), DataError> {
    let mut w = writer(path)?;
    for (s, sc, dir) in scored.iter() {
        let row = ScoreRow { segment_id: s.id.0, sp: sc.sp, sc: sc.sc, si: sc.si, allowed_direction: dir.as_str().into() };
        w.serialize(row).map_err(|e| csv_write_err(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

/// Reads a score file; every segment of `network` must appear exactly once.
pub fn load_scores(network: RoadNetwork, path: &Path) -> Result<ScoredRoadNetwork, DataError> {
    let rows: Vec<(u64, ScoreRow)> = read_rows(path, &["segment_id", "sp", "sc", "si", "allowed_direction"])?;
    let mut scored = ScoredRoadNetwork::uniform(network, 0.0);
    let mut seen: HashMap<u64, u64> = HashMap::new();
    for (line, r) in rows {
        if let Some(first) = seen.insert(r.segment_id, line) {
            return Err(DataError::parse(path, line, format!("segment {} already listed on line {first}", r.segment_id)));
        }
        let id = SegmentId(r.segment_id);
        let dir = AllowedDirection::parse(&r.allowed_direction)
            .ok_or_else(|| DataError::parse(path, line, format!("bad allowed_direction '{}'", r.allowed_direction)))?;
        if [r.sp, r.sc, r.si].iter().any(|v| !v.is_finite()) {
            return Err(DataError::parse(path, line, "non-finite score"));
        }
        scored
            .set_score(id, SegmentScore { sp: r.sp, sc: r.sc, si: r.si })
            .map_err(|e| DataError::parse(path, line, e.to_string()))?;
        scored.set_direction(id, dir).expect("segment exists");
    }
    if let Some(s) = scored.network.segments().iter().find(|s| !seen.contains_key(&s.id.0)) {
        return Err(DataError::parse(path, 0, format!("no score for segment {}", s.id)));
    }
    Ok(scored)
}

/// Network files plus a score file.
pub fn load_scored_network(nodes: &Path, edges: &Path, scores: &Path) -> Result<(ScoredRoadNetwork, Projection), DataError> {
    let loaded = load_network(nodes, edges)?;
    Ok((load_scores(loaded.network, scores)?, loaded.projection))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Photos,
    Checkins,
    Observations,
    Trajectories,
    Stream,
}

impl FromStr for PointKind {
    type Err = DataError;
    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "photos" => Ok(PointKind::Photos),
            "checkins" => Ok(PointKind::Checkins),
            "observations" => Ok(PointKind::Observations),
            "trajectories" => Ok(PointKind::Trajectories),
            "stream" => Ok(PointKind::Stream),
            other => Err(DataError::UnknownKind(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointSet {
    Photos(Vec<GeoTaggedPhoto>),
    Checkins(Vec<CheckIn>),
    Observations(Vec<PhotoObservation>),
    /// Trajectories with their ids, in order of first appearance.
    Trajectories(Vec<(String, Trajectory)>),
    Stream(Vec<PictureEvent>),
}

impl PointSet {
    pub fn len(&self) -> usize {
        match self {
            PointSet::Photos(v) => v.len(),
            PointSet::Checkins(v) => v.len(),
            PointSet::Observations(v) => v.len(),
            PointSet::Trajectories(v) => v.len(),
            PointSet::Stream(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Deserialize, Serialize)]
struct LatLon {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize, Serialize)]
struct CheckInRow {
    lat: f64,
    lon: f64,
    category_label: String,
}

#[derive(Deserialize, Serialize)]
struct ObservationRow {
    lat: f64,
    lon: f64,
    heading_deg: f64,
    timestamp: f64,
    contributor: String,
}

#[derive(Deserialize, Serialize)]
struct TrajectoryRow {
    traj_id: String,
    seq: i64,
    lat: f64,
    lon: f64,
}

#[derive(Deserialize, Serialize)]
struct StreamRow {
    timestamp: f64,
    contributor: String,
}

/// Loads one kind of point file. Coordinates are projected with `projection`;
/// stream files carry no coordinates.
pub fn load_points(path: &Path, kind: PointKind, projection: &Projection) -> Result<PointSet, DataError> {
    match kind {
        PointKind::Photos => {
            let mut out = Vec::new();
            for (line, r) in read_rows::<LatLon>(path, &["lat", "lon"])? {
                out.push(GeoTaggedPhoto { loc: projection.project(geo(path, line, r.lat, r.lon)?) });
            }
            Ok(PointSet::Photos(out))
        }
        PointKind::Checkins => {
            let mut out = Vec::new();
            for (line, r) in read_rows::<CheckInRow>(path, &["lat", "lon", "category_label"])? {
                let loc = projection.project(geo(path, line, r.lat, r.lon)?);
                out.push(CheckIn { loc, category: categorize_poi(&r.category_label) });
            }
            Ok(PointSet::Checkins(out))
        }
        PointKind::Observations => {
            let mut out = Vec::new();
            let cols = ["lat", "lon", "heading_deg", "timestamp", "contributor"];
            for (line, r) in read_rows::<ObservationRow>(path, &cols)? {
                let location = projection.project(geo(path, line, r.lat, r.lon)?);
                if !r.heading_deg.is_finite() || !r.timestamp.is_finite() {
                    return Err(DataError::parse(path, line, "non-finite heading or timestamp"));
                }
                out.push(PhotoObservation {
                    location,
                    heading: Heading::from_degrees(r.heading_deg),
                    timestamp: r.timestamp,
                    contributor: r.contributor,
                });
            }
            Ok(PointSet::Observations(out))
        }
        PointKind::Trajectories => {
            let rows = read_rows::<TrajectoryRow>(path, &["traj_id", "seq", "lat", "lon"])?;
            let mut order: Vec<String> = Vec::new();
            let mut groups: HashMap<String, Vec<(i64, u64, PlanarPoint)>> = HashMap::new();
            for (line, r) in rows {
                let p = projection.project(geo(path, line, r.lat, r.lon)?);
                let g = groups.entry(r.traj_id.clone()).or_insert_with(|| {
                    order.push(r.traj_id.clone());
                    Vec::new()
                });
                if let Some(prev) = g.iter().find(|x| x.0 == r.seq) {
                    return Err(DataError::parse(path, line, format!("duplicate seq {} (first on line {})", r.seq, prev.1)));
                }
                g.push((r.seq, line, p));
            }
            let mut out = Vec::with_capacity(order.len());
            for id in order {
                let mut pts = groups.remove(&id).expect("grouped");
                pts.sort_by_key(|x| x.0);
                let line = pts[0].1;
                let traj = Trajectory::new(pts.into_iter().map(|x| x.2).collect())
                    .map_err(|e| DataError::parse(path, line, format!("trajectory {id}: {e}")))?;
                out.push((id, traj));
            }
            Ok(PointSet::Trajectories(out))
        }
        PointKind::Stream => {
            let mut out: Vec<PictureEvent> = Vec::new();
            for (line, r) in read_rows::<StreamRow>(path, &["timestamp", "contributor"])? {
                if !r.timestamp.is_finite() {
                    return Err(DataError::parse(path, line, "non-finite timestamp"));
                }
                if out.last().is_some_and(|e| r.timestamp < e.timestamp) {
                    return Err(DataError::parse(path, line, "timestamps must be non-decreasing"));
                }
                out.push(PictureEvent::new(r.timestamp, r.contributor));
            }
            Ok(PointSet::Stream(out))
        }
    }
}

/// Writes a point set in the format [`load_points`] reads. Check-ins are
/// written with their group's first canonical label.
pub fn save_points(points: &PointSet, projection: &Projection, path: &Path) -> Result<(), DataError> {
    let mut w = writer(path)?;
    let err = |e| csv_write_err(path, e);
    match points {
        PointSet::Photos(v) => {
            for p in v {
                let g = projection.unproject(p.loc);
                w.serialize(LatLon { lat: g.lat, lon: g.lon }).map_err(err)?;
            }
        }
        PointSet::Checkins(v) => {
            for c in v {
                let g = projection.unproject(c.loc);
                let label = match c.category.index() {
                    1 => crate::scenic_scorer::NATURAL_SCENERY_LABELS[0],
                    2 => crate::scenic_scorer::TOURIST_ATTRACTION_LABELS[0],
                    _ => "other",
                };
                w.serialize(CheckInRow { lat: g.lat, lon: g.lon, category_label: label.into() }).map_err(err)?;
            }
        }
        PointSet::Observations(v) => {
            for o in v {
                let g = projection.unproject(o.location);
                let row = ObservationRow {
                    lat: g.lat,
                    lon: g.lon,
                    heading_deg: o.heading.radians().to_degrees(),
                    timestamp: o.timestamp,
                    contributor: o.contributor.clone(),
                };
                w.serialize(row).map_err(err)?;
            }
        }
        PointSet::Trajectories(v) => {
            for (id, t) in v {
                for (seq, p) in t.points.iter().enumerate() {
                    let g = projection.unproject(*p);
                    let row = TrajectoryRow { traj_id: id.clone(), seq: seq as i64, lat: g.lat, lon: g.lon };
                    w.serialize(row).map_err(err)?;
                }
            }
        }
        PointSet::Stream(v) => {
            for e in v {
                w.serialize(StreamRow { timestamp: e.timestamp, contributor: e.contributor.clone() }).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

#[derive(Deserialize, Serialize)]
struct LabelRow {
    subevent: u64,
}

/// Ground-truth segmentation as one `subevent` label per picture; each label
/// must occupy one contiguous run.
pub fn load_segmentation(path: &Path) -> Result<Segmentation, DataError> {
    let rows = read_rows::<LabelRow>(path, &["subevent"])?;
    let mut boundaries = Vec::new();
    let mut finished: HashMap<u64, u64> = HashMap::new();
    for (i, (line, r)) in rows.iter().enumerate() {
        if i > 0 && rows[i - 1].1.subevent != r.subevent {
            finished.insert(rows[i - 1].1.subevent, rows[i - 1].0);
            if let Some(prev) = finished.get(&r.subevent) {
                return Err(DataError::parse(path, *line, format!("label {} resumes after line {prev}", r.subevent)));
            }
            boundaries.push(i);
        }
    }
    Segmentation::new(rows.len(), boundaries).map_err(|e| DataError::parse(path, 0, e.to_string()))
}

/// Writes one `subevent` label per picture.
pub fn save_segmentation(seg: &Segmentation, path: &Path) -> Result<(), DataError> {
    let mut w = writer(path)?;
    for label in seg.labels() {
        w.serialize(LabelRow { subevent: label as u64 }).map_err(|e| csv_write_err(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}
