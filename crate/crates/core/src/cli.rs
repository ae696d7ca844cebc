//! Command-line front end. Every command prints a JSON report on stdout and
//! a short table on stderr; reports and GeoJSON files embed the effective
//! configuration.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data_io::{self, synth, DataError, PointKind, PointSet};
use crate::direction_miner::{determine_all, TrajectoryMatcher};
use crate::event_localizer::{
    localization_error, localize, GridConfig, LocalizeError, MvdMode, TrapezoidConfig, Weighting,
};
use crate::geomath::{GeoPoint, PlanarPoint, Projection};
use crate::route_planner::{plan_route, PlanError, RouteQuery, RoutingGraph, Strategy};
use crate::scenic_scorer::{score_network, ScoreError, ScoringConfig};
use crate::stream_segmenter::{
    pair_counting_eval, redundancy_metrics, segment_cis, segment_cs, segment_mean, PictureStream, Segmentation,
    ViewerCount,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

const DEFAULT_ORIGIN: GeoPoint = GeoPoint { lat: 37.7749, lon: -122.4194 };

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Infeasible(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::UnknownKind(_) | DataError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LocalizeError> for CliError {
    fn from(e: LocalizeError) -> Self {
        match e {
            LocalizeError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::InfeasibleBudget { .. } | PlanError::Unreachable { .. } => CliError::Infeasible(e.to_string()),
            PlanError::InvalidQuery(_) | PlanError::SamePoint => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Every tunable of the pipeline. Values come from built-in defaults,
/// overridden by a JSON config file, overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub er: f64,
    /// Half view angle, radians.
    pub eta: f64,
    pub mvd_min: f64,
    pub mvd_max: f64,
    /// Range used by the fixed-range baseline.
    pub static_mvd: f64,
    pub glen: f64,
    pub sigma: f64,
    pub loc_th: f64,
    pub r: f64,
    pub delta: f64,
    pub weights: [f64; 3],
    pub angle_tol: f64,
    pub snap_gate: f64,
    pub trials: usize,
    pub area_margin: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrapezoidConfig::default();
        let g = GridConfig::default();
        let s = ScoringConfig::default();
        RunConfig {
            er: t.er,
            eta: t.eta,
            mvd_min: t.mvd_min,
            mvd_max: t.mvd_max,
            static_mvd: 45.0,
            glen: g.glen,
            sigma: g.sigma,
            loc_th: g.loc_th,
            r: 0.4,
            delta: s.delta,
            weights: s.weights,
            angle_tol: crate::direction_miner::DEFAULT_ANGLE_TOL,
            snap_gate: crate::direction_miner::DEFAULT_SNAP_GATE,
            trials: crate::route_planner::DEFAULT_TRIALS,
            area_margin: 0.0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn trapezoid(&self, mode: MvdMode) -> TrapezoidConfig {
        TrapezoidConfig { er: self.er, eta: self.eta, mvd_mode: mode, mvd_min: self.mvd_min, mvd_max: self.mvd_max }
    }

    pub fn grid(&self, weighting: Weighting) -> GridConfig {
        GridConfig { glen: self.glen, sigma: self.sigma, loc_th: self.loc_th, weighting }
    }

    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig { delta: self.delta, weights: self.weights }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: String| CliError::Usage(e);
        self.trapezoid(MvdMode::Dynamic).validate().map_err(|e| usage(e.to_string()))?;
        self.trapezoid(MvdMode::Static(self.static_mvd)).validate().map_err(|e| usage(e.to_string()))?;
        self.grid(Weighting::Gaussian).validate().map_err(|e| usage(e.to_string()))?;
        self.scoring().validate().map_err(|e| usage(e.to_string()))?;
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(usage(format!("r must lie in (0, 1], got {}", self.r)));
        }
        if !(self.angle_tol > 0.0 && self.angle_tol <= PI) {
            return Err(usage(format!("angle_tol must lie in (0, pi], got {}", self.angle_tol)));
        }
        if !(self.snap_gate > 0.0 && self.snap_gate.is_finite()) {
            return Err(usage("snap_gate must be positive".into()));
        }
        if self.trials == 0 {
            return Err(usage("trials must be at least 1".into()));
        }
        if !(self.area_margin >= 0.0 && self.area_margin.is_finite()) {
            return Err(usage("area_margin must be non-negative".into()));
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Flags that override individual config values.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON config file; flags take precedence over its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    er: Option<f64>,
    /// Half view angle in radians
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    mvd_min: Option<f64>,
    #[arg(long, global = true)]
    mvd_max: Option<f64>,
    #[arg(long, global = true)]
    static_mvd: Option<f64>,
    #[arg(long, global = true)]
    glen: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    loc_th: Option<f64>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Check-in group weights as W1,W2,W3
    #[arg(long, global = true, value_delimiter = ',', num_args = 3)]
    weights: Option<Vec<f64>>,
    #[arg(long, global = true)]
    angle_tol: Option<f64>,
    #[arg(long, global = true)]
    snap_gate: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    area_margin: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl ConfigFlags {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        take!(er, eta, mvd_min, mvd_max, static_mvd, glen, sigma, loc_th, r, delta, angle_tol, snap_gate, trials, area_margin, seed);
        if let Some(w) = &self.weights {
            cfg.weights = [w[0], w[1], w[2]];
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "crowdmine", version, about = "Event localization, stream segmentation and scenic route planning from crowd data")]
pub struct Cli {
    #[command(flatten)]
    pub flags: ConfigFlags,
    /// Worker threads for parallel stages (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate an event from photo observations, comparing dynamic and fixed view ranges
    Localize(LocalizeArgs),
    /// Split a picture stream into sub-events
    Segment(SegmentArgs),
    /// Score road segments from photos and check-ins
    Score(ScoreArgs),
    /// Plan a scenic route under a distance budget
    Plan(PlanArgs),
    /// Write synthetic fixtures
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// CSV with lat,lon,heading_deg,timestamp,contributor
    #[arg(long)]
    observations: PathBuf,
    /// True event position as LAT,LON; adds the error of each method to the report
    #[arg(long, value_parser = parse_latlon)]
    truth: Option<GeoPoint>,
    /// Projection origin as LAT,LON (default: mean observation position)
    #[arg(long, value_parser = parse_latlon)]
    origin: Option<GeoPoint>,
    /// Directory for grid and location GeoJSON of both methods
    #[arg(long)]
    geojson_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// CSV with timestamp,contributor
    #[arg(long)]
    stream: PathBuf,
    /// Number of nearby viewers N (default: distinct contributors in the stream)
    #[arg(long)]
    viewers: Option<usize>,
    /// Ground-truth CSV with one `subevent` label per picture
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Segment count for the equal-split baseline (default: as many as the individual-behavior rule finds)
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NetworkFiles {
    /// CSV with id,lat,lon
    #[arg(long)]
    nodes: PathBuf,
    /// CSV with id,u,v[,polyline]
    #[arg(long)]
    edges: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    network: NetworkFiles,
    /// CSV with lat,lon
    #[arg(long)]
    photos: PathBuf,
    /// CSV with lat,lon,category_label
    #[arg(long)]
    checkins: PathBuf,
    /// Output score file (segment_id,sp,sc,si,allowed_direction)
    #[arg(long)]
    out: PathBuf,
    /// Optional GeoJSON of the scored network
    #[arg(long)]
    geojson: Option<PathBuf>,
    /// Rows in the ranking table
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Hfs,
    Pbs,
    Rbs,
    All,
}

impl StrategyArg {
    fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyArg::Hfs => vec![Strategy::HfS],
            StrategyArg::Pbs => vec![Strategy::PbS],
            StrategyArg::Rbs => vec![Strategy::RbS],
            StrategyArg::All => Strategy::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    network: NetworkFiles,
    /// Score file written by `score`
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, value_parser = parse_latlon)]
    from: GeoPoint,
    #[arg(long, value_parser = parse_latlon)]
    to: GeoPoint,
    /// Distance budget in meters
    #[arg(long)]
    distmax: f64,
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    /// Taxi trajectories (traj_id,seq,lat,lon) used to restrict driving directions
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Output GeoJSON with one LineString per planned route
    #[arg(long)]
    geojson: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Grid,
    Scene,
    Stream,
    Fleet,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    #[arg(long)]
    out_dir: PathBuf,
    /// Geographic position of the fixture's center as LAT,LON
    #[arg(long, value_parser = parse_latlon)]
    origin: Option<GeoPoint>,
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 20)]
    cols: usize,
    #[arg(long, default_value_t = 100.0)]
    cell: f64,
    #[arg(long, default_value_t = 5.0)]
    corridor_si: f64,
    #[arg(long, default_value_t = 0.01)]
    background_si: f64,
    #[arg(long, default_value_t = 8)]
    viewers: usize,
    #[arg(long, default_value_t = 30.0)]
    radius: f64,
    #[arg(long, default_value_t = 3.0)]
    gps_sigma: f64,
    #[arg(long, default_value_t = 5.0)]
    heading_sigma: f64,
    #[arg(long, default_value_t = 10)]
    subevents: usize,
    /// Share of viewers covering each sub-event
    #[arg(long, default_value_t = 0.6)]
    coverage: f64,
    #[arg(long, default_value_t = 2.0)]
    bias: f64,
    #[arg(long, default_value_t = 40)]
    trips: usize,
    /// Extra photos per unit of planted score on each grid segment
    #[arg(long, default_value_t = 4.0)]
    media_rate: f64,
}

fn parse_latlon(s: &str) -> Result<GeoPoint, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LAT,LON, got '{s}'"))?;
    let lat: f64 = a.trim().parse().map_err(|_| format!("bad latitude '{a}'"))?;
    let lon: f64 = b.trim().parse().map_err(|_| format!("bad longitude '{b}'"))?;
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

fn latlon(proj: &Projection, p: PlanarPoint) -> Value {
    let g = proj.unproject(p);
    json!({ "lat": g.lat, "lon": g.lon })
}

fn print_report(report: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(report).expect("JSON values serialize");
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Projection centered on the mean coordinate of a point file.
fn centered_projection(path: &Path, kind: PointKind) -> Result<Projection, CliError> {
    // at latitude 0 the projection is linear in both coordinates, so the
    // planar mean maps back to the mean latitude and longitude
    let flat = Projection::new(GeoPoint { lat: 0.0, lon: 0.0 });
    let pts: Vec<PlanarPoint> = match data_io::load_points(path, kind, &flat)? {
        PointSet::Observations(v) => v.into_iter().map(|o| o.location).collect(),
        PointSet::Photos(v) => v.into_iter().map(|p| p.loc).collect(),
        _ => Vec::new(),
    };
    if pts.is_empty() {
        return Ok(flat);
    }
    let n = pts.len() as f64;
    let mean = pts.iter().fold(PlanarPoint::ORIGIN, |a, &b| a + b) * (1.0 / n);
    Ok(Projection::new(flat.unproject(mean)))
}

fn cmd_localize(args: &LocalizeArgs, cfg: &RunConfig) -> Result<Value, CliError> {
    let proj = match args.origin {
        Some(o) => Projection::new(o),
        None => centered_projection(&args.observations, PointKind::Observations)?,
    };
    let PointSet::Observations(obs) = data_io::load_points(&args.observations, PointKind::Observations, &proj)? else {
        unreachable!("observations requested")
    };
    let truth = args.truth.map(|g| proj.project(g));
    let methods = [
        ("dynamic_gaussian", cfg.trapezoid(MvdMode::Dynamic), cfg.grid(Weighting::Gaussian)),
        ("static_uniform", cfg.trapezoid(MvdMode::Static(cfg.static_mvd)), cfg.grid(Weighting::Uniform)),
    ];
    let cfg_json = cfg.to_json();
    let mut results = serde_json::Map::new();
    eprintln!("{:<18} {:>12} {:>12} {:>8} {:>10}", "method", "lat", "lon", "cells", "error_m");
    for (name, tcfg, gcfg) in methods {
        let mvd = crate::event_localizer::resolve_mvd(&obs, &tcfg)?;
        let (grid, loc) = localize(&obs, &tcfg, &gcfg)?;
        let error = truth.map(|t| localization_error(loc.centroid, t));
        let g = proj.unproject(loc.centroid);
        eprintln!(
            "{:<18} {:>12.6} {:>12.6} {:>8} {:>10}",
            name,
            g.lat,
            g.lon,
            loc.region.len(),
            error.map_or("-".into(), |e| format!("{e:.2}"))
        );
        if let Some(dir) = &args.geojson_dir {
            fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
            let mut conf = cfg_json.clone();
            conf["method"] = json!(name);
            data_io::write_json(&data_io::grid_geojson(&grid, &proj, Some(&conf)), &dir.join(format!("{name}_grid.geojson")))?;
            data_io::write_json(
                &data_io::event_location_geojson(&grid, &loc, &proj, Some(&conf)),
                &dir.join(format!("{name}_location.geojson")),
            )?;
        }
        results.insert(
            name.into(),
            json!({
                "centroid": latlon(&proj, loc.centroid),
                "mvd": mvd,
                "region_cells": loc.region.len(),
                "covered_cells": grid.cells.len(),
                "error_m": error,
            }),
        );
    }
    Ok(json!({
        "command": "localize",
        "config": cfg_json,
        "observations": obs.len(),
        "truth": args.truth.map(|g| json!({ "lat": g.lat, "lon": g.lon })),
        "methods": results,
    }))
}

fn segmentation_json(name: &str, seg: &Segmentation, stream: &PictureStream, truth: Option<&Segmentation>) -> Result<Value, CliError> {
    let data = |e: crate::stream_segmenter::SegmentError| CliError::Data(e.to_string());
    let red = redundancy_metrics(stream, seg).map_err(data)?;
    let mut v = json!({
        "method": name,
        "segments": seg.num_segments(),
        "boundaries": seg.boundaries(),
        "sizes": seg.sizes(),
        "red_r": red.red_r,
        "r_rc": red.r_rc,
    });
    if let Some(g) = truth {
        let m = pair_counting_eval(seg, g).map_err(data)?;
        v["precision"] = json!(m.precision);
        v["recall"] = json!(m.recall);
        v["f1"] = json!(m.f1);
    }
    Ok(v)
}

fn cmd_segment(args: &SegmentArgs, cfg: &RunConfig) -> Result<Value, CliError> {
    let flat = Projection::new(DEFAULT_ORIGIN);
    let PointSet::Stream(events) = data_io::load_points(&args.stream, PointKind::Stream, &flat)? else {
        unreachable!("stream requested")
    };
    if events.is_empty() {
        return Err(CliError::Data(format!("{}: stream is empty", args.stream.display())));
    }
    let count = match args.viewers {
        Some(0) => return Err(CliError::Usage("--viewers must be positive".into())),
        Some(n) => ViewerCount::Known(n),
        None => ViewerCount::Inferred,
    };
    let stream = PictureStream::new(events, count).map_err(|e| CliError::Data(e.to_string()))?;
    let truth = match &args.truth {
        Some(p) => {
            let g = data_io::load_segmentation(p)?;
            if g.len() != stream.len() {
                return Err(CliError::Data(format!(
                    "{}: {} labels for {} pictures",
                    p.display(),
                    g.len(),
                    stream.len()
                )));
            }
            Some(g)
        }
        None => None,
    };
    let usage = |e: crate::stream_segmenter::SegmentError| CliError::Usage(e.to_string());
    let cs = segment_cs(&stream, cfg.r).map_err(usage)?;
    let cis = segment_cis(&stream, cfg.r).map_err(usage)?;
    let k = args.k.unwrap_or(cis.num_segments());
    let mean = segment_mean(&stream, k).map_err(usage)?;
    let mut methods = Vec::new();
    eprintln!("{:<6} {:>9} {:>10} {:>8} {:>8}", "method", "segments", "precision", "recall", "f1");
    for (name, seg) in [("cs", &cs), ("cis", &cis), ("mean", &mean)] {
        let v = segmentation_json(name, seg, &stream, truth.as_ref())?;
        let f = |key: &str| v.get(key).and_then(Value::as_f64).map_or("-".into(), |x| format!("{x:.4}"));
        eprintln!("{:<6} {:>9} {:>10} {:>8} {:>8}", name, seg.num_segments(), f("precision"), f("recall"), f("f1"));
        methods.push(v);
    }
    let truth_json = match &truth {
        Some(g) => {
            let red = redundancy_metrics(&stream, g).map_err(|e| CliError::Data(e.to_string()))?;
            json!({ "segments": g.num_segments(), "red_r": red.red_r, "r_rc": red.r_rc })
        }
        None => Value::Null,
    };
    Ok(json!({
        "command": "segment",
        "config": cfg.to_json(),
        "pictures": stream.len(),
        "viewers": stream.viewers(),
        "mean_k": k,
        "methods": methods,
        "truth": truth_json,
    }))
}

fn cmd_score(args: &ScoreArgs, cfg: &RunConfig) -> Result<Value, CliError> {
    let loaded = data_io::load_network(&args.network.nodes, &args.network.edges)?;
    let proj = loaded.projection;
    let PointSet::Photos(photos) = data_io::load_points(&args.photos, PointKind::Photos, &proj)? else {
        unreachable!("photos requested")
    };
    let PointSet::Checkins(checkins) = data_io::load_points(&args.checkins, PointKind::Checkins, &proj)? else {
        unreachable!("checkins requested")
    };
    let scored = score_network(&loaded.network, &photos, &checkins, &cfg.scoring())?;
    data_io::save_scores(&scored, &args.out)?;
    if let Some(path) = &args.geojson {
        data_io::write_json(&data_io::network_geojson(&scored, &proj, Some(&cfg.to_json())), path)?;
    }
    let ranked = scored.ranked();
    eprintln!("{:>5} {:>10} {:>10} {:>10} {:>10}", "rank", "segment", "sp", "sc", "si");
    let mut top = Vec::new();
    for (rank, id) in ranked.iter().take(args.top).enumerate() {
        let s = scored.score(*id).expect("ranked segment");
        eprintln!("{:>5} {:>10} {:>10.4} {:>10.6} {:>10.6}", rank + 1, id.0, s.sp, s.sc, s.si);
        top.push(json!({ "rank": rank + 1, "segment_id": id.0, "sp": s.sp, "sc": s.sc, "si": s.si }));
    }
    Ok(json!({
        "command": "score",
        "config": cfg.to_json(),
        "segments": scored.network.segments().len(),
        "photos": photos.len(),
        "checkins": checkins.len(),
        "top": top,
    }))
}

fn cmd_plan(args: &PlanArgs, cfg: &RunConfig) -> Result<Value, CliError> {
    if !(args.distmax > 0.0 && args.distmax.is_finite()) {
        return Err(CliError::Usage("--distmax must be positive".into()));
    }
    let (mut scored, proj) = data_io::load_scored_network(&args.network.nodes, &args.network.edges, &args.scores)?;
    let from = proj.project(args.from);
    let to = proj.project(args.to);
    let mut mined = Value::Null;
    if let Some(path) = &args.trajectories {
        let PointSet::Trajectories(trajs) = data_io::load_points(path, PointKind::Trajectories, &proj)? else {
            unreachable!("trajectories requested")
        };
        let matcher = TrajectoryMatcher::new(&scored.network, cfg.snap_gate).map_err(|e| CliError::Data(e.to_string()))?;
        let matched: Vec<_> = trajs.iter().filter_map(|(_, t)| matcher.match_trajectory(t).ok()).collect();
        let dirs = determine_all(&scored.network, &matched, from, to, cfg.angle_tol);
        let restricted = dirs.iter().filter(|(_, d)| *d != crate::network::AllowedDirection::Both).count();
        for (id, d) in dirs {
            scored.set_direction(id, d).expect("segment of this network");
        }
        mined = json!({ "trajectories": trajs.len(), "matched": matched.len(), "restricted_segments": restricted });
    }
    let mut routes = Vec::new();
    let mut features = Vec::new();
    eprintln!("{:<6} {:>12} {:>12} {:>9} {:>9}", "method", "score", "distance_m", "segments", "selected");
    for strategy in args.strategy.strategies() {
        let query = RouteQuery {
            origin: from,
            destination: to,
            distmax: args.distmax,
            strategy,
            trials: cfg.trials,
            seed: cfg.seed,
            area_margin: cfg.area_margin,
        };
        let route = plan_route(&query, &scored)?;
        eprintln!(
            "{:<6} {:>12.6} {:>12.1} {:>9} {:>9}",
            strategy.name(),
            route.scenic_score,
            route.total_distance,
            route.traversals.len(),
            route.selected.len()
        );
        features.push(data_io::route_feature(&route, &scored, &proj, strategy, cfg.seed));
        routes.push(json!({
            "strategy": strategy.name(),
            "scenic_score": route.scenic_score,
            "total_distance": route.total_distance,
            "segments": route.traversals.len(),
            "selected_segments": route.selected_segments().iter().map(|s| s.0).collect::<Vec<_>>(),
        }));
    }
    // shortest path inside the same interested area, for reference
    let area = crate::route_planner::interested_area(&scored, from, to, cfg.area_margin)?;
    let o = crate::route_planner::snap_to_node(&area, from, "origin")?;
    let d = crate::route_planner::snap_to_node(&area, to, "destination")?;
    let sp = RoutingGraph::new(&area).initial_route(o, d)?;
    if let Some(path) = &args.geojson {
        let mut conf = cfg.to_json();
        conf["distmax"] = json!(args.distmax);
        data_io::write_json(&data_io::routes_geojson(features, Some(&conf)), path)?;
    }
    Ok(json!({
        "command": "plan",
        "config": cfg.to_json(),
        "query": {
            "from": { "lat": args.from.lat, "lon": args.from.lon },
            "to": { "lat": args.to.lat, "lon": args.to.lon },
            "distmax": args.distmax,
            "origin_node": o.0,
            "destination_node": d.0,
        },
        "shortest_path": { "total_distance": sp.total_distance, "scenic_score": sp.scenic_score },
        "directions": mined,
        "routes": routes,
    }))
}

/// Translates `net` so its node centroid sits at the planar origin.
fn centered(net: &crate::network::RoadNetwork) -> (crate::network::RoadNetwork, PlanarPoint) {
    let n = net.nodes().len().max(1) as f64;
    let c = net.nodes().values().fold(PlanarPoint::ORIGIN, |a, &b| a + b) * (1.0 / n);
    (net.translated(PlanarPoint::ORIGIN - c), c)
}

fn cmd_synth(args: &SynthArgs, cfg: &RunConfig) -> Result<Value, CliError> {
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let proj = Projection::new(args.origin.unwrap_or(DEFAULT_ORIGIN));
    let seed = cfg.seed;
    let mut files = Vec::new();
    let mut extra = json!({});
    match args.kind {
        SynthKind::Grid | SynthKind::Fleet => {
            let (corridor_si, background_si) = match args.kind {
                SynthKind::Grid => (args.corridor_si, args.background_si),
                _ => (1.0, 1.0),
            };
            let fx = data_io::gen_grid_network(args.rows, args.cols, args.cell, corridor_si, background_si, seed)?;
            let (net, shift) = centered(&fx.scored.network);
            let mut scored = crate::scenic_scorer::ScoredRoadNetwork::new(net, fx.scored.scores().to_vec());
            for (s, _, d) in fx.scored.iter() {
                scored.set_direction(s.id, d).expect("same segments");
            }
            data_io::save_network(&scored.network, &proj, &dir.join("nodes.csv"), &dir.join("edges.csv"))?;
            data_io::save_scores(&scored, &dir.join("scores.csv"))?;
            files.extend(["nodes.csv", "edges.csv", "scores.csv"]);
            extra["nodes"] = json!(scored.network.nodes().len());
            extra["segments"] = json!(scored.network.segments().len());
            let corner = |p: PlanarPoint| {
                let g = proj.unproject(p - shift);
                json!({ "lat": g.lat, "lon": g.lon })
            };
            let far = PlanarPoint::new((args.cols - 1) as f64 * args.cell, (args.rows - 1) as f64 * args.cell);
            extra["lower_left"] = corner(PlanarPoint::ORIGIN);
            extra["upper_right"] = corner(far);
            if args.kind == SynthKind::Grid {
                extra["corridor"] = json!(fx.corridor.iter().map(|s| s.0).collect::<Vec<_>>());
                let (photos, checkins) = data_io::gen_scenic_media(&scored, args.media_rate, seed)?;
                extra["photos"] = json!(photos.len());
                extra["checkins"] = json!(checkins.len());
                data_io::save_points(&PointSet::Photos(photos), &proj, &dir.join("photos.csv"))?;
                data_io::save_points(&PointSet::Checkins(checkins), &proj, &dir.join("checkins.csv"))?;
                files.extend(["photos.csv", "checkins.csv"]);
            } else {
                let params = synth::FleetParams { trips: args.trips, gps_sigma: args.gps_sigma, ..Default::default() };
                let fleet = data_io::gen_taxi_fleet(&fx.scored, PlanarPoint::ORIGIN, far, &params, seed)?;
                let trajs = fleet
                    .trajectories
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let pts = t.points.iter().map(|&p| p - shift).collect();
                        (format!("t{i}"), crate::direction_miner::Trajectory { points: pts })
                    })
                    .collect();
                data_io::save_points(&PointSet::Trajectories(trajs), &proj, &dir.join("trajectories.csv"))?;
                files.push("trajectories.csv");
                extra["trajectories"] = json!(fleet.trajectories.len());
            }
        }
        SynthKind::Scene => {
            let obs = data_io::gen_event_scene(PlanarPoint::ORIGIN, args.viewers, args.radius, args.gps_sigma, args.heading_sigma, seed)?;
            data_io::save_points(&PointSet::Observations(obs), &proj, &dir.join("observations.csv"))?;
            files.push("observations.csv");
            extra["truth"] = json!({ "lat": proj.origin.lat, "lon": proj.origin.lon });
        }
        SynthKind::Stream => {
            let (stream, truth) = data_io::gen_picture_stream(args.subevents, args.viewers, args.coverage, args.bias, seed)?;
            data_io::save_points(&PointSet::Stream(stream.events().to_vec()), &proj, &dir.join("stream.csv"))?;
            data_io::save_segmentation(&truth, &dir.join("truth.csv"))?;
            files.extend(["stream.csv", "truth.csv"]);
            extra["pictures"] = json!(stream.len());
            extra["subevents"] = json!(truth.num_segments());
            extra["viewers"] = json!(args.viewers);
        }
    }
    eprintln!("wrote {} file(s) to {}", files.len(), dir.display());
    Ok(json!({
        "command": "synth",
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "config": cfg.to_json(),
        "files": files,
        "summary": extra,
    }))
}

pub fn run(cli: &Cli) -> Result<Value, CliError> {
    let cfg = cli.flags.resolve()?;
    let go = || match &cli.command {
        Command::Localize(a) => cmd_localize(a, &cfg),
        Command::Segment(a) => cmd_segment(a, &cfg),
        Command::Score(a) => cmd_score(a, &cfg),
        Command::Plan(a) => cmd_plan(a, &cfg),
        Command::Synth(a) => cmd_synth(a, &cfg),
    };
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            print_report(&report);
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("crowdmine").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{ "glen": 7.0, "r": 0.3 }"#).unwrap();
        let p = path.to_str().unwrap();
        let cli = parse(&["--config", p, "--r", "0.6", "segment", "--stream", "x.csv"]);
        let cfg = cli.flags.resolve().unwrap();
        assert_eq!(cfg.glen, 7.0);
        assert_eq!(cfg.r, 0.6);
        assert_eq!(cfg.sigma, 0.5);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let cli = parse(&["localize", "--observations", "o.csv", "--glen", "0"]);
        assert_eq!(cli.flags.resolve().unwrap_err().exit_code(), EXIT_USAGE);
        let cli = parse(&["segment", "--stream", "s.csv", "--r", "1.5"]);
        assert_eq!(cli.flags.resolve().unwrap_err().exit_code(), EXIT_USAGE);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{ "glne": 7.0 }"#).unwrap();
        let cli = parse(&["--config", path.to_str().unwrap(), "segment", "--stream", "s.csv"]);
        assert!(matches!(cli.flags.resolve(), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_synth_kind_is_rejected() {
        let e = Cli::try_parse_from(["crowdmine", "synth", "forest", "--out-dir", "x"]).unwrap_err();
        assert!(e.use_stderr());
    }

    #[test]
    fn latlon_parsing() {
        assert_eq!(parse_latlon("37.5, -122.25").unwrap(), GeoPoint { lat: 37.5, lon: -122.25 });
        assert!(parse_latlon("95,0").is_err());
        assert!(parse_latlon("12").is_err());
    }
}
