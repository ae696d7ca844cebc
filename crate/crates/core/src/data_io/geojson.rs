//! GeoJSON builders. Positions are `[lon, lat]`; properties are plain JSON
//! so output bytes depend only on the inputs.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::DataError;
use crate::event_localizer::{AttentionGrid, CellIndex, EventLocation};
use crate::geomath::{PlanarPoint, Projection};
use crate::network::Direction;
use crate::route_planner::{Strategy, TravelRoute};
use crate::scenic_scorer::ScoredRoadNetwork;

fn position(proj: &Projection, p: PlanarPoint) -> Value {
    let g = proj.unproject(p);
    json!([g.lon, g.lat])
}

fn collection(features: Vec<Value>, config: Option<&Value>) -> Value {
    let mut fc = json!({ "type": "FeatureCollection", "features": features });
    if let Some(cfg) = config {
        fc["config"] = cfg.clone();
    }
    fc
}

fn cell_feature(grid: &AttentionGrid, idx: CellIndex, proj: &Projection) -> Value {
    let c = grid.cell_centroid(idx);
    let h = grid.glen / 2.0;
    let ring: Vec<Value> = [(-h, -h), (h, -h), (h, h), (-h, h), (-h, -h)]
        .iter()
        .map(|&(dx, dy)| position(proj, c + PlanarPoint::new(dx, dy)))
        .collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "Polygon", "coordinates": [ring] },
        "properties": { "i": idx.0, "j": idx.1, "alc": grid.cells.get(&idx).copied().unwrap_or(0.0) },
    })
}

/// Every covered cell of the grid as a square polygon carrying its `alc`.
pub fn grid_geojson(grid: &AttentionGrid, proj: &Projection, config: Option<&Value>) -> Value {
    let features = grid.cells.keys().map(|&idx| cell_feature(grid, idx, proj)).collect();
    collection(features, config)
}

/// Region cells plus a centroid point; no features for an empty region.
pub fn event_location_geojson(
    grid: &AttentionGrid,
    loc: &EventLocation,
    proj: &Projection,
    config: Option<&Value>,
) -> Value {
    let mut features: Vec<Value> = loc.region.iter().map(|&idx| cell_feature(grid, idx, proj)).collect();
    if !loc.region.is_empty() {
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": position(proj, loc.centroid) },
            "properties": { "role": "centroid", "cells": loc.region.len() },
        }));
    }
    collection(features, config)
}

/// Route as a LineString through every traversed shape point.
pub fn route_feature(
    route: &TravelRoute,
    net: &ScoredRoadNetwork,
    proj: &Projection,
    strategy: Strategy,
    seed: u64,
) -> Value {
    let mut pts: Vec<PlanarPoint> = vec![net.network.node(route.origin).expect("origin node")];
    for t in &route.traversals {
        let s = net.network.segment(t.segment).expect("route segment");
        match t.direction {
            Direction::Forward => pts.extend_from_slice(&s.polyline[1..]),
            Direction::Backward => pts.extend(s.polyline.iter().rev().skip(1)),
        }
    }
    if pts.len() == 1 {
        pts.push(pts[0]);
    }
    let coords: Vec<Value> = pts.into_iter().map(|p| position(proj, p)).collect();
    let traversals: Vec<Value> = route
        .traversals
        .iter()
        .map(|t| json!([t.segment.0, if t.direction == Direction::Forward { "forward" } else { "backward" }]))
        .collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": {
            "strategy": strategy.name(),
            "seed": seed,
            "total_distance": route.total_distance,
            "scenic_score": route.scenic_score,
            "origin_node": route.origin.0,
            "destination_node": route.destination.0,
            "selected_segments": route.selected_segments().iter().map(|s| s.0).collect::<Vec<_>>(),
            "traversals": traversals,
        },
    })
}

pub fn routes_geojson(features: Vec<Value>, config: Option<&Value>) -> Value {
    collection(features, config)
}

/// One LineString per segment with its scores and allowed direction.
pub fn network_geojson(net: &ScoredRoadNetwork, proj: &Projection, config: Option<&Value>) -> Value {
    let features = net
        .iter()
        .map(|(s, sc, dir)| {
            let coords: Vec<Value> = s.polyline.iter().map(|p| position(proj, *p)).collect();
            json!({
                "type": "Feature",
                "geometry": { "type": "LineString", "coordinates": coords },
                "properties": {
                    "segment_id": s.id.0,
                    "u": s.u.0,
                    "v": s.v.0,
                    "length": s.length,
                    "sp": sc.sp,
                    "sc": sc.sc,
                    "si": sc.si,
                    "allowed_direction": dir.as_str(),
                },
            })
        })
        .collect();
    collection(features, config)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json(value: &Value, path: &Path) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}
