//! File formats, synthetic fixtures and GeoJSON export.
//!
//! Tabular inputs are CSV with a header row; coordinates in files are
//! decimal degrees and are projected to meters on load.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::network::NetworkError;

pub mod geojson;
pub mod synth;
pub mod tables;

pub use geojson::{
    event_location_geojson, grid_geojson, network_geojson, route_feature, routes_geojson, write_json,
};
pub use synth::{
    gen_event_scene, gen_grid_network, gen_picture_stream, gen_scenic_media, gen_taxi_fleet, Fleet, FleetParams, GridFixture,
};
pub use tables::{
    load_network, load_points, load_scored_network, load_scores, load_segmentation, save_network,
    save_points, save_scores, save_segmentation, LoadedNetwork, PointKind, PointSet,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{path}:{line}: {source}")]
    Network { path: PathBuf, line: u64, source: NetworkError },
    #[error("unknown point kind '{0}' (expected photos, checkins, observations, trajectories or stream)")]
    UnknownKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl DataError {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        DataError::Parse { path: path.into(), line, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }
}
