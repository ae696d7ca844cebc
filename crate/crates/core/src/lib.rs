//! Crowd-data mining toolkit: localizes and segments crowd-photographed
//! events, scores road segments for scenery and plans scenic routes under a
//! distance budget.

pub mod cli;
pub mod data_io;
pub mod direction_miner;
pub mod event_localizer;
pub mod geomath;
pub mod network;
pub mod route_planner;
pub mod scenic_scorer;
pub mod stream_segmenter;

pub use geomath::{GeoPoint, Heading, PlanarPoint, Projection};
pub use network::{AllowedDirection, Direction, NodeId, RoadNetwork, RoadSegment, SegmentId};
