use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{row}: {message}")]
    Schema {
        file: String,
        row: usize,
        message: String,
    },
    #[error("{file}:{row}: unknown zone {zone:?}")]
    UnknownZone {
        file: String,
        row: usize,
        zone: String,
    },
    #[error("{file}:{row}: unknown node {node:?}")]
    UnknownNode {
        file: String,
        row: usize,
        node: String,
    },
    #[error("{file}:{row}: unknown block {block:?}")]
    UnknownBlock {
        file: String,
        row: usize,
        block: String,
    },
    #[error("{file}: {message}")]
    Json { file: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error)]
pub enum RouterError {
    #[error("zone {origin:?} cannot reach zone {destination:?} in period {period:?}")]
    Unreachable {
        origin: String,
        destination: String,
        period: String,
    },
    #[error("unknown zone {0:?}")]
    UnknownZone(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("link {from}->{to} has no travel time for period {period:?}")]
    MissingTravelTime {
        from: String,
        to: String,
        period: String,
    },
    #[error("minute {0} outside the day")]
    MinuteOutOfRange(u32),
    #[error("period schedule does not cover minute {0}")]
    Uncovered(u32),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("event {index} has negative miles_delta {miles}")]
    NegativeMiles { index: usize, miles: f64 },
    #[error("vehicle {vehicle}: log {which} miles {log} disagree with odometer {odometer}")]
    OdometerMismatch {
        vehicle: u32,
        which: &'static str,
        log: f64,
        odometer: f64,
    },
    #[error("vehicle {vehicle}: events out of time order at index {index}")]
    OutOfOrder { vehicle: u32, index: usize },
}
