//! Zone-based simulator for shared automated vehicle (SAV) fleets.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: city data model, plain-text file formats, validation and a
//!   synthetic grid-city generator.
//! - [`router`]: per-period zone-to-zone travel time and distance skims.
//! - [`demand`]: Poisson trip synthesis from OD means.
//! - [`engine`]: the two-day discrete-time dispatch simulation.
//! - [`metrics`]: served trips per vehicle, pooled share and extra VMT.

pub mod demand;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod router;
pub mod scenario;
pub mod seed;
pub mod synth;

pub use demand::{
    build_trips, default_departure_histogram, synthesize_trips, DemandParams, DepartureHistogram, TripRequest, TripState,
};
pub use engine::{run_simulation, run_with_trips, EventKind, EventLog, EventRecord, SimConfig, SimulationResult};
pub use error::{ConfigError, MetricsError, RouterError, ScenarioError};
pub use metrics::{compute_performance, vmt_accounting, PerformanceReport};
pub use router::{build_skims, SkimSet};
pub use scenario::{load_scenario, validate_scenario, write_scenario, Scenario, ValidationReport};
pub use synth::{generate_synthetic_city, SynthParams};
