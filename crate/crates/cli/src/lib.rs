//! Study workflow behind the `savsim` command: city generation, batch
//! simulation, cross-city regressions, the rate sweep and the share
//! threshold study.

pub mod batch;
pub mod config;
pub mod family;
pub mod output;
pub mod regress;
pub mod sweep;
pub mod thresholds;

pub use batch::{load_inputs, run_batch, CityInput, CityRecord, CityRun, PreparedCity};
pub use config::{AnalysisConfig, PipelineConfig};
pub use family::{Family, GenSpec};
pub use regress::{fit_bundle, RegressionBundle};
pub use sweep::{run_sweep, SweepOutcome, SweepSpec};
pub use thresholds::{run_threshold_study, ThresholdStudy};
