//! Urban-form measurement, boundary alignment and the regression toolkit
//! used to relate city structure to fleet performance.

pub mod error;
pub mod geoalign;
pub mod stats;
pub mod urbanform;

pub use error::{GeoError, StatsError, UrbanFormError};
pub use geoalign::{align_boundary, intra_city_trip_share, select_cities, AlignmentResult, SelectionCriteria};
pub use stats::{
    coeff_ttest, kurtosis, morans_i, morans_test, ols, stepwise_select, transform_variables, vif, DesignTable,
    RegressionResult, StepwiseConfig,
};
pub use urbanform::{
    accessibility_counts, build_urbanform_vector, classify_intersections, job_house_entropy, od_clustering_coefficient,
    CommuteFlowGraph, UrbanFormVector,
};
