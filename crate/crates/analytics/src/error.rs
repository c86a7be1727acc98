use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UrbanFormError {
    #[error("block {0}: housing plus jobs is zero, entropy undefined")]
    EmptyBlock(String),
    #[error("commute graph has no triplets, clustering undefined")]
    NoTriplets,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("degenerate polygon for {feature}: {reason}")]
    Degenerate { feature: String, reason: String },
    #[error("no zones selected")]
    EmptySelection,
    #[error("no OD mass touches the selected zones")]
    ZeroDenominator,
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("design matrix is rank deficient: column {0} depends on earlier columns")]
    RankDeficient(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coincident centroids for observations {0} and {1}")]
    CoincidentCentroids(usize, usize),
    #[error("standard errors must be positive")]
    NonPositiveStdError,
    #[error("no admissible candidate to start stepwise selection")]
    NoCandidate,
}
