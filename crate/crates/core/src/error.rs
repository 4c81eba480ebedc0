use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error)]
pub enum IsacError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("angle {0} rad lies outside the open interval (0, pi)")]
    AngleOutOfRange(f64),

    #[error("trajectory passes through the array origin at epoch {epoch}")]
    TrajectoryThroughOrigin { epoch: usize },

    #[error("scatterer lies on a beam null (|gain| = {gain:.3e})")]
    BeamNull { gain: f64 },

    #[error("no resolved scatterer survived illumination and separability")]
    EmptyMeasurementSet,

    #[error("degenerate Doppler geometry: sum of cos^2/var = {0:.3e}")]
    DegenerateGeometry(f64),

    #[error("singular geometry: {0}")]
    Singular(&'static str),

    #[error("invalid rate problem: {0}")]
    InvalidRateProblem(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, IsacError>;
