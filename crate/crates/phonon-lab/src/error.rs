use thiserror::Error;

/// Errors surfaced by the physics and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unstable resonator: length {length_m} m >= radius of curvature {radius_m} m")]
    UnstableResonator { length_m: f64, radius_m: f64 },

    #[error("no acoustic mode falls inside the requested span")]
    EmptySpan,

    #[error("no optical resonance found in the requested span")]
    NoResonanceInSpan,

    #[error("no adjacent mode pair within {tolerance_hz} Hz of the {target_hz} Hz target")]
    NoPairFound { target_hz: f64, tolerance_hz: f64 },

    #[error("best pair has Stokes suppression {suppression:.3}, below the required {required:.3}")]
    SuppressionTooLow { suppression: f64, required: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("self-oscillation threshold reached: blue pump with C = {cooperativity:.4} >= 1")]
    SelfOscillation { cooperativity: f64 },

    #[error("probe detuning grid is empty")]
    EmptyGrid,

    #[error("no peak found: feature prominence {prominence:.4e} below {threshold:.4e}")]
    NoPeakFound { prominence: f64, threshold: f64 },

    #[error("fit did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("regression slope is non-positive; dataset is unphysical")]
    NegativeSlope,

    #[error("unphysical linewidth: gamma_plus {gamma_plus_hz} Hz < gamma0 {gamma0_hz} Hz")]
    UnphysicalLinewidth { gamma_plus_hz: f64, gamma0_hz: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violation: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
