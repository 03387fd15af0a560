use thiserror::Error;

/// Errors raised by the spectral machinery.
///
/// Resonances and Neumann breakdowns inside a Nash-Moser run are folded into
/// the solve outcome; they surface here only when the linear-algebra
/// routines are called directly.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode count exceeds the hard cap of {cap} (cutoff {cutoff})")]
    CapacityExceeded { cap: usize, cutoff: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("aliasing budget exceeded: working cap {m_work} < required {required}")]
    AliasingBudgetExceeded { m_work: usize, required: usize },

    #[error("weight 1 + alpha is not safely positive: sup|alpha| estimate {sup} >= 1/2")]
    WeightNotPositive { sup: f64 },

    #[error("discretization too coarse: Mdisc = {mdisc} < 2 L = {required}")]
    DiscretizationTooCoarse { mdisc: usize, required: usize },

    #[error("spectrum too short: {0}")]
    SpectrumTooShort(String),

    #[error("non-resonance violated at mode j = {j}, l = {l}: divisor {divisor:e} below {threshold:e}")]
    NonResonanceViolated {
        j: usize,
        l: usize,
        divisor: f64,
        threshold: f64,
    },

    #[error("Neumann series diverging: term ratio {ratio:.3} after {terms} terms")]
    NeumannDiverging { ratio: f64, terms: usize },

    #[error("inverse contract failed: relative residual {relative:e}")]
    InverseContract { relative: f64 },

    #[error("forcing has nonzero space-time mean {mean:e}")]
    MeanNotZero { mean: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
