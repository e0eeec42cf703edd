use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("band {band} is not resolved by a grid with nyquist frequency {nyquist}")]
    BandOutOfRange { band: f64, nyquist: f64 },

    #[error("grid under-resolved: spacing {spacing} exceeds required {required}")]
    UnderResolved { spacing: f64, required: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty series: {0}")]
    EmptySeries(&'static str),

    #[error("convexity violated: measured determinant ratio {measured} < required {required}")]
    ConvexityViolated { measured: f64, required: f64 },

    #[error("rescaling rejected: tau * lambda^m = {value} < 1 (Sobolev-embedding regime)")]
    RescaleRegime { value: f64 },

    #[error("trajectory left the valid frequency shell at t = {t}: |xi| = {xi_norm}, shell [{lo}, {hi}]")]
    ShellExit {
        t: f64,
        xi_norm: f64,
        lo: f64,
        hi: f64,
    },

    #[error("operator size budget exceeded: {0}")]
    SizeBudget(String),

    #[error("evolution invalid: norm drift {drift} exceeds {limit}")]
    NormDrift { drift: f64, limit: f64 },

    #[error("too few valid scan points: {got} < {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("cell {cell} violates budget {budget} on its own (grid too coarse for mu = {mu})")]
    CellBudget {
        cell: usize,
        budget: String,
        mu: f64,
    },

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed data: {0}")]
    Format(String),
}
