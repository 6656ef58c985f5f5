use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("interpolation samples must be strictly increasing in t (index {index})")]
    NonMonotoneSamples { index: usize },

    #[error("sample at t = {t} lies at or beyond R^2 = {r2} but has nonzero value {value}")]
    NonzeroBeyondSupport { t: f64, r2: f64, value: f64 },

    #[error("cutoff support radius {c_sup} violates 1 < c_sup and c_sup^2 < 2 - 1/m (m = {m})")]
    AliasingGuard { c_sup: f64, m: usize },

    #[error("partition check failed: |sum - 1| = {deviation:e} at radius {radius}")]
    PartitionViolation { radius: f64, deviation: f64 },

    #[error("requested K = {requested} needs {nodes} quadrature nodes, above the cap of {cap}")]
    MemoryCap { requested: usize, nodes: usize, cap: usize },

    #[error("quadrature self-consistency failed: node doubling moved c_{k} by {change:e} (tolerance {tolerance:e})")]
    QuadratureInconsistent { k: i64, change: f64, tolerance: f64 },

    #[error("fit range [{k_lo}, {k_hi}] holds {available} coefficients, need at least {required}")]
    FitRangeTooSmall { k_lo: usize, k_hi: usize, available: usize, required: usize },

    #[error("only {usable} envelope points above the noise floor {floor:e} in [{k_lo}, {k_hi}]")]
    NoiseFloor { k_lo: usize, k_hi: usize, usable: usize, floor: f64 },

    #[error("tail {achieved:e} at K = {k} is above the requested {requested:e} and K is capped")]
    TruncationUnreachable { requested: f64, achieved: f64, k: usize },

    #[error("Sobolev ladder did not converge by K = {k}: last partial sums {previous} and {last}")]
    LadderDiverged { k: usize, previous: f64, last: f64 },

    #[error("j range [{j_min}, {j_max}] misses dyadic support; required at least [{need_min}, {need_max}]")]
    JRangeIncomplete { j_min: i32, j_max: i32, need_min: i32, need_max: i32 },

    #[error("finite differences of order {order} are noisy: step halving changed the norm by {change:e}")]
    DifferentiationNoise { order: usize, change: f64 },

    #[error("shell j = {j} starts at |xi| = {shell_start} beyond the grid Nyquist radius {nyquist}")]
    ShellBeyondNyquist { j: i32, shell_start: f64, nyquist: f64 },

    #[error("grid too coarse: {reason}")]
    GridTooCoarse { reason: String },

    #[error("grid mismatch: {reason}")]
    GridMismatch { reason: String },

    #[error("direct evaluation needs {required} operations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
