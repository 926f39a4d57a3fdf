use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(u32),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("negative dispersion radicand at xi = {xi} (constant state linearly unstable)")]
    NegativeRadicand { xi: f64 },
    #[error("eta = {value} >= 1 at x = {x}; modulus vanishes")]
    VanishingModulus { x: f64, value: f64 },
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("boundary decay violated: {0}")]
    BoundaryDecay(String),
    #[error("current momentum is zero; cannot rescale to the target")]
    ZeroMomentum,
    #[error("field is constant; speed undefined")]
    ConstantField,
    #[error("numerical blowup at t = {t}: {reason}")]
    Blowup { t: f64, reason: String },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("{0}")]
    Parse(String),
}
