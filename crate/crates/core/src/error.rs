use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("k_max = {k_max} too large for n = {n} (need k_max < n/3)")]
    BandTooWide { k_max: usize, n: usize },
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
    #[error("region sampler needs at least two points, got {0}")]
    EmptySampler(usize),
    #[error("empty sampling lattice")]
    EmptyLattice,
    #[error("influence function undefined at the origin")]
    Origin,
    #[error("level value must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("degenerate region: {0}")]
    Degenerate(String),
    #[error("expected surface kind {expected}, got {got}")]
    WrongSurfaceKind { expected: &'static str, got: &'static str },
    #[error("level set does not meet the block")]
    EmptyIntersection,
    #[error("block closure contains the origin")]
    BlockTouchesOrigin,
    #[error("quadrature mismatch: {0}")]
    QuadratureMismatch(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("final time {t} precedes start time {t0}")]
    TimeOrder { t0: f64, t: f64 },
    #[error("time {t} beyond the periodic aliasing horizon {horizon}")]
    AliasingHorizon { t: f64, horizon: f64 },
    #[error("input is not solenoidal: relative divergence residual {0:e}")]
    NotSolenoidal(f64),
    #[error("field does not decay within the truncation radius; acknowledge truncation to proceed")]
    Truncated,
    #[error("CFL violated: dt = {dt} exceeds limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite state at t = {0} (under-resolution, not a physical blow-up indicator)")]
    NonFinite(f64),
    #[error("file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
