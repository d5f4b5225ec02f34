use thiserror::Error;

/// Errors produced by map construction and the numerical operations built on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("x = {x} is outside the domain [0, 1]")]
    OutsideDomain { x: f64 },

    #[error("ambiguous at discontinuity: x = d = {d} requires an explicit side")]
    AmbiguousAtDiscontinuity { d: f64 },

    #[error("y = {y} has no preimage on the {branch} branch (image is [{img_lo}, {img_hi}])")]
    NoPreimageOnBranch {
        y: f64,
        branch: &'static str,
        img_lo: f64,
        img_hi: f64,
    },

    #[error("orbit hits discontinuity at step {step} (x = {x}) and no side policy is configured")]
    OrbitHitsDiscontinuity { step: usize, x: f64 },

    #[error("depth {requested} exceeds the configured cap {cap} (2^{requested} cylinders)")]
    DepthCap { requested: usize, cap: usize },

    #[error("word {word} is not admissible (empty cylinder)")]
    InadmissibleWord { word: String },

    #[error("no boundary cylinder of index {k} on side {side} within the depth cap {cap}")]
    NoBoundaryCylinder { k: usize, side: String, cap: usize },

    #[error(
        "periodic-point iteration did not converge for word {word}: residual {residual:e} after {iterations} iterations"
    )]
    NonConvergence {
        word: String,
        residual: f64,
        iterations: usize,
    },

    #[error("word {word} admits no periodic point (pullback leaves the branch image)")]
    NoPeriodicPoint { word: String },

    #[error("orbit points too close together (gap {gap:e} < {min_gap:e}); cannot place disjoint bumps")]
    CoincidentOrbitPoints { gap: f64, min_gap: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("power iteration did not converge after {iterations} steps")]
    PowerIterationDiverged { iterations: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
