use thiserror::Error;

/// Every failure mode of the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive and finite (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("parameter `{name}` must be finite (got {value})")]
    NonFiniteParameter { name: &'static str, value: f64 },

    #[error("Ermakov condition violated: a*c = {ac} is below the threshold {threshold}")]
    ErmakovConditionViolated { ac: f64, threshold: f64 },

    #[error("the Ermakov coupling lambda must be nonzero")]
    ZeroLambda,

    #[error("Hermite degree {n} exceeds the supported maximum {max}")]
    DegreeTooLarge { n: usize, max: usize },

    #[error("1F1 parameter b = {b} is a nonpositive integer")]
    PoleInB { b: f64 },

    #[error("1F1({a}; {b}; {x}) did not converge within the supported range")]
    NonConvergent { a: f64, b: f64, x: f64 },

    #[error("chi = {chi} lies outside the supported range of the transformation function")]
    OutOfSupport { chi: f64 },

    #[error("chi = {chi} lies outside the certified nodeless window [-{window}, {window}]")]
    OutOfWindow { chi: f64, window: f64 },

    #[error("transformation function is not nodeless: {reason}")]
    NotNodeless { reason: String },

    #[error("invalid transformation parameters: {0}")]
    InvalidDarbouxSpec(String),

    #[error("missing state is not normalizable ({0})")]
    NotNormalizable(String),

    #[error("grid too coarse: estimated derivative error {estimate:.3e} exceeds {tolerance:.3e}")]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("fields are evaluated at different times ({left} vs {right})")]
    TimeMismatch { left: f64, right: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("mode expansion would exceed the index cap {cap}")]
    CapExceeded { cap: usize },

    #[error("truncation at n = {cap} leaves a Poisson tail of {tail:.3e}")]
    CapTooSmall { cap: usize, tail: f64 },

    #[error("time step {dt} outside the supported range [1e-7, 1e-3]")]
    InvalidTimeStep { dt: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
