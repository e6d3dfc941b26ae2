use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("unknown algebra `{0}` (known: abelian(n), heisenberg3, aff1, su2, sl2)")]
    UnknownAlgebra(String),

    #[error("algebra `{0}` has no matrix representation; use a builtin algebra or supply `rep`")]
    MissingRepresentation(String),

    #[error("algebra file: {0}")]
    AlgebraFile(String),

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("expression evaluated to a non-finite value ({value}) at {at:?}")]
    NonFiniteExpression { value: f64, at: Vec<f64> },

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("finite-difference stencil around {at:?} comes within one step of the origin")]
    StencilCrossesOrigin { at: Vec<f64> },

    #[error("non-finite derivative of the norm at {at:?}; the norm is not smooth there")]
    NonSmooth { at: Vec<f64> },

    #[error("norm not strongly convex: {0}")]
    NotStronglyConvex(String),

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidIntegrator(String),

    #[error("step size underflow at t = {last_good_time}")]
    StepUnderflow { last_good_time: f64 },

    #[error("integration exceeded {max_steps} steps at t = {last_good_time}")]
    TooManySteps { max_steps: usize, last_good_time: f64 },

    #[error("non-finite state at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("not enough samples for differencing: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("surface analysis needs a two-dimensional algebra, got dimension {0}")]
    NotASurface(usize),

    #[error("no sign change of the tangential spray component at resolution {0}")]
    NoSignChange(usize),

    #[error("zero of eta at theta = {theta} violates g_y(y, [g,g]) = 0 (residual {residual:e})")]
    CharacterizationViolated { theta: f64, residual: f64 },

    #[error("flow starts at a zero of eta ({at:?}); the flow through it is stationary")]
    StartsAtZero { at: Vec<f64> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
