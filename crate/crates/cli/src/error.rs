use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("config error at `{path}`: {message}")]
    Semantic { path: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] lispray::Error),
}

impl CliError {
    /// Stable machine-readable name of the failure.
    pub fn code(&self) -> &'static str {
        use lispray::Error as E;
        match self {
            CliError::Parse { .. } => "config_parse",
            CliError::Semantic { .. } => "config_invalid",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::InvalidAlgebra(_) | E::UnknownAlgebra(_) | E::AlgebraFile(_) => "invalid_algebra",
                E::MissingRepresentation(_) => "missing_representation",
                E::Expression { .. } | E::NonFiniteExpression { .. } => "expression",
                E::ZeroVector => "zero_vector",
                E::StencilCrossesOrigin { .. } => "stencil_crosses_origin",
                E::NonSmooth { .. } => "non_smooth",
                E::NotStronglyConvex(_) => "not_strongly_convex",
                E::InvalidNorm(_) => "invalid_norm",
                E::InvalidIntegrator(_) => "invalid_integrator",
                E::StepUnderflow { .. } => "step_underflow",
                E::TooManySteps { .. } => "too_many_steps",
                E::NonFiniteState { .. } => "non_finite_state",
                E::InsufficientSamples { .. } => "insufficient_samples",
                E::NotASurface(_) => "not_a_surface",
                E::NoSignChange(_) => "no_sign_change",
                E::CharacterizationViolated { .. } => "characterization_violated",
                E::StartsAtZero { .. } => "starts_at_zero",
            },
        }
    }

    /// Process exit status: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Semantic { .. } => 2,
            _ => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({ "code": self.code(), "message": self.to_string() });
        match self {
            CliError::Parse { line, column, .. } => {
                v["line"] = (*line).into();
                v["column"] = (*column).into();
            }
            CliError::Semantic { path, .. } => v["path"] = path.clone().into(),
            _ => {}
        }
        v
    }
}
