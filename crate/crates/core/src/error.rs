use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} violated (max residual {residual:.3e})")]
    ConstraintViolation { what: &'static str, residual: f64 },

    #[error("support set is empty")]
    EmptySupport,

    #[error("graph has no edges; incidence matrix is empty")]
    EmptyIncidence,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("graph filter is singular (min |eigenvalue| {min_abs_eig:.3e}, norm {norm:.3e})")]
    FilterSingular { min_abs_eig: f64, norm: f64 },

    #[error("component specification inconsistent with graph connectivity: {0}")]
    ComponentSpecification(String),

    #[error("line search collapsed at iteration {iteration} (step {step:.3e}, objective {objective:.6e})")]
    StepCollapse {
        iteration: usize,
        step: f64,
        objective: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("infeasible specification: {0}")]
    InfeasibleSpec(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
