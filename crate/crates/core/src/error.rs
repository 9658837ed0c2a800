use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("exact arithmetic overflow while enumerating the ball with X = {x:e}")]
    Overflow { x: f64 },

    #[error("integer overflow in {0}")]
    ArithmeticOverflow(&'static str),

    #[error("iteration cap of {cap} exceeded in {context}")]
    IterationCap { context: &'static str, cap: usize },

    #[error("pole of {function} at {at}")]
    Pole { function: &'static str, at: String },

    #[error("{context} did not converge within {terms} terms")]
    NonConvergence { context: &'static str, terms: usize },

    #[error("search budget of {budget} elements exceeded")]
    BudgetExceeded { budget: usize },

    #[error("two distinct group elements fall within the dedup tolerance {tolerance}")]
    DedupCollision { tolerance: f64 },

    #[error("geodesic table covers norms up to {covered} but the kernel support needs {needed}")]
    CoverageInsufficient { covered: f64, needed: f64 },

    #[error("moment condition violated: |int m(v) v^(-1/2) dv| = {moment:e} > {tolerance:e}")]
    MomentViolation { moment: f64, tolerance: f64 },

    #[error("empty grid")]
    EmptyGrid,

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad caller input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::EmptyGrid | Error::MomentViolation { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
