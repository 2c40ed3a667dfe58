use thiserror::Error;

/// Errors raised across problem construction, LP assembly, solving and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("cannot widen memory from depth {from} to depth {to}")]
    InvalidWidening { from: usize, to: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("worst-case objective must be assembled through add_worstcase")]
    WorstCaseNotAugmented,

    #[error("worst-case functionals were already added to this LP")]
    WorstCaseAlreadyAdded,

    #[error("objective kind `{0}` is not supported here")]
    UnsupportedObjective(&'static str),

    #[error("vertices of stage {stage} do not affinely span R^{dim}")]
    RankDeficient { stage: usize, dim: usize },

    #[error("size guard exceeded: {what} = {size} > {limit}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),

    /// Stage and row are 1-based, as in problem files.
    #[error("LP is infeasible (first violated stage {stage}, row {row})")]
    Infeasible { stage: usize, row: usize },

    #[error("LP is unbounded")]
    Unbounded,

    #[error("MPS error at line {line}: {msg}")]
    Mps { line: usize, msg: String },

    #[error("name collision: `{0}`")]
    NameCollision(String),

    #[error("plugin `{name}` failed: {msg}")]
    Plugin { name: String, msg: String },

    #[error("insufficient inflow history: need {needed} values, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidProblem(_) => "invalid_problem",
            Error::IndexOutOfRange(_) => "index_out_of_range",
            Error::InvalidWidening { .. } => "invalid_widening",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Assembly(_) => "assembly",
            Error::WorstCaseNotAugmented => "worst_case_not_augmented",
            Error::WorstCaseAlreadyAdded => "worst_case_already_added",
            Error::UnsupportedObjective(_) => "unsupported_objective",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::SizeGuard { .. } => "size_guard",
            Error::NumericalBreakdown(_) => "numerical_breakdown",
            Error::IterationLimit(_) => "iteration_limit",
            Error::Infeasible { .. } => "infeasible",
            Error::Unbounded => "unbounded",
            Error::Mps { .. } => "mps",
            Error::NameCollision(_) => "name_collision",
            Error::Plugin { .. } => "plugin",
            Error::InsufficientHistory { .. } => "insufficient_history",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
