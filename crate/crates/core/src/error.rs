use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across curve handling, fitting, metrics, emulation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("performance {value} at x={x} (seed {seed}) is outside [0, 1]")]
    OutOfRangePerformance { value: f64, x: f64, seed: u64 },

    #[error("invalid sample count {x} for seed {seed}")]
    InvalidSampleCount { x: f64, seed: u64 },

    #[error("duplicate point at x={x} for seed {seed}")]
    DuplicatePoint { x: f64, seed: u64 },

    #[error("ragged design in '{qm}': seed {seed} does not share the x grid of the other seeds")]
    RaggedDesign { qm: String, seed: u64 },

    #[error("x={x} lies outside the curve domain [{min}, {max}]")]
    OutOfDomain { x: f64, min: f64, max: f64 },

    #[error("performance {p} is not reached by the curve (attained range [{lo}, {hi}])")]
    Unreachable { p: f64, lo: f64, hi: f64 },

    #[error("ceiling {ceiling} must exceed the initial performance {initial}")]
    DegenerateCeiling { ceiling: f64, initial: f64 },

    #[error("ceiling performance {0} must lie in (0, 1]")]
    InvalidCeiling(f64),

    #[error("intercept infeasible: p0={p0} with a_inf={a_inf}")]
    InterceptInfeasible { p0: f64, a_inf: f64 },

    #[error("least-squares objective is non-finite over the whole search bracket")]
    FitDiverged,

    #[error("curve needs at least two distinct x values with one x > 0 to be fitted")]
    InsufficientData,

    #[error("families differ between query methods; every method needs the same fitted families")]
    InconsistentFamilies,

    #[error("scale parameters must be positive (b_qm={b_qm}, b_rand={b_rand})")]
    NonPositiveScale { b_qm: f64, b_rand: f64 },

    #[error("sensitivity inputs must be positive (s1={s1}, s2={s2})")]
    NonPositiveInput { s1: f64, s2: f64 },

    #[error("performance bands of the two curves do not overlap after trimming")]
    NoOverlap,

    #[error("baseline area under the learning curve is zero")]
    ZeroBaselineArea,

    #[error("cut-point test needs at least 4 common iterations, found {0}")]
    TooFewIterations(usize),

    #[error("invalid fraction {0}; expected a value strictly between 0 and 1")]
    BadFraction(f64),

    #[error("class {class} has {count} samples, too few for a stratified split")]
    TooSmallClass { class: usize, count: usize },

    #[error("query of {requested} samples exceeds the {available} unlabelled samples")]
    QueryTooLarge { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("query method '{0}' not found in the curve log")]
    MissingQueryMethod(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("missing initial point x=0 for query method '{qm}' seed {seed}")]
    MissingInitialPoint { qm: String, seed: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the file system rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
