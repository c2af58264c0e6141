use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("denominator vanishes identically after substitution")]
    ZeroDenominator,

    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),

    #[error("logarithm of non-positive value {0}")]
    LogOfNonPositive(f64),

    #[error("log(-1) has no real value; compare differences or use split evaluation")]
    BranchConstant,

    #[error("expression still contains a logarithm")]
    NotRational,

    #[error("parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("invalid dimension n = {0}")]
    InvalidDimension(usize),

    #[error("no consistent degree assignment: {0}")]
    Inhomogeneous(String),

    #[error("metric is degenerate")]
    DegenerateMetric,

    #[error("determinant vanishes identically")]
    DegenerateDeterminant,

    #[error("Hessian is not integrable for theta[{alpha}][{level}]")]
    NonIntegrableHessian { alpha: usize, level: usize },

    #[error("conformal/resonance system is inconsistent at level {level}: {detail}")]
    InconsistentResonance { level: usize, detail: String },

    #[error("level {have} is too small, {need} is required")]
    LevelUnderflow { have: usize, need: usize },

    #[error("Newton iteration failed to converge after {iterations} steps (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (genericity condition fails)")]
    SingularJacobian,

    #[error("missing Omega entry ({0})")]
    MissingOmega(String),

    #[error("point too close to the singular locus: |v^n| = {0:e}")]
    SingularLocus(f64),

    #[error("Virasoro operator L_{0} is not available (only m = -1 and m = 0)")]
    UnsupportedVirasoro(i32),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("truncation mismatch: {0}")]
    Truncation(String),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse {
            line: 0,
            msg: msg.into(),
        }
    }

    /// Attach a line number to a parse error; other errors pass through.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { msg, .. } => Error::Parse { line, msg },
            other => other,
        }
    }
}
