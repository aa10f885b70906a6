use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Byte range into an expression source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("function `{name}` takes {expected} argument(s) but {found} were given (position {pos})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        pos: usize,
    },

    #[error("domain error in `{snippet}` at {span}: {msg}")]
    Domain {
        msg: String,
        span: Span,
        snippet: String,
    },

    #[error("field `{0}` contains frac() and is only piecewise smooth; this analysis needs smooth fields")]
    NotSmooth(String),

    #[error("polar field not differentiable at origin in this form; supply a Cartesian equivalent")]
    PolarOrigin,

    #[error("non-degenerate linearization required (trace {trace:.3e}, det {det:.3e})")]
    MarginalSpectrum { trace: f64, det: f64 },

    #[error("matrix is not Hurwitz (trace {trace:.3e}, det {det:.3e})")]
    NotHurwitz { trace: f64, det: f64 },

    #[error("component classification inconsistent (component {component})")]
    InconsistentClassification { component: usize },

    #[error("field vanishes on component {component} near ({x:.6}, {y:.6})")]
    FieldZeroOnComponent { component: usize, x: f64, y: f64 },

    #[error("tangency search undefined (G1 fails) on component {component}")]
    TangencyUndefined { component: usize },

    #[error("ambiguous saddle cell at ({i}, {j}) after subdivision")]
    AmbiguousSaddle { i: usize, j: usize },

    #[error("boundary construction inconclusive: {0}")]
    BoundaryInconclusive(String),

    #[error("no sign change across component: tracking undefined (G1 fails)")]
    NoSignChange,

    #[error("tracking lost at t = {t:.4}: distance {distance:.3e} exceeds tube {tube:.3e}")]
    TrackingLost { t: f64, distance: f64, tube: f64 },

    #[error("integration budget exhausted: {0}")]
    Budget(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    #[error("unknown builtin `{name}`; available: {available}")]
    UnknownBuiltin { name: String, available: String },

    #[error("task `{task}` failed: {source}")]
    Task {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad user input (config, syntax, names).
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Arity { .. }
            | Error::Config { .. }
            | Error::UnknownBuiltin { .. }
            | Error::Invalid(_) => true,
            Error::Task { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
