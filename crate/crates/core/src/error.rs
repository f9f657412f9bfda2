use thiserror::Error;

/// Errors raised by the solver, diagnostics and configuration layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite{} (min eigenvalue {min_eig:e})", at_cell(cell))]
    NotSpd {
        cell: Option<(usize, usize)>,
        min_eig: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary tag mismatch: {0}")]
    TagMismatch(String),

    #[error("blow-up at t = {t}: {what}")]
    Blowup { t: f64, what: String },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kinetic truncation breached: boundary mass fraction {fraction:e} exceeds {limit:e}")]
    TruncationBreach { fraction: f64, limit: f64 },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("run failed at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },

    #[error("sweep entry {knob} = {value} failed: {source}")]
    SweepEntry {
        knob: String,
        value: f64,
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

fn at_cell(cell: &Option<(usize, usize)>) -> String {
    match cell {
        Some((i, j)) => format!(" at cell ({i}, {j})"),
        None => String::new(),
    }
}

impl Error {
    /// Strips `AtTime`/`SweepEntry` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } | Error::SweepEntry { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn at_time(self, t: f64) -> Error {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
