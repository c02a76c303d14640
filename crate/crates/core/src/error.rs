use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("configuration error: {0}")]
    Config(String),
    /// Parameters are individually valid but no object satisfying all invariants exists.
    #[error("construction error: invariant `{invariant}` violated: {detail}")]
    Construction { invariant: String, detail: String },
    /// Time step exceeds the stability bound.
    #[error("time step {dt} exceeds stability bound {limit}")]
    Cfl { dt: f64, limit: f64 },
    /// A non-finite value appeared during integration.
    #[error("non-finite value at grid index {index} (t = {t})")]
    NonFinite { index: usize, t: f64 },
    /// An iterative procedure failed to converge or bracket.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Probes were not reached before the end of the run.
    #[error("probes unreached for seeds {seeds:?}")]
    Unreached { seeds: Vec<u64> },
    /// Snapshot times requested by a consumer are missing from a trajectory.
    #[error("missing snapshot times {0:?}")]
    MissingSnapshots(Vec<f64>),
    /// A reached set came too close to the computational boundary.
    #[error("domain too small: {0}")]
    Domain(String),
    /// Failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
