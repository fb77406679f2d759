use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("pole: {what} at {at}")]
    Pole { what: String, at: Complex64 },

    /// Integration stopped near a movable singularity; carries the last accepted state.
    #[error("blow-up at t={t}: {reason} (u={u}, du={du})")]
    BlowUp {
        t: f64,
        u: Complex64,
        du: Complex64,
        reason: String,
    },

    #[error("degenerate auxiliary data: {0}")]
    Degeneracy(String),

    #[error("branch point: {0}")]
    Branch(String),

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("ambiguous zero count: expected 1, found {0}")]
    Ambiguity(i64),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("transport path error: {0}")]
    Path(String),

    #[error("bad config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_finite(what: &str, z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} is not finite: {z}")))
    }
}
