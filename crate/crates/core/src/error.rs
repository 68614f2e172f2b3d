use thiserror::Error;

/// Errors surfaced by the design and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical integration did not converge: {0}")]
    Quadrature(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("pulse resolution error: {0}")]
    Resolution(String),
    #[error("pulse truncation error: {0}")]
    Truncation(String),
    #[error("integration diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    #[error("simulation window too short: residual cavity norm {residual:.3e}")]
    WindowTooShort { residual: f64 },
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit code used by the CLI: 1 usage, 2 validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io { .. } => 1,
            Error::Config(_) | Error::Range(_) | Error::Domain(_) | Error::Data(_) | Error::Grid(_) => 2,
            Error::Resolution(_) | Error::Truncation(_) => 2,
            Error::Quadrature(_)
            | Error::Diverged { .. }
            | Error::WindowTooShort { .. }
            | Error::NotConverged(_) => 3,
        }
    }
}
