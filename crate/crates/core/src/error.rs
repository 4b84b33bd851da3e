use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-range configuration.
    #[error("config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The evolution left the small-data regime (or went unstable).
    #[error("blowup at step {step} (t = {t}): |u| = {value:e} exceeds {threshold:e}")]
    Blowup {
        step: usize,
        t: f64,
        value: f64,
        threshold: f64,
    },

    #[error("outside domain: {0}")]
    OutsideDomain(String),

    /// Quantities that are identically zero (or at the noise floor) where a
    /// nonzero value is required.
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit status: 2 config, 3 numerical, 4 analysis.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::GridMismatch(_) => 2,
            Error::Blowup { .. } => 3,
            Error::OutsideDomain(_)
            | Error::Degenerate(_)
            | Error::Fit(_)
            | Error::EmptyRegion(_) => 4,
            Error::Io(_) => 1,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Blowup { .. } => "blowup",
            Error::OutsideDomain(_) => "outside_domain",
            Error::Degenerate(_) => "degenerate",
            Error::Fit(_) => "fit",
            Error::EmptyRegion(_) => "empty_region",
            Error::Io(_) => "io",
        }
    }
}
