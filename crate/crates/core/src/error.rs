use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge (matrix {fingerprint}, n = {dim})")]
    NonConvergence { fingerprint: String, dim: usize },

    #[error("gap violated: eigenvalue {energy} lies in [{lower}, {upper}]")]
    GapViolated { energy: f64, lower: f64, upper: f64 },

    #[error("gap closes at b = {b}: eigenvalue {energy} lies in [{lower}, {upper}]")]
    GapClosed {
        b: f64,
        energy: f64,
        lower: f64,
        upper: f64,
    },

    #[error("branch matching failed at k = {k}: {reason}")]
    BranchMatching { k: f64, reason: String },

    #[error("spectral-flow sum {value} is {distance} from the nearest integer")]
    FlowNotInteger { value: f64, distance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("empty group `{0}`")]
    EmptyGroup(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
