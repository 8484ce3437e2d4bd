use alloc::string::String;

/// Errors surfaced by the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1} qubits")]
    Dimension(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),
    #[error("coverage error: {0} group elements unreached")]
    Coverage(usize),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Dimension(a, b))
    }
}
