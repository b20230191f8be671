use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A Hamiltonian or circuit does not have the structure an operation relies on.
    #[error("structural error: {0}")]
    Structure(String),
    /// The request is valid but not implemented for these sizes.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A least-squares fit could not be carried out.
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
pub(crate) use domain;
