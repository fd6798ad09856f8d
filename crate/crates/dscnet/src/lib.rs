//! File formats, verification and the `dscnet` command line around
//! [`dscnet_core`].

pub mod app;
pub mod format;
pub mod verify;

/// Failures of the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Input(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Core(#[from] dscnet_core::Error),
    /// The instance cannot be served; the message names the violated cut.
    #[error("infeasible instance: {0}")]
    Infeasible(String),
}

impl Error {
    /// Process exit code: 1 for infeasible instances, 2 for bad input, 4
    /// for numerical failures inside the solvers.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) | Error::Core(dscnet_core::Error::Infeasible) => 1,
            Error::Core(dscnet_core::Error::Numerical(_) | dscnet_core::Error::Unbounded) => 4,
            _ => 2,
        }
    }
}
