use mce_core::profile::ProfileError;
use mce_core::quad::QuadError;
use mce_core::verify::VerifyError;
use mce_core::zoo::ZooError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Surface(ZooError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("cannot write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNCONVERGED: u8 = 3;

fn quad_code(e: &QuadError) -> u8 {
    match e {
        QuadError::Geom(_) | QuadError::InvalidSpec(_) | QuadError::NonPositiveTau(_) | QuadError::NonPositiveRadius(_) => {
            EXIT_USAGE
        }
        QuadError::NotProper { .. } | QuadError::Unbounded(_) => EXIT_UNCONVERGED,
    }
}

fn profile_code(e: &ProfileError) -> u8 {
    match e {
        ProfileError::Quad(q) => quad_code(q),
        ProfileError::Grid(_) | ProfileError::NonPositiveTau(_) | ProfileError::OutOfRange { .. } => EXIT_USAGE,
        _ => EXIT_UNCONVERGED,
    }
}

impl CliError {
    /// Bad input exits 2, numerical trouble 3.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Surface(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Quad(q) => quad_code(q),
            CliError::Profile(p) => profile_code(p),
            CliError::Verify(VerifyError::Geom(_)) => EXIT_USAGE,
            CliError::Verify(VerifyError::Profile(p)) => profile_code(p),
            CliError::Verify(VerifyError::Unconverged) => EXIT_UNCONVERGED,
        }
    }
}
