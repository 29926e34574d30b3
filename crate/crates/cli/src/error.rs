use std::path::{Path, PathBuf};

use pinfluence::Error;

/// Exit codes, also listed in `--help`.
pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (unknown subcommand or flag)
  3  I/O error (missing input, unwritable output)
  4  malformed input (parse or JSON error, empty network)
  5  snapshot count exceeds the number of edges
  6  invalid argument or configuration
  7  degenerate input or factor (zero matrix, zero H row)
  8  unsupported option";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Core(Error::InvalidArgument(msg.into()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                Error::Io(_) => 3,
                Error::Format { .. } | Error::Json(_) | Error::EmptyNetwork => 4,
                Error::SnapshotCount { .. } => 5,
                Error::InvalidArgument(_) => 6,
                Error::DegenerateInput(_) | Error::DegenerateFactor { .. } => 7,
                Error::Unsupported(_) => 8,
            },
        }
    }
}
