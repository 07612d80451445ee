use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_TRANSCODER: u8 = 2;
pub const EXIT_PARTIAL_BATCH: u8 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("transcoder `{0}` not found")]
    TranscoderMissing(String),
    #[error("transcoder exited with {status}: {stderr}")]
    TranscoderFailed { status: String, stderr: String },
    #[error("{failed} of {total} batch entries failed")]
    PartialBatch { failed: usize, total: usize },
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Io { .. } | PipelineError::Input { .. } | PipelineError::Config(_) => {
                EXIT_INPUT
            }
            PipelineError::TranscoderMissing(_) | PipelineError::TranscoderFailed { .. } => {
                EXIT_TRANSCODER
            }
            PipelineError::PartialBatch { .. } => EXIT_PARTIAL_BATCH,
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        PipelineError::Input {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn read(path: &std::path::Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn write(
    path: &std::path::Path,
    contents: impl AsRef<[u8]>,
) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(|e| PipelineError::io(path, e))
}
