//! Reference-computable quality metrics: PSNR, SSIM, L1 and PCK.

mod image;
mod pck;
mod pixel;
mod report;
mod ssim;

use thiserror::Error;

pub use self::image::FrameImage;
pub use pck::{pck, pck_with, PckParams, DEFAULT_PCK_ALPHA};
pub use pixel::{l1, mse, psnr};
pub use report::{evaluate_frames, FrameMetrics, MetricReport};
pub use ssim::{ssim, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("image shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("image {width}x{height} is smaller than the {window}x{window} SSIM window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("keypoint sequences differ: {0}")]
    KeypointMismatch(String),
    #[error("no valid ground-truth joints in any frame")]
    NoValidJoints,
    #[error("PCK alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("no frame pairs to evaluate")]
    NoFrames,
}
