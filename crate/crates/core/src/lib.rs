//! Motion-window extraction from keypoint tracks, 3D rotary position
//! embeddings with spatial low-frequency scaling, and reference-computable
//! video quality metrics.

pub mod keypoints;
pub mod metrics;
pub mod peaks;
pub mod pipeline;
pub mod rope;
pub mod velocity;
pub mod wavelet;
pub mod window;
