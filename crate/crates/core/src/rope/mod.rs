//! Rotary position embeddings over a (t, h, w) token grid, spatial
//! low-frequency scaling, and the conditioning-latent composition contract.

mod attention;
mod frequencies;
mod latent;
pub mod selfcheck;

use thiserror::Error;

pub use attention::{apply_rope, attention_scores, GridPosition, Token};
pub use frequencies::{
    base_frequencies, effective_frequencies, frequency_table_csv, slf_scale, Axis, AxisFrequencies,
    AxisPairs, FrequencyLayout, ScaledFrequencies, DEFAULT_BASE, DEFAULT_LOW_FREQ_RATIO,
    DEFAULT_MOTION_SCALE, DEFAULT_SPACE_SCALE_FACTOR,
};
pub use latent::{
    compose_latents, reference_mask, split_composed, ComposedParts, LatentBlock, LatentRole,
    LatentShape, COMPOSED_CHANNELS, LATENT_CHANNELS, MASK_CHANNELS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RopeError {
    #[error("invalid frequency layout: {0}")]
    InvalidLayout(&'static str),
    #[error("frequency lists do not match the layout's axis pair counts")]
    FrequencyMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("latent shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid latent block: {0}")]
    InvalidLatent(String),
}
