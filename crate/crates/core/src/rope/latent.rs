//! Channel-wise composition of the conditioning latents.
//!
//! Blocks are stored per batch element as contiguous `[C][T][H][W]` arrays.
//! The composed block concatenates, along channels and in this order, the
//! noisy latent, the pose latent, the reference latent placed at frame 0 of
//! an otherwise zero block, and a 4-channel mask that is one on frame 0 only.

use serde::{Deserialize, Serialize};

use super::RopeError;

pub const LATENT_CHANNELS: usize = 16;
pub const MASK_CHANNELS: usize = 4;
pub const COMPOSED_CHANNELS: usize = 3 * LATENT_CHANNELS + MASK_CHANNELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentRole {
    Noisy,
    Pose,
    Reference,
    Mask,
    Composed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentShape {
    pub batch: Option<usize>,
    pub channels: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl LatentShape {
    pub fn new(channels: usize, frames: usize, height: usize, width: usize) -> Self {
        Self {
            batch: None,
            channels,
            frames,
            height,
            width,
        }
    }

    pub fn batched(self, batch: usize) -> Self {
        Self {
            batch: Some(batch),
            ..self
        }
    }

    pub fn batch_len(&self) -> usize {
        self.batch.unwrap_or(1)
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    pub fn channel_len(&self) -> usize {
        self.frames * self.frame_len()
    }

    pub fn element_len(&self) -> usize {
        self.channels * self.channel_len()
    }

    pub fn len(&self) -> usize {
        self.batch_len() * self.element_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn with_channels(self, channels: usize) -> Self {
        Self { channels, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentBlock {
    role: LatentRole,
    shape: LatentShape,
    values: Vec<f64>,
}

impl LatentBlock {
    /// Validates the role's channel and frame constraints.
    pub fn new(role: LatentRole, shape: LatentShape, values: Vec<f64>) -> Result<Self, RopeError> {
        if values.len() != shape.len() {
            return Err(RopeError::InvalidLatent(format!(
                "{} values for shape {shape:?}",
                values.len()
            )));
        }
        if shape.frames == 0 || shape.height == 0 || shape.width == 0 || shape.batch == Some(0) {
            return Err(RopeError::InvalidLatent("empty dimension".into()));
        }
        let expect_channels = match role {
            LatentRole::Noisy | LatentRole::Pose | LatentRole::Reference => LATENT_CHANNELS,
            LatentRole::Mask => MASK_CHANNELS,
            LatentRole::Composed => COMPOSED_CHANNELS,
        };
        if shape.channels != expect_channels {
            return Err(RopeError::InvalidLatent(format!(
                "{role:?} block needs {expect_channels} channels, got {}",
                shape.channels
            )));
        }
        if role == LatentRole::Reference && shape.frames != 1 {
            return Err(RopeError::InvalidLatent(format!(
                "reference block must have 1 frame, got {}",
                shape.frames
            )));
        }
        if role == LatentRole::Mask && values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(RopeError::InvalidLatent(
                "mask values must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            role,
            shape,
            values,
        })
    }

    pub fn zeros(role: LatentRole, shape: LatentShape) -> Result<Self, RopeError> {
        Self::new(role, shape, vec![0.0; shape.len()])
    }

    pub fn role(&self) -> LatentRole {
        self.role
    }

    pub fn shape(&self) -> LatentShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, batch: usize, channel: usize, frame: usize, h: usize, w: usize) -> f64 {
        let s = &self.shape;
        let idx = batch * s.element_len()
            + channel * s.channel_len()
            + frame * s.frame_len()
            + h * s.width
            + w;
        self.values[idx]
    }

    /// Copies channels `start..end` of every batch element.
    pub fn channel_slice(&self, start: usize, end: usize) -> Vec<f64> {
        let s = &self.shape;
        let cl = s.channel_len();
        (0..s.batch_len())
            .flat_map(|b| {
                let base = b * s.element_len();
                self.values[base + start * cl..base + end * cl]
                    .iter()
                    .copied()
            })
            .collect()
    }
}

/// Mask of `MASK_CHANNELS` channels, one on frame 0 and zero elsewhere.
pub fn reference_mask(like: LatentShape) -> Result<LatentBlock, RopeError> {
    let shape = like.with_channels(MASK_CHANNELS);
    let frame_len = shape.frame_len();
    let mut values = vec![0.0; shape.len()];
    for chunk in values.chunks_mut(shape.channel_len()) {
        chunk[..frame_len].fill(1.0);
    }
    LatentBlock::new(LatentRole::Mask, shape, values)
}

pub fn compose_latents(
    noisy: &LatentBlock,
    pose: &LatentBlock,
    reference: &LatentBlock,
) -> Result<LatentBlock, RopeError> {
    let expect_role = |b: &LatentBlock, role: LatentRole| {
        if b.role == role {
            Ok(())
        } else {
            Err(RopeError::ShapeMismatch(format!(
                "expected a {role:?} block, got {:?}",
                b.role
            )))
        }
    };
    expect_role(noisy, LatentRole::Noisy)?;
    expect_role(pose, LatentRole::Pose)?;
    expect_role(reference, LatentRole::Reference)?;

    let shape = noisy.shape;
    if pose.shape != shape {
        return Err(RopeError::ShapeMismatch(format!(
            "pose {:?} differs from noisy {:?}",
            pose.shape, shape
        )));
    }
    let r = reference.shape;
    if r.batch != shape.batch || r.height != shape.height || r.width != shape.width {
        return Err(RopeError::ShapeMismatch(format!(
            "reference {r:?} incompatible with noisy {shape:?}"
        )));
    }

    let mask = reference_mask(shape)?;
    let out_shape = shape.with_channels(COMPOSED_CHANNELS);
    let cl = shape.channel_len();
    let frame_len = shape.frame_len();
    let mut values = Vec::with_capacity(out_shape.len());
    for b in 0..shape.batch_len() {
        fn element(block: &LatentBlock, b: usize) -> &[f64] {
            let n = block.shape.element_len();
            &block.values[b * n..(b + 1) * n]
        }
        values.extend_from_slice(element(noisy, b));
        values.extend_from_slice(element(pose, b));
        for ref_channel in element(reference, b).chunks(frame_len) {
            values.extend_from_slice(ref_channel);
            values.extend(std::iter::repeat_n(0.0, cl - frame_len));
        }
        values.extend_from_slice(element(&mask, b));
    }
    LatentBlock::new(LatentRole::Composed, out_shape, values)
}

/// The four channel groups of a composed block.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedParts {
    pub noisy: LatentBlock,
    pub pose: LatentBlock,
    /// Reference placed at frame 0 of a zero block (full temporal extent).
    pub placed_reference: Vec<f64>,
    /// Frame 0 of the placed reference, i.e. the original reference block.
    pub reference: LatentBlock,
    pub mask: LatentBlock,
}

pub fn split_composed(block: &LatentBlock) -> Result<ComposedParts, RopeError> {
    if block.role != LatentRole::Composed {
        return Err(RopeError::ShapeMismatch("not a composed block".into()));
    }
    let shape = block.shape;
    let latent = shape.with_channels(LATENT_CHANNELS);
    let c = LATENT_CHANNELS;
    let noisy = LatentBlock::new(LatentRole::Noisy, latent, block.channel_slice(0, c))?;
    let pose = LatentBlock::new(LatentRole::Pose, latent, block.channel_slice(c, 2 * c))?;
    let placed_reference = block.channel_slice(2 * c, 3 * c);
    let frame0: Vec<f64> = placed_reference
        .chunks(shape.channel_len())
        .flat_map(|ch| ch[..shape.frame_len()].iter().copied())
        .collect();
    let ref_shape = LatentShape {
        frames: 1,
        ..latent
    };
    let reference = LatentBlock::new(LatentRole::Reference, ref_shape, frame0)?;
    let mask = LatentBlock::new(
        LatentRole::Mask,
        shape.with_channels(MASK_CHANNELS),
        block.channel_slice(3 * c, COMPOSED_CHANNELS),
    )?;
    Ok(ComposedParts {
        noisy,
        pose,
        placed_reference,
        reference,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(role: LatentRole, shape: LatentShape, seed: f64) -> LatentBlock {
        let values = (0..shape.len())
            .map(|i| (i as f64 * 0.37 + seed).sin())
            .collect();
        LatentBlock::new(role, shape, values).unwrap()
    }

    fn inputs(
        t: usize,
        h: usize,
        w: usize,
        batch: Option<usize>,
    ) -> (LatentBlock, LatentBlock, LatentBlock) {
        let mut full = LatentShape::new(16, t, h, w);
        full.batch = batch;
        let reference = LatentShape { frames: 1, ..full };
        (
            filled(LatentRole::Noisy, full, 0.1),
            filled(LatentRole::Pose, full, 0.2),
            filled(LatentRole::Reference, reference, 0.3),
        )
    }

    #[test]
    fn single_frame_reference_is_itself_and_mask_is_ones() {
        let (n, p, r) = inputs(1, 3, 2, None);
        let out = compose_latents(&n, &p, &r).unwrap();
        let parts = split_composed(&out).unwrap();
        assert_eq!(parts.placed_reference, r.values());
        assert!(parts.mask.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn five_frames_two_by_two() {
        let (n, p, r) = inputs(5, 2, 2, None);
        let out = compose_latents(&n, &p, &r).unwrap();
        assert_eq!(out.shape(), LatentShape::new(52, 5, 2, 2));
        let parts = split_composed(&out).unwrap();
        assert_eq!(parts.mask.values().iter().sum::<f64>(), 16.0);
        for c in 0..4 {
            for t in 0..5 {
                let expect = if t == 0 { 1.0 } else { 0.0 };
                assert_eq!(out.get(0, 48 + c, t, 1, 1), expect);
            }
        }
    }

    #[test]
    fn slicing_recovers_inputs_and_later_reference_frames_are_zero() {
        let (n, p, r) = inputs(4, 3, 5, Some(2));
        let out = compose_latents(&n, &p, &r).unwrap();
        let parts = split_composed(&out).unwrap();
        assert_eq!(parts.noisy, n);
        assert_eq!(parts.pose, p);
        assert_eq!(parts.reference, r);
        let frame_len = 15;
        for ch in parts.placed_reference.chunks(4 * frame_len) {
            assert!(ch[frame_len..].iter().all(|&v| v == 0.0));
        }
        assert_eq!(out.get(1, 32, 0, 2, 4), r.get(1, 0, 0, 2, 4));
    }

    #[test]
    fn shape_errors() {
        let (n, p, r) = inputs(3, 2, 2, None);
        let (_, p_bad, r_bad) = inputs(4, 2, 2, None);
        assert!(matches!(
            compose_latents(&n, &p_bad, &r),
            Err(RopeError::ShapeMismatch(_))
        ));
        let (_, _, r_wide) = inputs(3, 2, 3, None);
        assert!(compose_latents(&n, &p, &r_wide).is_err());
        assert!(compose_latents(&n, &p, &r_bad).is_ok());
        assert!(compose_latents(&p, &n, &r).is_err());
        assert!(LatentBlock::zeros(LatentRole::Noisy, LatentShape::new(8, 2, 2, 2)).is_err());
        assert!(LatentBlock::zeros(LatentRole::Reference, LatentShape::new(16, 2, 2, 2)).is_err());
        assert!(
            LatentBlock::new(LatentRole::Mask, LatentShape::new(4, 1, 1, 1), vec![0.5; 4]).is_err()
        );
    }
}
