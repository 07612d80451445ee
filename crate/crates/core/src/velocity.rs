//! Inter-frame speed of a single joint.

use serde::Serialize;
use thiserror::Error;

use crate::keypoints::KeypointSequence;

/// Joint tracked by default (COCO-17 nose).
pub const DEFAULT_JOINT_INDEX: usize = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VelocityError {
    #[error("velocity needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("joint index {index} out of range for {count} joints")]
    JointOutOfRange { index: usize, count: usize },
}

/// Speed in pixels per second on each frame interval `[t, t+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocitySeries {
    pub values: Vec<f64>,
    pub fps: f64,
    pub joint_index: usize,
}

impl VelocitySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with header `frame_index,velocity`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,velocity\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

pub fn compute_velocity(
    seq: &KeypointSequence,
    joint_index: usize,
) -> Result<VelocitySeries, VelocityError> {
    if seq.frame_count() < 2 {
        return Err(VelocityError::TooFewFrames(seq.frame_count()));
    }
    if joint_index >= seq.joint_count() {
        return Err(VelocityError::JointOutOfRange {
            index: joint_index,
            count: seq.joint_count(),
        });
    }
    let fps = seq.fps();
    let track: Vec<_> = seq.track(joint_index).collect();
    let values = track
        .windows(2)
        .map(|w| {
            let dx = w[1].x - w[0].x;
            let dy = w[1].y - w[0].y;
            (dx * dx + dy * dy).sqrt() * fps
        })
        .collect();
    Ok(VelocitySeries {
        values,
        fps,
        joint_index,
    })
}
