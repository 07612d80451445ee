use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::keypoints::{KeypointSequence, DEFAULT_CONF_MIN};

pub const DEFAULT_PCK_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PckParams {
    pub alpha: f64,
    /// Ground-truth joints below this confidence are not scored and do not
    /// contribute to the bounding box.
    pub min_confidence: f64,
}

impl Default for PckParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_PCK_ALPHA,
            min_confidence: DEFAULT_CONF_MIN,
        }
    }
}

/// Percentage of predicted joints within `alpha` times the diagonal of the
/// frame's ground-truth bounding box.
pub fn pck(pred: &KeypointSequence, gt: &KeypointSequence, alpha: f64) -> Result<f64, MetricError> {
    pck_with(
        pred,
        gt,
        PckParams {
            alpha,
            ..PckParams::default()
        },
    )
}

pub fn pck_with(
    pred: &KeypointSequence,
    gt: &KeypointSequence,
    params: PckParams,
) -> Result<f64, MetricError> {
    if !(params.alpha.is_finite() && params.alpha > 0.0) {
        return Err(MetricError::InvalidAlpha(params.alpha));
    }
    if pred.frame_count() != gt.frame_count() || pred.joint_count() != gt.joint_count() {
        return Err(MetricError::KeypointMismatch(format!(
            "{} frames x {} joints vs {} frames x {} joints",
            pred.frame_count(),
            pred.joint_count(),
            gt.frame_count(),
            gt.joint_count()
        )));
    }

    let mut correct = 0usize;
    let mut total = 0usize;
    for (p_frame, g_frame) in pred.frames().iter().zip(gt.frames()) {
        let valid: Vec<usize> = (0..g_frame.len())
            .filter(|&j| g_frame[j].confidence >= params.min_confidence)
            .collect();
        if valid.is_empty() {
            continue;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for &j in &valid {
            x0 = x0.min(g_frame[j].x);
            x1 = x1.max(g_frame[j].x);
            y0 = y0.min(g_frame[j].y);
            y1 = y1.max(g_frame[j].y);
        }
        let threshold = params.alpha * (x1 - x0).hypot(y1 - y0);
        for &j in &valid {
            total += 1;
            if p_frame[j].distance(&g_frame[j]) <= threshold {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(MetricError::NoValidJoints);
    }
    Ok(100.0 * correct as f64 / total as f64)
}
