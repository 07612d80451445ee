//! Per-frame 2D keypoint annotations: parsing, validation and cleaning.
//!
//! The on-disk document is a single JSON object:
//!
//! ```json
//! {"fps": 30.0, "width": 1920, "height": 1080, "joints_per_frame": 17,
//!  "frames": [[[x, y, conf], ...], ...]}
//! ```
//!
//! Joint ordering follows COCO-17, so index 0 is the nose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Confidence below which an observation is treated as missing.
pub const DEFAULT_CONF_MIN: f64 = 0.3;
/// Per-frame displacement above this multiple of the joint's median
/// displacement marks an outlier.
pub const DEFAULT_OUTLIER_FACTOR: f64 = 5.0;
/// Lower bound (pixels per frame) on the median displacement used by the
/// outlier rule, so a mostly static joint does not turn all motion into outliers.
pub const DEFAULT_MIN_DISPLACEMENT: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeypointError {
    #[error("malformed keypoint document: {0}")]
    Malformed(String),
    #[error("no frames")]
    NoFrames,
    #[error("joints_per_frame must be at least 1")]
    NoJoints,
    #[error("inconsistent joint count at frame {frame}: expected {expected}, found {found}")]
    InconsistentJointCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("fps must be positive and finite, got {0}")]
    InvalidFps(f64),
    #[error("frame dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: u64, height: u64 },
    #[error("invalid value at frame {frame}, joint {joint}: {reason}")]
    InvalidJoint {
        frame: usize,
        joint: usize,
        reason: &'static str,
    },
    #[error("joint {joint} has no valid observations in the whole sequence")]
    DeadJoint { joint: usize },
    #[error("invalid cleaning parameter: {0}")]
    InvalidParameter(&'static str),
}

/// One joint observation in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Joint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }

    pub fn distance(&self, other: &Joint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 3]> for Joint {
    fn from(v: [f64; 3]) -> Self {
        Joint::new(v[0], v[1], v[2])
    }
}

impl From<Joint> for [f64; 3] {
    fn from(j: Joint) -> Self {
        [j.x, j.y, j.confidence]
    }
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    fps: f64,
    width: u64,
    height: u64,
    joints_per_frame: usize,
    frames: Vec<Vec<Joint>>,
}

/// A validated keypoint track for one person in one video.
///
/// Invariants: at least one frame, every frame has the same joint count
/// (at least one), positive fps and frame dimensions, finite coordinates and
/// confidences in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSequence {
    fps: f64,
    frame_width: u32,
    frame_height: u32,
    frames: Vec<Vec<Joint>>,
}

impl KeypointSequence {
    pub fn new(
        fps: f64,
        frame_width: u32,
        frame_height: u32,
        frames: Vec<Vec<Joint>>,
    ) -> Result<Self, KeypointError> {
        let expected = frames
            .first()
            .map(Vec::len)
            .ok_or(KeypointError::NoFrames)?;
        validate_header(fps, frame_width as u64, frame_height as u64, expected)?;
        validate_frames(&frames, expected)?;
        Ok(Self {
            fps,
            frame_width,
            frame_height,
            frames,
        })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frame_width(&self) -> u32 {
        self.frame_width
    }

    pub fn frame_height(&self) -> u32 {
        self.frame_height
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn joint_count(&self) -> usize {
        self.frames[0].len()
    }

    pub fn frames(&self) -> &[Vec<Joint>] {
        &self.frames
    }

    pub fn joint(&self, frame: usize, joint: usize) -> Joint {
        self.frames[frame][joint]
    }

    /// The trajectory of one joint across all frames.
    pub fn track(&self, joint: usize) -> impl Iterator<Item = Joint> + '_ {
        self.frames.iter().map(move |f| f[joint])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("keypoint document serializes")
    }

    fn to_raw(&self) -> RawDocument {
        RawDocument {
            fps: self.fps,
            width: self.frame_width as u64,
            height: self.frame_height as u64,
            joints_per_frame: self.joint_count(),
            frames: self.frames.clone(),
        }
    }

    fn from_raw(raw: RawDocument) -> Result<Self, KeypointError> {
        validate_header(raw.fps, raw.width, raw.height, raw.joints_per_frame)?;
        if raw.frames.is_empty() {
            return Err(KeypointError::NoFrames);
        }
        validate_frames(&raw.frames, raw.joints_per_frame)?;
        let dim = |v: u64| {
            u32::try_from(v).map_err(|_| KeypointError::InvalidDimensions {
                width: raw.width,
                height: raw.height,
            })
        };
        Ok(Self {
            fps: raw.fps,
            frame_width: dim(raw.width)?,
            frame_height: dim(raw.height)?,
            frames: raw.frames,
        })
    }
}

fn validate_header(fps: f64, width: u64, height: u64, joints: usize) -> Result<(), KeypointError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(KeypointError::InvalidFps(fps));
    }
    if width == 0 || height == 0 {
        return Err(KeypointError::InvalidDimensions { width, height });
    }
    if joints == 0 {
        return Err(KeypointError::NoJoints);
    }
    Ok(())
}

fn validate_frames(frames: &[Vec<Joint>], expected: usize) -> Result<(), KeypointError> {
    if expected == 0 {
        return Err(KeypointError::NoJoints);
    }
    for (frame, joints) in frames.iter().enumerate() {
        if joints.len() != expected {
            return Err(KeypointError::InconsistentJointCount {
                frame,
                expected,
                found: joints.len(),
            });
        }
        for (joint, j) in joints.iter().enumerate() {
            if !(j.x.is_finite() && j.y.is_finite()) {
                return Err(KeypointError::InvalidJoint {
                    frame,
                    joint,
                    reason: "non-finite coordinate",
                });
            }
            if !(0.0..=1.0).contains(&j.confidence) {
                return Err(KeypointError::InvalidJoint {
                    frame,
                    joint,
                    reason: "confidence outside [0, 1]",
                });
            }
        }
    }
    Ok(())
}

/// Parses a single keypoint document.
pub fn parse_keypoints(bytes: &[u8]) -> Result<KeypointSequence, KeypointError> {
    let raw: RawDocument =
        serde_json::from_slice(bytes).map_err(|e| KeypointError::Malformed(e.to_string()))?;
    KeypointSequence::from_raw(raw)
}

/// Parses one document or a newline-delimited stream of documents.
pub fn parse_keypoint_documents(bytes: &[u8]) -> Result<Vec<KeypointSequence>, KeypointError> {
    let mut out = Vec::new();
    for (i, raw) in serde_json::Deserializer::from_slice(bytes)
        .into_iter::<RawDocument>()
        .enumerate()
    {
        let raw = raw.map_err(|e| KeypointError::Malformed(format!("document {i}: {e}")))?;
        out.push(KeypointSequence::from_raw(raw)?);
    }
    if out.is_empty() {
        return Err(KeypointError::Malformed("empty input".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleaningParams {
    pub conf_min: f64,
    pub outlier_factor: f64,
    pub min_displacement: f64,
}

impl Default for CleaningParams {
    fn default() -> Self {
        Self {
            conf_min: DEFAULT_CONF_MIN,
            outlier_factor: DEFAULT_OUTLIER_FACTOR,
            min_displacement: DEFAULT_MIN_DISPLACEMENT,
        }
    }
}

impl CleaningParams {
    pub fn new(conf_min: f64, outlier_factor: f64) -> Self {
        Self {
            conf_min,
            outlier_factor,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), KeypointError> {
        if !(0.0..=1.0).contains(&self.conf_min) {
            return Err(KeypointError::InvalidParameter(
                "conf_min must lie in [0, 1]",
            ));
        }
        if !(self.outlier_factor.is_finite() && self.outlier_factor > 0.0) {
            return Err(KeypointError::InvalidParameter(
                "outlier_factor must be positive",
            ));
        }
        if !(self.min_displacement.is_finite() && self.min_displacement >= 0.0) {
            return Err(KeypointError::InvalidParameter(
                "min_displacement must be non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCleaning {
    pub joint: usize,
    pub interpolated: usize,
    pub outliers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub interpolated_count: usize,
    pub outlier_count: usize,
    pub per_joint_counts: Vec<JointCleaning>,
}

impl CleaningReport {
    pub fn is_clean(&self) -> bool {
        self.interpolated_count == 0 && self.outlier_count == 0
    }
}

/// Fills low-confidence observations and removes isolated jumps.
///
/// Observations with confidence below `conf_min` are missing. Among the
/// remaining ones, a frame is an outlier when its displacement rate to both
/// adjacent valid observations exceeds `outlier_factor` times the joint's
/// median displacement rate (floored at `min_displacement`). Detection
/// repeats until no new outlier appears, so a second pass is a no-op.
///
/// Missing and outlier frames are linearly interpolated between the nearest
/// valid frames; gaps at either end hold the nearest valid coordinate.
/// `interpolated_count` tallies low-confidence replacements and
/// `outlier_count` tallies outlier replacements. Replaced outliers get
/// confidence 0 so they read as synthesized downstream.
pub fn clean_sequence(
    seq: &KeypointSequence,
    params: CleaningParams,
) -> Result<(KeypointSequence, CleaningReport), KeypointError> {
    params.validate()?;
    let frame_count = seq.frame_count();
    let mut frames = seq.frames.clone();
    let mut report = CleaningReport::default();

    for joint in 0..seq.joint_count() {
        let mut valid: Vec<bool> = seq
            .track(joint)
            .map(|j| j.confidence >= params.conf_min)
            .collect();
        let missing = valid.iter().filter(|v| !**v).count();
        if missing == frame_count {
            return Err(KeypointError::DeadJoint { joint });
        }

        let track: Vec<Joint> = seq.track(joint).collect();
        let mut outliers = 0;
        while let Some(flagged) = detect_outliers(&track, &valid, &params) {
            for f in flagged {
                valid[f] = false;
                frames[f][joint].confidence = 0.0;
                outliers += 1;
            }
        }

        fill_gaps(&mut frames, joint, &track, &valid);

        report.interpolated_count += missing;
        report.outlier_count += outliers;
        report.per_joint_counts.push(JointCleaning {
            joint,
            interpolated: missing,
            outliers,
        });
    }

    let cleaned = KeypointSequence {
        frames,
        ..seq.clone()
    };
    Ok((cleaned, report))
}

/// Returns the newly flagged frames, or `None` when the valid set is stable.
fn detect_outliers(track: &[Joint], valid: &[bool], params: &CleaningParams) -> Option<Vec<usize>> {
    let idx: Vec<usize> = (0..track.len()).filter(|&i| valid[i]).collect();
    if idx.len() < 3 {
        return None;
    }
    let rate = |a: usize, b: usize| track[a].distance(&track[b]) / (b - a) as f64;
    let rates: Vec<f64> = idx.windows(2).map(|w| rate(w[0], w[1])).collect();
    let threshold = params.outlier_factor * median(&rates).max(params.min_displacement);

    let flagged: Vec<usize> = (0..idx.len())
        .filter(|&k| {
            let prev = (k > 0).then(|| rates[k - 1]);
            let next = (k + 1 < idx.len()).then(|| rates[k]);
            let own = match (prev, next) {
                (Some(p), Some(n)) => p.min(n),
                (Some(p), None) => p,
                (None, Some(n)) => n,
                (None, None) => 0.0,
            };
            own > threshold
        })
        .map(|k| idx[k])
        .collect();

    // Never drain the joint below two anchors.
    if flagged.is_empty() || idx.len() - flagged.len() < 2 {
        None
    } else {
        Some(flagged)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fill_gaps(frames: &mut [Vec<Joint>], joint: usize, track: &[Joint], valid: &[bool]) {
    let anchors: Vec<usize> = (0..track.len()).filter(|&i| valid[i]).collect();
    let first = anchors[0];
    let last = *anchors.last().expect("at least one anchor");

    for frame in &mut frames[..first] {
        set_xy(&mut frame[joint], track[first]);
    }
    for frame in &mut frames[last + 1..] {
        set_xy(&mut frame[joint], track[last]);
    }
    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b - a) as f64;
        for (k, frame) in frames[a + 1..b].iter_mut().enumerate() {
            let s = (k + 1) as f64 / span;
            frame[joint].x = track[a].x + s * (track[b].x - track[a].x);
            frame[joint].y = track[a].y + s * (track[b].y - track[a].y);
        }
    }
}

fn set_xy(dst: &mut Joint, src: Joint) {
    dst.x = src.x;
    dst.y = src.y;
}
