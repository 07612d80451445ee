//! Fixed-length window of maximal filtered energy.
//!
//! Energy samples live on frame intervals, so an `N`-frame video carries
//! `N - 1` samples. A window starting at frame `i` with `L` frames sums the
//! samples `i..i+L`, clipped to the end of the series.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wavelet::EnergySeries;

pub const DEFAULT_WINDOW_SECONDS: f64 = 6.0;
pub const DEFAULT_BOUNDARY_MARGIN: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("energy has {energy} samples but {frames} frames need {expected}")]
    LengthMismatch {
        energy: usize,
        frames: usize,
        expected: usize,
    },
    #[error("fps must be positive and finite, got {0}")]
    InvalidFps(f64),
    #[error("window length must be positive, got {0} s")]
    InvalidWindow(f64),
    #[error("window of {seconds} s at {fps} fps rounds to zero frames")]
    EmptyWindow { seconds: f64, fps: f64 },
    #[error("total frame count must be at least 1")]
    NoFrames,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSelection {
    pub start_frame: usize,
    /// Exclusive.
    pub end_frame: usize,
    pub start_seconds: f64,
    pub duration_seconds: f64,
    pub window_energy: f64,
    pub boundary_adjusted: bool,
    pub whole_video: bool,
}

impl WindowSelection {
    pub fn frame_count(&self) -> usize {
        self.end_frame - self.start_frame
    }
}

/// Window length in frames, rounding half up.
pub fn window_frames(window_seconds: f64, fps: f64) -> usize {
    (window_seconds * fps + 0.5).floor() as usize
}

/// Picks the window maximizing filtered energy.
///
/// Ties resolve to the earliest start. A best start within `margin` frames
/// of the beginning snaps to frame 0; a best window ending within `margin`
/// frames of the end snaps to `total_frames - L`. Videos no longer than `L`
/// are returned whole.
pub fn select_window(
    e: &EnergySeries,
    fps: f64,
    total_frames: usize,
    window_seconds: f64,
    margin: usize,
) -> Result<WindowSelection, WindowError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(WindowError::InvalidFps(fps));
    }
    if !(window_seconds.is_finite() && window_seconds > 0.0) {
        return Err(WindowError::InvalidWindow(window_seconds));
    }
    if total_frames == 0 {
        return Err(WindowError::NoFrames);
    }
    let expected = total_frames - 1;
    if e.filtered.len() != expected {
        return Err(WindowError::LengthMismatch {
            energy: e.filtered.len(),
            frames: total_frames,
            expected,
        });
    }
    let len = window_frames(window_seconds, fps);
    if len == 0 {
        return Err(WindowError::EmptyWindow {
            seconds: window_seconds,
            fps,
        });
    }

    let energy = &e.filtered;
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(energy.iter().scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        }))
        .collect();
    let window_sum =
        |start: usize, end: usize| prefix[end.min(energy.len())] - prefix[start.min(energy.len())];

    let build = |start: usize, end: usize, adjusted: bool, whole: bool| WindowSelection {
        start_frame: start,
        end_frame: end,
        start_seconds: start as f64 / fps,
        duration_seconds: (end - start) as f64 / fps,
        window_energy: window_sum(start, end),
        boundary_adjusted: adjusted,
        whole_video: whole,
    };

    if total_frames <= len {
        return Ok(build(0, total_frames, false, true));
    }

    let last_start = total_frames - len;
    let mut best = 0;
    let mut best_sum = window_sum(0, len);
    for start in 1..=last_start {
        let s = window_sum(start, start + len);
        if s > best_sum {
            best = start;
            best_sum = s;
        }
    }

    let snapped = if best < margin {
        0
    } else if best + len > total_frames.saturating_sub(margin) {
        last_start
    } else {
        best
    };
    Ok(build(snapped, snapped + len, snapped != best, false))
}
