//! Peak-width filtering of an energy series.
//!
//! A peak is a local maximum (flat tops count once) with strictly lower
//! samples on both sides; series endpoints are never peaks. Prominence is
//! taken against the higher of the two flanking minima, and the peak's
//! support is the contiguous run of samples at or above half prominence.
//! Width is the number of samples in that run.

use serde::Serialize;

use crate::wavelet::EnergySeries;

/// Default minimum peak width in frames.
pub const DEFAULT_PEAK_THRESHOLD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// First and last index of the (possibly flat) top.
    pub top: (usize, usize),
    pub height: f64,
    pub prominence: f64,
    /// Inclusive sample range at or above half prominence.
    pub support: (usize, usize),
}

impl Peak {
    pub fn width(&self) -> usize {
        self.support.1 - self.support.0 + 1
    }
}

pub fn find_peaks(x: &[f64]) -> Vec<Peak> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push(describe(x, i, j));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

fn describe(x: &[f64], left: usize, right: usize) -> Peak {
    let top = x[left];

    let left_min = x[..left]
        .iter()
        .rev()
        .take_while(|&&v| v <= top)
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let right_min = x[right + 1..]
        .iter()
        .take_while(|&&v| v <= top)
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let prominence = top - left_min.max(right_min);
    let half = top - 0.5 * prominence;

    let mut lo = left;
    while lo > 0 && x[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = right;
    while hi + 1 < x.len() && x[hi + 1] >= half {
        hi += 1;
    }

    Peak {
        top: (left, right),
        height: top,
        prominence,
        support: (lo, hi),
    }
}

/// Zeroes the support of every peak narrower than `threshold_frames`;
/// every other sample keeps its raw value.
pub fn filter_peaks(e: &EnergySeries, threshold_frames: usize) -> EnergySeries {
    let threshold = threshold_frames.max(1);
    let mut filtered = e.raw.clone();
    for peak in find_peaks(&e.raw) {
        if peak.width() < threshold {
            filtered[peak.support.0..=peak.support.1].fill(0.0);
        }
    }
    EnergySeries {
        raw: e.raw.clone(),
        filtered,
        peak_threshold_frames: threshold,
    }
}
