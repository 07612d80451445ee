use serde::{Deserialize, Serialize};

use super::RopeError;

pub const DEFAULT_BASE: f64 = 10_000.0;
pub const DEFAULT_LOW_FREQ_RATIO: f64 = 0.30;
pub const DEFAULT_MOTION_SCALE: f64 = 1.5;
pub const DEFAULT_SPACE_SCALE_FACTOR: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    T,
    H,
    W,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::T, Axis::H, Axis::W];

    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "t",
            Axis::H => "h",
            Axis::W => "w",
        }
    }
}

/// Channel-pair counts per axis; pairs are laid out t first, then h, then w.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPairs {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl AxisPairs {
    /// Spatial axes get `floor(d/6)` pairs each, time takes the rest.
    pub fn default_split(head_dim: usize) -> Self {
        let spatial = head_dim / 6;
        Self {
            t: head_dim / 2 - 2 * spatial,
            h: spatial,
            w: spatial,
        }
    }

    pub fn get(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => self.t,
            Axis::H => self.h,
            Axis::W => self.w,
        }
    }

    pub fn total(&self) -> usize {
        self.t + self.h + self.w
    }
}

/// Rotary frequency layout of one attention head over a (t, h, w) grid,
/// together with the spatial low-frequency scaling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLayout {
    pub head_dim: usize,
    pub pair_counts: AxisPairs,
    pub base: f64,
    /// Fraction of each spatial axis (its lowest frequencies) that gets scaled.
    pub alpha: f64,
    pub motion_scale: f64,
    pub space_scale_factor: f64,
}

impl FrequencyLayout {
    pub fn new(head_dim: usize) -> Result<Self, RopeError> {
        let layout = Self {
            head_dim,
            pair_counts: AxisPairs::default_split(head_dim),
            base: DEFAULT_BASE,
            alpha: DEFAULT_LOW_FREQ_RATIO,
            motion_scale: DEFAULT_MOTION_SCALE,
            space_scale_factor: DEFAULT_SPACE_SCALE_FACTOR,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn with_pairs(head_dim: usize, pair_counts: AxisPairs) -> Result<Self, RopeError> {
        let layout = Self {
            pair_counts,
            ..Self::new(head_dim)?
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<(), RopeError> {
        if self.head_dim == 0 || !self.head_dim.is_multiple_of(2) {
            return Err(RopeError::InvalidLayout(
                "head_dim must be even and positive",
            ));
        }
        if self.pair_counts.total() != self.head_dim / 2 {
            return Err(RopeError::InvalidLayout(
                "axis pair counts must sum to head_dim / 2",
            ));
        }
        if !(self.base.is_finite() && self.base > 1.0) {
            return Err(RopeError::InvalidLayout(
                "base must be finite and greater than 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(RopeError::InvalidLayout("alpha must lie in [0, 1]"));
        }
        if !(self.motion_scale.is_finite() && self.space_scale_factor.is_finite()) {
            return Err(RopeError::InvalidLayout(
                "scaling parameters must be finite",
            ));
        }
        Ok(())
    }

    /// `1 + space_scale_factor * motion_scale`.
    pub fn gamma(&self) -> f64 {
        1.0 + self.space_scale_factor * self.motion_scale
    }

    /// Number of lowest-frequency entries scaled on a spatial axis,
    /// `round(alpha * pairs)` with halves rounded up.
    pub fn low_count(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => 0,
            _ => {
                // 1e-9 absorbs representation error in alpha (0.3 * 5 = 1.4999...).
                let exact = self.alpha * self.pair_counts.get(axis) as f64;
                (exact + 0.5 + 1e-9).floor() as usize
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisFrequencies {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
}

impl AxisFrequencies {
    pub fn get(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::T => &self.t,
            Axis::H => &self.h,
            Axis::W => &self.w,
        }
    }

    fn get_mut(&mut self, axis: Axis) -> &mut Vec<f64> {
        match axis {
            Axis::T => &mut self.t,
            Axis::H => &mut self.h,
            Axis::W => &mut self.w,
        }
    }

    /// All frequencies in channel-pair order (t, h, w).
    pub fn concat(&self) -> Vec<f64> {
        self.t
            .iter()
            .chain(&self.h)
            .chain(&self.w)
            .copied()
            .collect()
    }

    pub fn matches(&self, layout: &FrequencyLayout) -> bool {
        Axis::ALL
            .iter()
            .all(|&a| self.get(a).len() == layout.pair_counts.get(a))
    }
}

/// `theta_j = base^(-2(j-1)/d_a)` on each axis, where `d_a` is twice the
/// axis pair count.
pub fn base_frequencies(layout: &FrequencyLayout) -> Result<AxisFrequencies, RopeError> {
    layout.validate()?;
    let axis = |pairs: usize| -> Vec<f64> {
        let dim = (2 * pairs) as f64;
        (0..pairs)
            .map(|j| layout.base.powf(-2.0 * j as f64 / dim))
            .collect()
    };
    Ok(AxisFrequencies {
        t: axis(layout.pair_counts.t),
        h: axis(layout.pair_counts.h),
        w: axis(layout.pair_counts.w),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledFrequencies {
    pub freqs: AxisFrequencies,
    pub gamma: f64,
    pub low_h: usize,
    pub low_w: usize,
    /// Some spatial axis had no entries to scale.
    pub no_low_channels: bool,
    /// Scaling lifted a low-frequency entry to or above its predecessor.
    pub monotonicity_broken: bool,
}

/// Multiplies the last `low_count` entries of the h and w axes by gamma.
/// The temporal axis is returned untouched.
pub fn slf_scale(
    layout: &FrequencyLayout,
    freqs: &AxisFrequencies,
) -> Result<ScaledFrequencies, RopeError> {
    layout.validate()?;
    if !freqs.matches(layout) {
        return Err(RopeError::FrequencyMismatch);
    }
    let gamma = layout.gamma();
    let mut out = freqs.clone();
    let mut no_low_channels = false;
    let mut monotonicity_broken = false;

    for axis in [Axis::H, Axis::W] {
        let n_low = layout.low_count(axis);
        let theta = out.get_mut(axis);
        if n_low == 0 {
            no_low_channels |= !theta.is_empty() || layout.pair_counts.get(axis) == 0;
            continue;
        }
        let first = theta.len() - n_low;
        for v in &mut theta[first..] {
            *v *= gamma;
        }
        monotonicity_broken |= theta.windows(2).any(|w| w[1] >= w[0]);
    }

    if no_low_channels {
        log::debug!("spatial low-frequency scaling left an axis unchanged (no low channels)");
    }
    if monotonicity_broken {
        log::debug!("gamma = {gamma} breaks frequency monotonicity");
    }

    Ok(ScaledFrequencies {
        freqs: out,
        gamma,
        low_h: layout.low_count(Axis::H),
        low_w: layout.low_count(Axis::W),
        no_low_channels,
        monotonicity_broken,
    })
}

/// Frequencies actually used for rotation.
pub fn effective_frequencies(
    layout: &FrequencyLayout,
    use_slf: bool,
) -> Result<AxisFrequencies, RopeError> {
    let base = base_frequencies(layout)?;
    if use_slf {
        Ok(slf_scale(layout, &base)?.freqs)
    } else {
        Ok(base)
    }
}

/// CSV with header `axis,index,base,scaled,changed`.
pub fn frequency_table_csv(layout: &FrequencyLayout) -> Result<String, RopeError> {
    let base = base_frequencies(layout)?;
    let scaled = slf_scale(layout, &base)?;
    let mut out = String::from("axis,index,base,scaled,changed\n");
    for axis in Axis::ALL {
        for (j, (b, s)) in base
            .get(axis)
            .iter()
            .zip(scaled.freqs.get(axis))
            .enumerate()
        {
            out.push_str(&format!(
                "{},{},{:e},{:e},{}\n",
                axis.name(),
                j,
                b,
                s,
                b != s
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(head_dim: usize, pairs: (usize, usize, usize)) -> FrequencyLayout {
        FrequencyLayout::with_pairs(
            head_dim,
            AxisPairs {
                t: pairs.0,
                h: pairs.1,
                w: pairs.2,
            },
        )
        .unwrap()
    }

    #[test]
    fn default_split() {
        assert_eq!(AxisPairs::default_split(8), AxisPairs { t: 2, h: 1, w: 1 });
        assert_eq!(
            AxisPairs::default_split(128),
            AxisPairs {
                t: 22,
                h: 21,
                w: 21
            }
        );
        assert_eq!(AxisPairs::default_split(32), AxisPairs { t: 6, h: 5, w: 5 });
    }

    #[test]
    fn layout_validation() {
        assert!(FrequencyLayout::new(7).is_err());
        assert!(FrequencyLayout::new(0).is_err());
        assert!(FrequencyLayout::with_pairs(8, AxisPairs { t: 1, h: 1, w: 1 }).is_err());
        let mut l = FrequencyLayout::new(8).unwrap();
        l.base = 1.0;
        assert!(l.validate().is_err());
        l.base = 10.0;
        l.alpha = 1.5;
        assert!(l.validate().is_err());
    }

    #[test]
    fn first_frequency_is_one_and_sequence_decreases() {
        let l = layout(128, (32, 16, 16));
        let f = base_frequencies(&l).unwrap();
        for axis in Axis::ALL {
            assert_eq!(f.get(axis)[0], 1.0);
            assert!(f.get(axis).windows(2).all(|w| w[1] < w[0]));
        }
        let two = base_frequencies(&layout(8, (2, 1, 1))).unwrap();
        assert!((two.t[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_space_factor_is_identity() {
        let mut l = layout(64, (12, 10, 10));
        l.space_scale_factor = 0.0;
        let base = base_frequencies(&l).unwrap();
        let scaled = slf_scale(&l, &base).unwrap();
        assert_eq!(scaled.gamma, 1.0);
        assert_eq!(scaled.freqs, base);
    }

    #[test]
    fn defaults_scale_last_three_of_ten() {
        let l = layout(64, (12, 10, 10));
        assert!((l.gamma() - 1.03).abs() < 1e-15);
        assert_eq!(l.low_count(Axis::H), 3);
        let base = base_frequencies(&l).unwrap();
        let scaled = slf_scale(&l, &base).unwrap();
        for axis in [Axis::H, Axis::W] {
            for j in 0..10 {
                let (b, s) = (base.get(axis)[j], scaled.freqs.get(axis)[j]);
                if j >= 7 {
                    assert_eq!(s, b * l.gamma(), "{axis:?} entry {}", j + 1);
                } else {
                    assert_eq!(s, b);
                }
            }
        }
        assert_eq!(scaled.freqs.t, base.t);
        assert!(!scaled.monotonicity_broken && !scaled.no_low_channels);
    }

    #[test]
    fn half_rounds_up() {
        let l = layout(32, (6, 5, 5));
        assert_eq!(l.low_count(Axis::H), 2);
        let l = layout(16, (4, 2, 2));
        assert_eq!(l.low_count(Axis::W), 1);
    }

    #[test]
    fn empty_low_band_is_flagged() {
        let l = layout(8, (2, 1, 1));
        let base = base_frequencies(&l).unwrap();
        let scaled = slf_scale(&l, &base).unwrap();
        assert_eq!(scaled.low_h, 0);
        assert!(scaled.no_low_channels);
        assert_eq!(scaled.freqs, base);
    }

    #[test]
    fn large_gamma_reports_broken_monotonicity() {
        let mut l = layout(64, (12, 10, 10));
        l.space_scale_factor = 10.0;
        let base = base_frequencies(&l).unwrap();
        let scaled = slf_scale(&l, &base).unwrap();
        assert!(scaled.monotonicity_broken);
    }

    #[test]
    fn mismatched_frequencies_are_rejected() {
        let l = layout(64, (12, 10, 10));
        let other = base_frequencies(&layout(64, (14, 9, 9))).unwrap();
        assert_eq!(slf_scale(&l, &other), Err(RopeError::FrequencyMismatch));
    }

    #[test]
    fn table_marks_changed_rows() {
        let csv = frequency_table_csv(&layout(64, (12, 10, 10))).unwrap();
        assert_eq!(csv.lines().count(), 33);
        assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 6);
    }
}
