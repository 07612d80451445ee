//! Morlet continuous wavelet transform of a velocity series and the
//! per-sample motion energy derived from it.
//!
//! Coefficients are the unit-step discretization
//! `W(a, b) = a^-1/2 * sum_t v(t) * conj(psi((t - b) / a))`, with the series
//! zero outside `[0, len)` and the wavelet truncated at `|u| <= 8`.
//! Each scale row is evaluated as one FFT convolution.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::velocity::VelocitySeries;

/// Truncation radius of the Morlet envelope, in standard deviations.
pub const SUPPORT_RADIUS: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("cannot transform an empty series")]
    EmptySeries,
    #[error("invalid CWT configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CwtConfig {
    pub scale_min: u32,
    pub scale_max: u32,
    pub scale_step: u32,
    pub morlet_omega0: f64,
}

impl Default for CwtConfig {
    fn default() -> Self {
        Self {
            scale_min: 1,
            scale_max: 128,
            scale_step: 1,
            morlet_omega0: 6.0,
        }
    }
}

impl CwtConfig {
    pub fn validate(&self) -> Result<(), WaveletError> {
        if self.scale_min == 0 {
            return Err(WaveletError::InvalidConfig("scale_min must be at least 1"));
        }
        if self.scale_min > self.scale_max {
            return Err(WaveletError::InvalidConfig("scale_min exceeds scale_max"));
        }
        if self.scale_step == 0 {
            return Err(WaveletError::InvalidConfig("scale_step must be at least 1"));
        }
        if !(self.morlet_omega0.is_finite() && self.morlet_omega0 > 0.0) {
            return Err(WaveletError::InvalidConfig(
                "morlet_omega0 must be positive",
            ));
        }
        Ok(())
    }

    pub fn scales(&self) -> Vec<u32> {
        (self.scale_min..=self.scale_max)
            .step_by(self.scale_step as usize)
            .collect()
    }
}

/// Morlet mother wavelet `pi^-1/4 * exp(i*omega0*u) * exp(-u^2/2)`.
pub fn morlet(u: f64, omega0: f64) -> Complex64 {
    let envelope = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
    Complex64::from_polar(envelope, omega0 * u)
}

/// Scale-by-time coefficient matrix, stored row-major by scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CwtMatrix {
    scales: Vec<u32>,
    len: usize,
    coeffs: Vec<Complex64>,
}

impl CwtMatrix {
    pub fn scales(&self) -> &[u32] {
        &self.scales
    }

    /// Number of time samples per row.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn row(&self, scale_index: usize) -> &[Complex64] {
        &self.coeffs[scale_index * self.len..(scale_index + 1) * self.len]
    }

    pub fn get(&self, scale_index: usize, time: usize) -> Complex64 {
        self.row(scale_index)[time]
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[Complex64])> {
        self.scales
            .iter()
            .copied()
            .zip(self.coeffs.chunks(self.len))
    }

    /// Column sums of coefficient magnitudes, accumulated in scale order.
    pub fn magnitude_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (_, row) in self.rows() {
            for (acc, c) in out.iter_mut().zip(row) {
                *acc += c.norm();
            }
        }
        out
    }
}

pub fn cwt_matrix(v: &VelocitySeries, cfg: &CwtConfig) -> Result<CwtMatrix, WaveletError> {
    cwt(&v.values, cfg)
}

/// Transform of a raw sample slice.
pub fn cwt(signal: &[f64], cfg: &CwtConfig) -> Result<CwtMatrix, WaveletError> {
    cfg.validate()?;
    if signal.is_empty() {
        return Err(WaveletError::EmptySeries);
    }
    let n = signal.len();
    let scales = cfg.scales();
    let half_width = |a: u32| kernel_half_width(a, n);
    let widest = scales.iter().map(|&a| half_width(a)).max().unwrap_or(0);
    let fft_len = (n + 2 * widest).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);

    let mut spectrum: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    spectrum.resize(fft_len, Complex64::new(0.0, 0.0));
    forward.process(&mut spectrum);

    let rows: Vec<Vec<Complex64>> = scales
        .par_iter()
        .map(|&a| {
            scale_row(
                &spectrum,
                a,
                half_width(a),
                n,
                cfg.morlet_omega0,
                &forward,
                &inverse,
            )
        })
        .collect();

    Ok(CwtMatrix {
        scales,
        len: n,
        coeffs: rows.into_iter().flatten().collect(),
    })
}

/// Largest offset `|t - b|` with a non-zero kernel tap that can still
/// overlap a series of length `n`.
fn kernel_half_width(scale: u32, n: usize) -> usize {
    let support = (SUPPORT_RADIUS * scale as f64).floor() as usize;
    support.min(n - 1)
}

fn scale_row(
    spectrum: &[Complex64],
    scale: u32,
    half_width: usize,
    n: usize,
    omega0: f64,
    forward: &Arc<dyn Fft<f64>>,
    inverse: &Arc<dyn Fft<f64>>,
) -> Vec<Complex64> {
    let fft_len = spectrum.len();
    let a = scale as f64;
    let norm = a.sqrt().recip();

    // Reversed kernel: tap m holds conj(psi((K - m) / a)) / sqrt(a), so the
    // linear convolution at index b + K is the correlation at offset b.
    let mut kernel = vec![Complex64::new(0.0, 0.0); fft_len];
    for (m, tap) in kernel.iter_mut().take(2 * half_width + 1).enumerate() {
        let offset = half_width as f64 - m as f64;
        *tap = morlet(offset / a, omega0).conj() * norm;
    }
    forward.process(&mut kernel);
    for (k, s) in kernel.iter_mut().zip(spectrum) {
        *k *= s;
    }
    inverse.process(&mut kernel);

    let scale_back = (fft_len as f64).recip();
    kernel[half_width..half_width + n]
        .iter()
        .map(|c| c * scale_back)
        .collect()
}

/// Per-sample energy before and after peak-width filtering.
///
/// `peak_threshold_frames` records the threshold that produced `filtered`;
/// a freshly computed series carries 1, for which filtering is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub raw: Vec<f64>,
    pub filtered: Vec<f64>,
    pub peak_threshold_frames: usize,
}

impl EnergySeries {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        Self {
            filtered: raw.clone(),
            raw,
            peak_threshold_frames: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// CSV with header `sample_index,raw,filtered`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_index,raw,filtered\n");
        for (i, (r, f)) in self.raw.iter().zip(&self.filtered).enumerate() {
            out.push_str(&format!("{i},{r},{f}\n"));
        }
        out
    }
}

pub fn energy_series(v: &VelocitySeries, cfg: &CwtConfig) -> Result<EnergySeries, WaveletError> {
    let matrix = cwt_matrix(v, cfg)?;
    Ok(EnergySeries::from_raw(matrix.magnitude_sums()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct double loop over the same truncated, zero-padded sum.
    fn direct(signal: &[f64], cfg: &CwtConfig) -> Vec<Vec<Complex64>> {
        let n = signal.len() as i64;
        cfg.scales()
            .into_iter()
            .map(|a| {
                let af = a as f64;
                (0..n)
                    .map(|b| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for t in 0..n {
                            let u = (t - b) as f64 / af;
                            if u.abs() <= SUPPORT_RADIUS {
                                acc += signal[t as usize] * morlet(u, cfg.morlet_omega0).conj();
                            }
                        }
                        acc / af.sqrt()
                    })
                    .collect()
            })
            .collect()
    }

    fn series(values: Vec<f64>) -> VelocitySeries {
        VelocitySeries {
            values,
            fps: 30.0,
            joint_index: 0,
        }
    }

    #[test]
    fn config_validation() {
        assert!(CwtConfig::default().validate().is_ok());
        assert_eq!(CwtConfig::default().scales().len(), 128);
        let bad = [
            CwtConfig {
                scale_min: 0,
                ..Default::default()
            },
            CwtConfig {
                scale_min: 9,
                scale_max: 8,
                ..Default::default()
            },
            CwtConfig {
                scale_step: 0,
                ..Default::default()
            },
            CwtConfig {
                morlet_omega0: f64::NAN,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(
                cfg.validate(),
                Err(WaveletError::InvalidConfig(_))
            ));
        }
        let stepped = CwtConfig {
            scale_min: 2,
            scale_max: 10,
            scale_step: 4,
            ..Default::default()
        };
        assert_eq!(stepped.scales(), vec![2, 6, 10]);
        assert_eq!(
            cwt(&[], &CwtConfig::default()),
            Err(WaveletError::EmptySeries)
        );
    }

    #[test]
    fn impulse_sifts_the_wavelet() {
        let mut x = vec![0.0; 64];
        let k = 23;
        x[k] = 1.0;
        let cfg = CwtConfig {
            scale_max: 16,
            ..Default::default()
        };
        let m = cwt(&x, &cfg).unwrap();
        for (si, &a) in m.scales().iter().enumerate() {
            for b in 0..64 {
                let u = (k as f64 - b as f64) / a as f64;
                let expect = if u.abs() <= SUPPORT_RADIUS {
                    morlet(u, 6.0).conj() / (a as f64).sqrt()
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((m.get(si, b) - expect).norm() < 1e-13, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn fast_path_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..50.0)).collect();
        let cfg = CwtConfig::default();
        let fast = cwt(&x, &cfg).unwrap();
        let slow = direct(&x, &cfg);
        let peak = slow.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        let worst = slow
            .iter()
            .enumerate()
            .flat_map(|(si, row)| row.iter().enumerate().map(move |(b, c)| (si, b, c)))
            .map(|(si, b, c)| (fast.get(si, b) - c).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9 * peak, "worst {worst} vs peak {peak}");
    }

    #[test]
    fn energy_is_column_magnitude_sum() {
        let x: Vec<f64> = (0..90).map(|i| ((i * 37) % 11) as f64).collect();
        let cfg = CwtConfig {
            scale_max: 40,
            ..Default::default()
        };
        let m = cwt(&x, &cfg).unwrap();
        let e = energy_series(&series(x), &cfg).unwrap();
        let mut expect = vec![0.0; 90];
        for (_, row) in m.rows() {
            for (t, c) in row.iter().enumerate() {
                expect[t] += c.norm();
            }
        }
        assert_eq!(e.raw, expect);
        assert_eq!(e.filtered, e.raw);
        assert_eq!(e.peak_threshold_frames, 1);
    }

    #[test]
    fn interior_constants_vanish_above_unit_scale() {
        // Unit-step sampling aliases omega0 = 6 at scale 1, so only scales >= 2
        // inherit the (near) zero mean of the continuous wavelet.
        let n = 400;
        let cfg = CwtConfig {
            scale_min: 2,
            scale_max: 16,
            ..Default::default()
        };
        let m = cwt(&vec![1.0; n], &cfg).unwrap();
        for (a, row) in m.rows() {
            let r = (SUPPORT_RADIUS * a as f64) as usize;
            for c in &row[r..n - r] {
                assert!(c.norm() < 1e-6, "scale {a}: {}", c.norm());
            }
        }
        let unit = cwt(
            &vec![1.0; n],
            &CwtConfig {
                scale_max: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(unit.get(0, n / 2).norm() > 1.0);
    }

    #[test]
    fn burst_energy_peaks_inside_burst() {
        let n = 300;
        let x: Vec<f64> = (0..n)
            .map(|t| {
                if (100..200).contains(&t) {
                    40.0 * (1.0 + (t as f64 * 1.3).sin())
                } else {
                    0.0
                }
            })
            .collect();
        let cfg = CwtConfig::default();
        let e = energy_series(&series(x.clone()), &cfg).unwrap();
        let oracle: Vec<f64> = {
            let rows = direct(&x, &cfg);
            (0..n)
                .map(|t| rows.iter().map(|r| r[t].norm()).sum())
                .collect()
        };
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap()
        };
        assert!((100..200).contains(&argmax(&e.raw)));
        assert_eq!(argmax(&e.raw), argmax(&oracle));
    }

    #[test]
    fn energy_scales_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..150).map(|_| rng.gen_range(0.0..10.0)).collect();
        let cfg = CwtConfig {
            scale_max: 32,
            ..Default::default()
        };
        let base = cwt(&x, &cfg).unwrap().magnitude_sums();
        let doubled: Vec<f64> = x.iter().map(|v| v * 4.0).collect();
        let scaled = cwt(&doubled, &cfg).unwrap().magnitude_sums();
        for (b, s) in base.iter().zip(&scaled) {
            assert_eq!(*s, b * 4.0);
        }
        let s = 1.7;
        let odd: Vec<f64> = x.iter().map(|v| v * s).collect();
        let scaled = cwt(&odd, &cfg).unwrap().magnitude_sums();
        for (b, o) in base.iter().zip(&scaled) {
            assert!((o - b * s).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn circular_shift_moves_interior_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let cfg = CwtConfig {
            scale_max: 6,
            ..Default::default()
        };
        let k = 17;
        let mut shifted = vec![0.0; n];
        for (t, v) in x.iter().enumerate() {
            shifted[(t + k) % n] = *v;
        }
        let a = cwt(&x, &cfg).unwrap().magnitude_sums();
        let b = cwt(&shifted, &cfg).unwrap().magnitude_sums();
        let edge = (SUPPORT_RADIUS * 6.0) as usize;
        for t in edge..n - edge - k {
            assert!((a[t] - b[t + k]).abs() < 1e-10 * a[t].max(1.0));
        }
    }
}
