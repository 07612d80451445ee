use std::path::{Path, PathBuf};

use super::config::PipelineConfig;
use super::error::{read, write, PipelineError};
use super::plot::energy_svg;
use crate::keypoints::{clean_sequence, parse_keypoints, CleaningReport, KeypointSequence};
use crate::peaks::filter_peaks;
use crate::velocity::{compute_velocity, VelocitySeries};
use crate::wavelet::{energy_series, EnergySeries};
use crate::window::{select_window, WindowSelection};

/// Intermediate products of the analysis chain for one keypoint document.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub cleaned: KeypointSequence,
    pub cleaning: CleaningReport,
    pub velocity: VelocitySeries,
    pub energy: EnergySeries,
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOutputs {
    pub energy_csv: Option<PathBuf>,
    pub velocity_csv: Option<PathBuf>,
    pub plot_svg: Option<PathBuf>,
}

pub fn load_keypoints(path: &Path) -> Result<KeypointSequence, PipelineError> {
    parse_keypoints(&read(path)?).map_err(|e| PipelineError::input(path, e))
}

/// clean → velocity → energy → peak filter. A single-frame sequence yields
/// empty series.
pub fn analyze_sequence(
    seq: &KeypointSequence,
    cfg: &PipelineConfig,
    source: &Path,
) -> Result<Analysis, PipelineError> {
    cfg.validate()?;
    let err = |e: &dyn std::fmt::Display| PipelineError::input(source, e);
    let (cleaned, cleaning) = clean_sequence(seq, cfg.cleaning).map_err(|e| err(&e))?;
    if cfg.joint_index >= cleaned.joint_count() {
        return Err(err(&format!(
            "joint index {} out of range for {} joints",
            cfg.joint_index,
            cleaned.joint_count()
        )));
    }
    let (velocity, energy) = if cleaned.frame_count() < 2 {
        let v = VelocitySeries {
            values: vec![],
            fps: cleaned.fps(),
            joint_index: cfg.joint_index,
        };
        (v, EnergySeries::from_raw(vec![]))
    } else {
        let v = compute_velocity(&cleaned, cfg.joint_index).map_err(|e| err(&e))?;
        let raw = energy_series(&v, &cfg.cwt).map_err(|e| err(&e))?;
        let e = filter_peaks(&raw, cfg.peak_threshold_frames);
        (v, e)
    };
    Ok(Analysis {
        cleaned,
        cleaning,
        velocity,
        energy,
    })
}

pub fn select(
    analysis: &Analysis,
    cfg: &PipelineConfig,
    source: &Path,
) -> Result<WindowSelection, PipelineError> {
    select_window(
        &analysis.energy,
        analysis.cleaned.fps(),
        analysis.cleaned.frame_count(),
        cfg.window_seconds,
        cfg.boundary_margin_frames,
    )
    .map_err(|e| PipelineError::input(source, e))
}

/// Runs the analysis and writes whichever artifacts are requested. The plot
/// shades the selected window when one can be chosen.
pub fn run_analyze(
    keypoints_path: &Path,
    cfg: &PipelineConfig,
    outputs: &AnalyzeOutputs,
) -> Result<Analysis, PipelineError> {
    let seq = load_keypoints(keypoints_path)?;
    let analysis = analyze_sequence(&seq, cfg, keypoints_path)?;
    if let Some(p) = &outputs.energy_csv {
        write(p, analysis.energy.to_csv())?;
    }
    if let Some(p) = &outputs.velocity_csv {
        write(p, analysis.velocity.to_csv())?;
    }
    if let Some(p) = &outputs.plot_svg {
        let selection = select(&analysis, cfg, keypoints_path).ok();
        write(p, energy_svg(&analysis.energy, selection.as_ref()))?;
    }
    Ok(analysis)
}

pub fn run_select(
    keypoints_path: &Path,
    cfg: &PipelineConfig,
) -> Result<WindowSelection, PipelineError> {
    let seq = load_keypoints(keypoints_path)?;
    let analysis = analyze_sequence(&seq, cfg, keypoints_path)?;
    select(&analysis, cfg, keypoints_path)
}

pub fn selection_json(sel: &WindowSelection) -> String {
    serde_json::to_string_pretty(sel).expect("selection serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::Joint;

    /// Slow circular motion with a 5 Hz jitter between frames 100 and 160.
    fn seq(n: usize) -> KeypointSequence {
        let frames = (0..n)
            .map(|i| {
                let t = i as f64 / 30.0;
                let phase = std::f64::consts::TAU * t / 6.0;
                let jitter = if (100..160).contains(&i) {
                    4.0 * (std::f64::consts::TAU * 5.0 * t).sin()
                } else {
                    0.0
                };
                let (x, y) = (
                    320.0 + 60.0 * phase.cos(),
                    240.0 + 60.0 * phase.sin() + jitter,
                );
                vec![Joint::new(x, y, 0.9), Joint::new(50.0, 50.0, 0.9)]
            })
            .collect();
        KeypointSequence::new(30.0, 640, 480, frames).unwrap()
    }

    #[test]
    fn energy_has_one_sample_per_interval() {
        let a = analyze_sequence(&seq(200), &PipelineConfig::default(), Path::new("x")).unwrap();
        assert_eq!(a.velocity.len(), 199);
        assert_eq!(a.energy.len(), 199);
        assert_eq!(a.energy.peak_threshold_frames, 3);
    }

    #[test]
    fn single_frame_is_whole_video() {
        let cfg = PipelineConfig::default();
        let a = analyze_sequence(&seq(1), &cfg, Path::new("x")).unwrap();
        let s = select(&a, &cfg, Path::new("x")).unwrap();
        assert!(s.whole_video);
        assert_eq!((s.start_frame, s.end_frame), (0, 1));
    }

    #[test]
    fn joint_out_of_range_names_file() {
        let cfg = PipelineConfig {
            joint_index: 5,
            ..Default::default()
        };
        let e = analyze_sequence(&seq(10), &cfg, Path::new("kp.json")).unwrap_err();
        assert!(e.to_string().contains("kp.json"));
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn selection_covers_burst() {
        let cfg = PipelineConfig::default();
        let a = analyze_sequence(&seq(400), &cfg, Path::new("x")).unwrap();
        assert!(a.cleaning.is_clean());
        let s = select(&a, &cfg, Path::new("x")).unwrap();
        assert!(s.start_frame <= 100 && s.end_frame >= 160, "{s:?}");
        let back: WindowSelection = serde_json::from_str(&selection_json(&s)).unwrap();
        assert_eq!(back, s);
    }
}
