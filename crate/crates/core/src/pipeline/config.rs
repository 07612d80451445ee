use std::path::Path;

use serde::{Deserialize, Serialize};

use super::error::{read, PipelineError};
use crate::keypoints::CleaningParams;
use crate::peaks::DEFAULT_PEAK_THRESHOLD;
use crate::velocity::DEFAULT_JOINT_INDEX;
use crate::wavelet::CwtConfig;
use crate::window::{DEFAULT_BOUNDARY_MARGIN, DEFAULT_WINDOW_SECONDS};

pub const DEFAULT_CODEC: &str = "libx264";
pub const DEFAULT_QUALITY: u32 = 23;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscoderSettings {
    pub codec: String,
    /// Constant rate factor passed as `-crf`.
    pub quality: u32,
}

impl Default for TranscoderSettings {
    fn default() -> Self {
        Self {
            codec: DEFAULT_CODEC.to_string(),
            quality: DEFAULT_QUALITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub joint_index: usize,
    pub window_seconds: f64,
    pub peak_threshold_frames: usize,
    pub boundary_margin_frames: usize,
    pub cwt: CwtConfig,
    pub cleaning: CleaningParams,
    pub transcoder: TranscoderSettings,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            joint_index: DEFAULT_JOINT_INDEX,
            window_seconds: DEFAULT_WINDOW_SECONDS,
            peak_threshold_frames: DEFAULT_PEAK_THRESHOLD,
            boundary_margin_frames: DEFAULT_BOUNDARY_MARGIN,
            cwt: CwtConfig::default(),
            cleaning: CleaningParams::default(),
            transcoder: TranscoderSettings::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Partial configuration, as read from a config file, a manifest entry or
/// command-line flags. Later layers win:
/// defaults < config file < manifest entry < command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub joint_index: Option<usize>,
    pub window_seconds: Option<f64>,
    pub peak_threshold_frames: Option<usize>,
    pub boundary_margin_frames: Option<usize>,
    pub scale_min: Option<u32>,
    pub scale_max: Option<u32>,
    pub scale_step: Option<u32>,
    pub morlet_omega0: Option<f64>,
    pub conf_min: Option<f64>,
    pub outlier_factor: Option<f64>,
    pub codec: Option<String>,
    pub quality: Option<u32>,
    pub workers: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let bytes = read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| PipelineError::input(path, e))?;
        toml::from_str(&text).map_err(|e| PipelineError::input(path, e))
    }
}

impl PipelineConfig {
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = &o.$src { self.$($dst).+ = v.clone(); })*
            };
        }
        set!(
            joint_index => joint_index,
            window_seconds => window_seconds,
            peak_threshold_frames => peak_threshold_frames,
            boundary_margin_frames => boundary_margin_frames,
            scale_min => cwt.scale_min,
            scale_max => cwt.scale_max,
            scale_step => cwt.scale_step,
            morlet_omega0 => cwt.morlet_omega0,
            conf_min => cleaning.conf_min,
            outlier_factor => cleaning.outlier_factor,
            codec => transcoder.codec,
            quality => transcoder.quality,
            workers => workers,
        );
    }

    pub fn with(mut self, o: &ConfigOverrides) -> Self {
        self.apply(o);
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if !(self.window_seconds.is_finite() && self.window_seconds > 0.0) {
            return bad("window_seconds must be positive");
        }
        if self.peak_threshold_frames == 0 {
            return bad("peak_threshold_frames must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.transcoder.codec.trim().is_empty() {
            return bad("codec must not be empty");
        }
        self.cwt
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.cleaning.conf_min) {
            return bad("conf_min must lie in [0, 1]");
        }
        if !(self.cleaning.outlier_factor.is_finite() && self.cleaning.outlier_factor > 0.0) {
            return bad("outlier_factor must be positive");
        }
        Ok(())
    }
}
