use std::ffi::OsString;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::Command;

use log::warn;
use serde::{Deserialize, Serialize};

use super::analyze::{analyze_sequence, load_keypoints, select};
use super::config::{PipelineConfig, TranscoderSettings};
use super::error::{write, PipelineError};
use crate::window::{window_frames, WindowSelection};

pub const TRANSCODER_ENV: &str = "MOTIONCLIP_FFMPEG";
pub const PROBE_ENV: &str = "MOTIONCLIP_FFPROBE";
pub const AUDIO_POLICY: &str = "dropped";

pub fn transcoder_program() -> String {
    std::env::var(TRANSCODER_ENV).unwrap_or_else(|_| "ffmpeg".to_string())
}

pub fn probe_program() -> String {
    std::env::var(PROBE_ENV).unwrap_or_else(|_| "ffprobe".to_string())
}

fn seconds(v: f64) -> String {
    format!("{v:.6}")
}

/// Transcoder arguments for one clip. Trimmed clips seek before the input
/// and cap the output frame count at the window length.
pub fn transcode_args(
    video: &Path,
    output: &Path,
    selection: &WindowSelection,
    fps: f64,
    settings: &TranscoderSettings,
) -> Vec<String> {
    let mut args: Vec<String> = ["-y", "-hide_banner", "-loglevel", "error"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if !selection.whole_video {
        args.extend(["-ss".into(), seconds(selection.start_seconds)]);
    }
    args.extend(["-i".into(), video.display().to_string()]);
    if !selection.whole_video {
        let frames = window_frames(selection.duration_seconds, fps);
        args.extend([
            "-t".into(),
            seconds(selection.duration_seconds),
            "-frames:v".into(),
            frames.to_string(),
        ]);
    }
    args.extend([
        "-an".into(),
        "-c:v".into(),
        settings.codec.clone(),
        "-crf".into(),
        settings.quality.to_string(),
        output.display().to_string(),
    ]);
    args
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSidecar {
    pub video_path: String,
    pub keypoints_path: String,
    pub output_path: String,
    pub selection: WindowSelection,
    pub transcoder: String,
    pub arguments: Vec<String>,
    pub codec: String,
    pub quality: u32,
    pub audio: String,
}

impl ExtractSidecar {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub sidecar: ExtractSidecar,
    pub sidecar_path: PathBuf,
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(OsString::from).unwrap_or_default();
    name.push(".selection.json");
    output.with_file_name(name)
}

fn partial_path(output: &Path) -> PathBuf {
    let name = output
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("clip");
    let (stem, ext) = match name.rsplit_once('.') {
        Some((s, e)) if !s.is_empty() => (s, format!(".{e}")),
        _ => (name, String::new()),
    };
    output.with_file_name(format!(".{stem}.partial-{}{ext}", std::process::id()))
}

/// Video frame count via the probe tool, or `None` when it is unavailable.
pub fn probe_frame_count(video: &Path) -> Option<usize> {
    let program = probe_program();
    let out = Command::new(&program)
        .args([
            "-v",
            "error",
            "-select_streams",
            "v:0",
            "-count_frames",
            "-show_entries",
            "stream=nb_read_frames",
            "-of",
            "default=nokey=1:noprint_wrappers=1",
        ])
        .arg(video)
        .output();
    match out {
        Ok(o) if o.status.success() => String::from_utf8_lossy(&o.stdout).trim().parse().ok(),
        Ok(o) => {
            warn!(
                "{program} failed on {}: {}",
                video.display(),
                String::from_utf8_lossy(&o.stderr).trim()
            );
            None
        }
        Err(_) => None,
    }
}

/// Selects the window and re-encodes it with the external transcoder. The
/// clip is written to a temporary name and renamed on success, so a failed
/// run leaves no output behind.
pub fn run_extract(
    video: &Path,
    keypoints_path: &Path,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<ExtractOutcome, PipelineError> {
    let seq = load_keypoints(keypoints_path)?;
    let analysis = analyze_sequence(&seq, cfg, keypoints_path)?;
    let selection = select(&analysis, cfg, keypoints_path)?;

    if !video.is_file() {
        return Err(PipelineError::input(video, "video not found"));
    }
    if let Some(frames) = probe_frame_count(video) {
        let expected = seq.frame_count();
        if frames > expected {
            return Err(PipelineError::input(
                video,
                format!("video has {frames} frames but keypoints cover only {expected}"),
            ));
        }
        if frames < expected {
            warn!(
                "{}: video has {frames} frames, keypoints have {expected}",
                video.display()
            );
        }
    }

    let program = transcoder_program();
    let partial = partial_path(output);
    let args = transcode_args(video, &partial, &selection, seq.fps(), &cfg.transcoder);
    let result = Command::new(&program).args(&args).output();
    let out = match result {
        Ok(o) => o,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(PipelineError::TranscoderMissing(program));
        }
        Err(e) => return Err(PipelineError::io(&program, e)),
    };
    if !out.status.success() {
        let _ = std::fs::remove_file(&partial);
        return Err(PipelineError::TranscoderFailed {
            status: out.status.to_string(),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    if let Err(e) = std::fs::rename(&partial, output) {
        let _ = std::fs::remove_file(&partial);
        return Err(PipelineError::io(output, e));
    }

    let final_args = transcode_args(video, output, &selection, seq.fps(), &cfg.transcoder);
    let sidecar = ExtractSidecar {
        video_path: video.display().to_string(),
        keypoints_path: keypoints_path.display().to_string(),
        output_path: output.display().to_string(),
        selection,
        transcoder: program,
        arguments: final_args,
        codec: cfg.transcoder.codec.clone(),
        quality: cfg.transcoder.quality,
        audio: AUDIO_POLICY.to_string(),
    };
    let path = sidecar_path(output);
    write(&path, sidecar.to_json())?;
    Ok(ExtractOutcome {
        sidecar,
        sidecar_path: path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(start: f64, dur: f64, whole: bool) -> WindowSelection {
        WindowSelection {
            start_frame: (start * 30.0) as usize,
            end_frame: ((start + dur) * 30.0) as usize,
            start_seconds: start,
            duration_seconds: dur,
            window_energy: 1.0,
            boundary_adjusted: false,
            whole_video: whole,
        }
    }

    fn value_after(args: &[String], flag: &str) -> Option<String> {
        args.iter()
            .position(|a| a == flag)
            .map(|i| args[i + 1].clone())
    }

    #[test]
    fn trimmed_command() {
        let args = transcode_args(
            Path::new("in.mp4"),
            Path::new("out.mp4"),
            &sel(2.0, 6.0, false),
            30.0,
            &Default::default(),
        );
        assert_eq!(
            value_after(&args, "-ss").unwrap().parse::<f64>().unwrap(),
            2.0
        );
        assert_eq!(
            value_after(&args, "-t").unwrap().parse::<f64>().unwrap(),
            6.0
        );
        assert_eq!(value_after(&args, "-crf").as_deref(), Some("23"));
        assert_eq!(value_after(&args, "-c:v").as_deref(), Some("libx264"));
        assert_eq!(value_after(&args, "-frames:v").as_deref(), Some("180"));
        assert!(args.contains(&"-an".to_string()));
        assert!(args.iter().position(|a| a == "-ss") < args.iter().position(|a| a == "-i"));
        assert_eq!(args.last().unwrap(), "out.mp4");
    }

    #[test]
    fn whole_video_has_no_trim() {
        let args = transcode_args(
            Path::new("in.mp4"),
            Path::new("out.mp4"),
            &sel(0.0, 3.0, true),
            30.0,
            &Default::default(),
        );
        for flag in ["-ss", "-t", "-frames:v"] {
            assert!(!args.iter().any(|a| a == flag), "{flag}");
        }
        assert_eq!(value_after(&args, "-crf").as_deref(), Some("23"));
    }

    #[test]
    fn paths() {
        assert_eq!(
            sidecar_path(Path::new("/a/clip.mp4")),
            Path::new("/a/clip.mp4.selection.json")
        );
        let p = partial_path(Path::new("/a/clip.mp4"));
        assert!(p.to_str().unwrap().ends_with(".mp4"));
        assert!(p
            .file_name()
            .unwrap()
            .to_str()
            .unwrap()
            .starts_with(".clip.partial-"));
    }
}
