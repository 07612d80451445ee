use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analyze::{run_select, selection_json};
use super::config::{ConfigOverrides, PipelineConfig};
use super::error::{read, write, PipelineError};
use super::extract::run_extract;
use crate::window::WindowSelection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchManifestEntry {
    pub video_path: PathBuf,
    pub keypoints_path: PathBuf,
    pub output_path: PathBuf,
    #[serde(default)]
    pub overrides: ConfigOverrides,
}

impl BatchManifestEntry {
    fn validate(&self) -> Result<(), String> {
        for (name, p) in [
            ("video_path", &self.video_path),
            ("keypoints_path", &self.keypoints_path),
            ("output_path", &self.output_path),
        ] {
            if p.as_os_str().is_empty() {
                return Err(format!("{name} is empty"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    Extract,
    /// Writes the selection document to `output_path` instead of a clip.
    SelectOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntryResult {
    /// 1-based manifest line.
    pub line: usize,
    pub output_path: Option<PathBuf>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<WindowSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub generated_unix_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub succeeded: usize,
    pub failed: usize,
    pub entries: Vec<BatchEntryResult>,
    /// Wall-clock data; excluded from any determinism comparison.
    pub metadata: BatchMetadata,
}

impl BatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("batch report serializes")
    }

    pub fn status(&self) -> Result<(), PipelineError> {
        if self.failed == 0 {
            Ok(())
        } else {
            Err(PipelineError::PartialBatch {
                failed: self.failed,
                total: self.entries.len(),
            })
        }
    }
}

/// Manifest lines, blank lines skipped. Lines that fail to parse are kept
/// as per-entry errors.
/// A manifest line number with its parsed entry or parse error.
pub type ManifestLine = (usize, Result<BatchManifestEntry, String>);

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestLine>, PipelineError> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| PipelineError::input(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let entry = serde_json::from_str::<BatchManifestEntry>(l)
                .map_err(|e| format!("manifest line {}: {e}", i + 1))
                .and_then(|e| e.validate().map(|_| e));
            (i + 1, entry)
        })
        .collect())
}

fn run_entry(
    entry: &BatchManifestEntry,
    base: &PipelineConfig,
    cli: &ConfigOverrides,
    mode: BatchMode,
) -> Result<WindowSelection, PipelineError> {
    let cfg = base.clone().with(&entry.overrides).with(cli);
    cfg.validate()?;
    match mode {
        BatchMode::SelectOnly => {
            let s = run_select(&entry.keypoints_path, &cfg)?;
            write(&entry.output_path, selection_json(&s))?;
            Ok(s)
        }
        BatchMode::Extract => run_extract(
            &entry.video_path,
            &entry.keypoints_path,
            &entry.output_path,
            &cfg,
        )
        .map(|o| o.sidecar.selection),
    }
}

/// Processes every manifest entry on a pool of `workers` threads. `base` is
/// defaults plus config file; per-entry overrides apply on top, then `cli`.
pub fn run_batch(
    manifest: &Path,
    base: &PipelineConfig,
    cli: &ConfigOverrides,
    mode: BatchMode,
) -> Result<BatchReport, PipelineError> {
    let entries = read_manifest(manifest)?;
    let global = base.clone().with(cli);
    global.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(global.workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let results: Vec<BatchEntryResult> = pool.install(|| {
        entries
            .par_iter()
            .map(|(line, entry)| {
                let outcome = entry
                    .as_ref()
                    .map_err(|e| e.clone())
                    .and_then(|e| run_entry(e, base, cli, mode).map_err(|err| err.to_string()));
                BatchEntryResult {
                    line: *line,
                    output_path: entry.as_ref().ok().map(|e| e.output_path.clone()),
                    ok: outcome.is_ok(),
                    selection: outcome.as_ref().ok().copied(),
                    error: outcome.err(),
                }
            })
            .collect()
    });

    let succeeded = results.iter().filter(|r| r.ok).count();
    Ok(BatchReport {
        succeeded,
        failed: results.len() - succeeded,
        entries: results,
        metadata: BatchMetadata {
            generated_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis()),
        },
    })
}
