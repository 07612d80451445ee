//! Command-level orchestration shared by the CLI and the batch runner.

mod analyze;
mod batch;
mod config;
mod error;
mod eval;
mod extract;
mod plot;

pub use analyze::{
    analyze_sequence, load_keypoints, run_analyze, run_select, select, selection_json, Analysis,
    AnalyzeOutputs,
};
pub use batch::{
    read_manifest, run_batch, BatchEntryResult, BatchManifestEntry, BatchMetadata, BatchMode,
    BatchReport, ManifestLine,
};
pub use config::{
    ConfigOverrides, PipelineConfig, TranscoderSettings, DEFAULT_CODEC, DEFAULT_QUALITY,
};
pub use error::{PipelineError, EXIT_INPUT, EXIT_OK, EXIT_PARTIAL_BATCH, EXIT_TRANSCODER};
pub use eval::run_eval;
pub use extract::{
    probe_frame_count, probe_program, run_extract, sidecar_path, transcode_args,
    transcoder_program, ExtractOutcome, ExtractSidecar, AUDIO_POLICY, PROBE_ENV, TRANSCODER_ENV,
};
pub use plot::energy_svg;
