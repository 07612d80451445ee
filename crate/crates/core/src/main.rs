use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use motionclip::keypoints::clean_sequence;
use motionclip::metrics::{pck_with, PckParams, DEFAULT_PCK_ALPHA};
use motionclip::pipeline::{
    load_keypoints, run_analyze, run_batch, run_eval, run_extract, run_select, selection_json,
    AnalyzeOutputs, BatchMode, ConfigOverrides, PipelineConfig, PipelineError,
};
use motionclip::rope::{self, AxisPairs, FrequencyLayout};

#[derive(Parser)]
#[command(
    name = "motionclip",
    version,
    about = "Find and cut the most motion-rich window of a keypoint-annotated video"
)]
struct Cli {
    /// TOML file with pipeline settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct PipelineFlags {
    #[arg(long)]
    joint_index: Option<usize>,
    #[arg(long)]
    window_seconds: Option<f64>,
    #[arg(long)]
    peak_threshold_frames: Option<usize>,
    #[arg(long)]
    boundary_margin_frames: Option<usize>,
    #[arg(long)]
    scale_min: Option<u32>,
    #[arg(long)]
    scale_max: Option<u32>,
    #[arg(long)]
    scale_step: Option<u32>,
    #[arg(long)]
    morlet_omega0: Option<f64>,
    #[arg(long)]
    conf_min: Option<f64>,
    #[arg(long)]
    outlier_factor: Option<f64>,
    #[arg(long)]
    codec: Option<String>,
    /// Constant rate factor for the re-encode.
    #[arg(long)]
    quality: Option<u32>,
    #[arg(long)]
    workers: Option<usize>,
}

impl From<PipelineFlags> for ConfigOverrides {
    fn from(f: PipelineFlags) -> Self {
        ConfigOverrides {
            joint_index: f.joint_index,
            window_seconds: f.window_seconds,
            peak_threshold_frames: f.peak_threshold_frames,
            boundary_margin_frames: f.boundary_margin_frames,
            scale_min: f.scale_min,
            scale_max: f.scale_max,
            scale_step: f.scale_step,
            morlet_omega0: f.morlet_omega0,
            conf_min: f.conf_min,
            outlier_factor: f.outlier_factor,
            codec: f.codec,
            quality: f.quality,
            workers: f.workers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Interpolate missing joints and replace outliers.
    Clean {
        keypoints: PathBuf,
        /// Cleaned document; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cleaning report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Compute velocity and wavelet energy.
    Analyze {
        keypoints: PathBuf,
        /// Energy CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        velocity_csv: Option<PathBuf>,
        /// SVG plot of raw and filtered energy with the selected window.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Choose the highest-energy window.
    SelectWindow {
        keypoints: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Select a window and re-encode it with the external transcoder.
    Extract {
        video: PathBuf,
        keypoints: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Process a newline-delimited manifest.
    Batch {
        manifest: PathBuf,
        /// Report JSON; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write selection documents instead of clips.
        #[arg(long)]
        select_only: bool,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Compare generated frames against reference frames.
    Eval {
        generated: PathBuf,
        reference: PathBuf,
        #[arg(long, requires = "gt_keypoints")]
        pred_keypoints: Option<PathBuf>,
        #[arg(long, requires = "pred_keypoints")]
        gt_keypoints: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PCK_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        per_frame_csv: Option<PathBuf>,
    },
    /// PCK between two keypoint documents.
    EvalPck {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PCK_ALPHA)]
        alpha: f64,
    },
    /// Rotary embedding utilities.
    Rope {
        #[command(subcommand)]
        command: RopeCommand,
    },
}

#[derive(Subcommand)]
enum RopeCommand {
    /// Run randomized invariant checks.
    Selfcheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
    /// Per-axis frequencies before and after low-frequency scaling, as CSV.
    DumpFreqs {
        #[arg(long, default_value_t = 128)]
        head_dim: usize,
        /// Pair counts as t,h,w; defaults to the standard split.
        #[arg(long, value_parser = parse_pairs)]
        pairs: Option<AxisPairs>,
        #[arg(long)]
        base: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        motion_scale: Option<f64>,
        #[arg(long)]
        space_scale_factor: Option<f64>,
    },
}

fn parse_pairs(s: &str) -> Result<AxisPairs, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [t, h, w] => Ok(AxisPairs { t, h, w }),
        _ => Err("expected three comma-separated counts".into()),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| PipelineError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| PipelineError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn base_config(path: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = path {
        cfg.apply(&ConfigOverrides::from_toml_file(p)?);
    }
    Ok(cfg)
}

fn resolve(base: &PipelineConfig, flags: PipelineFlags) -> Result<PipelineConfig, PipelineError> {
    let cfg = base.clone().with(&flags.into());
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let base = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Clean {
            keypoints,
            out,
            report,
            flags,
        } => {
            let cfg = resolve(&base, flags)?;
            let seq = load_keypoints(&keypoints)?;
            let (cleaned, rep) =
                clean_sequence(&seq, cfg.cleaning).map_err(|e| PipelineError::Input {
                    path: keypoints.clone(),
                    message: e.to_string(),
                })?;
            info!(
                "{}: {} interpolated, {} outliers",
                keypoints.display(),
                rep.interpolated_count,
                rep.outlier_count
            );
            emit(out.as_deref(), &cleaned.to_json())?;
            if let Some(p) = report {
                emit(
                    Some(&p),
                    &serde_json::to_string_pretty(&rep).expect("report serializes"),
                )?;
            }
        }
        Command::Analyze {
            keypoints,
            out,
            velocity_csv,
            plot,
            flags,
        } => {
            let cfg = resolve(&base, flags)?;
            let outputs = AnalyzeOutputs {
                energy_csv: out.clone(),
                velocity_csv,
                plot_svg: plot,
            };
            let analysis = run_analyze(&keypoints, &cfg, &outputs)?;
            if out.is_none() {
                emit(None, &analysis.energy.to_csv())?;
            }
        }
        Command::SelectWindow {
            keypoints,
            out,
            flags,
        } => {
            let cfg = resolve(&base, flags)?;
            let sel = run_select(&keypoints, &cfg)?;
            emit(out.as_deref(), &(selection_json(&sel) + "\n"))?;
        }
        Command::Extract {
            video,
            keypoints,
            output,
            flags,
        } => {
            let cfg = resolve(&base, flags)?;
            let outcome = run_extract(&video, &keypoints, &output, &cfg)?;
            info!(
                "wrote {} and {}",
                output.display(),
                outcome.sidecar_path.display()
            );
        }
        Command::Batch {
            manifest,
            report,
            select_only,
            flags,
        } => {
            let mode = if select_only {
                BatchMode::SelectOnly
            } else {
                BatchMode::Extract
            };
            let rep = run_batch(&manifest, &base, &flags.into(), mode)?;
            emit(report.as_deref(), &(rep.to_json() + "\n"))?;
            for e in rep.entries.iter().filter(|e| !e.ok) {
                error!(
                    "manifest line {}: {}",
                    e.line,
                    e.error.as_deref().unwrap_or("")
                );
            }
            rep.status()?;
        }
        Command::Eval {
            generated,
            reference,
            pred_keypoints,
            gt_keypoints,
            alpha,
            out,
            per_frame_csv,
        } => {
            let kps = pred_keypoints.as_deref().zip(gt_keypoints.as_deref());
            let params = PckParams {
                alpha,
                ..PckParams::default()
            };
            let mut report = run_eval(&generated, &reference, kps, params)?;
            if let Some(p) = per_frame_csv {
                emit(Some(&p), &report.per_frame_csv())?;
            } else {
                report.per_frame = None;
            }
            emit(out.as_deref(), &(report.to_json() + "\n"))?;
        }
        Command::EvalPck { pred, gt, alpha } => {
            let p = load_keypoints(&pred)?;
            let g = load_keypoints(&gt)?;
            let params = PckParams {
                alpha,
                ..PckParams::default()
            };
            let value = pck_with(&p, &g, params).map_err(|e| PipelineError::Input {
                path: pred.clone(),
                message: e.to_string(),
            })?;
            let doc = serde_json::json!({ "pck": value, "alpha": alpha });
            emit(
                None,
                &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
            )?;
        }
        Command::Rope { command } => run_rope(command)?,
    }
    Ok(())
}

fn run_rope(command: RopeCommand) -> Result<(), PipelineError> {
    match command {
        RopeCommand::Selfcheck { seed, cases } => {
            let report = rope::selfcheck::run(seed, cases);
            emit(None, &report.render())?;
            if !report.passed() {
                return Err(PipelineError::Config("rope self-check failed".into()));
            }
        }
        RopeCommand::DumpFreqs {
            head_dim,
            pairs,
            base,
            alpha,
            motion_scale,
            space_scale_factor,
        } => {
            let bad = |e: rope::RopeError| PipelineError::Config(e.to_string());
            let mut layout = match pairs {
                Some(p) => FrequencyLayout::with_pairs(head_dim, p),
                None => FrequencyLayout::new(head_dim),
            }
            .map_err(bad)?;
            if let Some(v) = base {
                layout.base = v;
            }
            if let Some(v) = alpha {
                layout.alpha = v;
            }
            if let Some(v) = motion_scale {
                layout.motion_scale = v;
            }
            if let Some(v) = space_scale_factor {
                layout.space_scale_factor = v;
            }
            emit(None, &rope::frequency_table_csv(&layout).map_err(bad)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
