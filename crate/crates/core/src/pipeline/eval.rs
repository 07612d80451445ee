use std::collections::BTreeSet;
use std::path::Path;

use super::analyze::load_keypoints;
use super::error::PipelineError;
use crate::metrics::{evaluate_frames, FrameImage, MetricReport, PckParams};

const FRAME_EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

fn frame_names(dir: &Path) -> Result<BTreeSet<String>, PipelineError> {
    let rd = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut names = BTreeSet::new();
    for entry in rd {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let path = entry.path();
        let is_frame = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_frame && path.is_file() {
            if let Some(n) = path.file_name().and_then(|n| n.to_str()) {
                names.insert(n.to_string());
            }
        }
    }
    Ok(names)
}

/// Scores same-named frames in two directories, plus PCK when both keypoint
/// documents are supplied.
pub fn run_eval(
    generated: &Path,
    reference: &Path,
    keypoints: Option<(&Path, &Path)>,
    pck_params: PckParams,
) -> Result<MetricReport, PipelineError> {
    let gen_names = frame_names(generated)?;
    let ref_names = frame_names(reference)?;
    if let Some(n) = gen_names.symmetric_difference(&ref_names).next() {
        let dir = if gen_names.contains(n) {
            reference
        } else {
            generated
        };
        return Err(PipelineError::input(dir, format!("missing frame {n}")));
    }
    if gen_names.is_empty() {
        return Err(PipelineError::input(generated, "no PNG/PPM frames found"));
    }
    let load = |p: &Path| FrameImage::load(p).map_err(|e| PipelineError::input(p, e));
    let mut pairs = Vec::with_capacity(gen_names.len());
    for name in &gen_names {
        pairs.push((
            name.clone(),
            load(&generated.join(name))?,
            load(&reference.join(name))?,
        ));
    }
    let kps = match keypoints {
        Some((p, g)) => Some((load_keypoints(p)?, load_keypoints(g)?)),
        None => None,
    };
    evaluate_frames(&pairs, kps.as_ref().map(|(p, g)| (p, g)), pck_params)
        .map_err(|e| PipelineError::input(generated, e))
}
