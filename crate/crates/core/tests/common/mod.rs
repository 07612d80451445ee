#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use motionclip::keypoints::{Joint, KeypointSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A near-static joint with sub-pixel noise and a sinusoidal burst over
/// `burst` (frame range) at `freq` Hz.
pub fn burst_sequence(
    seconds: f64,
    fps: f64,
    burst: std::ops::Range<usize>,
    freq: f64,
    seed: u64,
) -> KeypointSequence {
    let n = (seconds * fps).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let start = burst.start as f64 / fps;
    let frames = (0..n)
        .map(|i| {
            let t = i as f64 / fps;
            let b = if burst.contains(&i) {
                3.0 * (TAU * freq * (t - start)).sin()
            } else {
                0.0
            };
            vec![
                Joint::new(
                    320.0 + b + noise.sample(&mut rng),
                    240.0 + noise.sample(&mut rng),
                    0.9,
                ),
                Joint::new(300.0, 200.0, 0.9),
            ]
        })
        .collect();
    KeypointSequence::new(fps, 640, 480, frames).unwrap()
}

pub fn write_seq(dir: &Path, name: &str, seq: &KeypointSequence) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, seq.to_json()).unwrap();
    p
}

/// Shell script standing in for the transcoder: logs its arguments, one per
/// line, and writes a dummy file at the last argument. With `fail` it
/// prints to stderr and exits 1 after creating the output.
pub fn fake_transcoder(dir: &Path, fail: bool) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let log = dir.join("transcoder.log");
    let body = if fail {
        "for a; do last=$a; done\necho partial > \"$last\"\necho 'boom: bad codec' >&2\nexit 1\n"
            .to_string()
    } else {
        format!(
            "for a; do echo \"$a\" >> '{}'; last=$a; done\necho clip > \"$last\"\n",
            log.display()
        )
    };
    let p = dir.join(if fail {
        "bad-transcoder.sh"
    } else {
        "transcoder.sh"
    });
    std::fs::write(&p, format!("#!/bin/sh\n{body}")).unwrap();
    std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
    p
}
