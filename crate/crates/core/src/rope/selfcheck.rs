//! Randomized invariant checks for the rotary kernel, run by `rope selfcheck`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    apply_rope, attention_scores, base_frequencies, compose_latents, slf_scale, split_composed,
    Axis, AxisPairs, FrequencyLayout, GridPosition, LatentBlock, LatentRole, LatentShape, Token,
    COMPOSED_CHANNELS,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "[{tag}] {} ({} cases): {}\n",
                c.name, c.cases, c.detail
            ));
        }
        out
    }
}

fn random_layout(rng: &mut ChaCha8Rng, head_dim: usize) -> FrequencyLayout {
    let half = head_dim / 2;
    let h = rng.gen_range(0..=half);
    let w = rng.gen_range(0..=half - h);
    let mut layout = FrequencyLayout::with_pairs(
        head_dim,
        AxisPairs {
            t: half - h - w,
            h,
            w,
        },
    )
    .expect("pair counts sum to half the head dim");
    layout.base = rng.gen_range(100.0..20_000.0);
    layout.motion_scale = rng.gen_range(0.5..3.0);
    layout.space_scale_factor = rng.gen_range(0.0..0.1);
    layout
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_pos(rng: &mut ChaCha8Rng, bound: u32) -> GridPosition {
    GridPosition::new(
        rng.gen_range(0..bound),
        rng.gen_range(0..bound),
        rng.gen_range(0..bound),
    )
}

pub fn run(seed: u64, cases: usize) -> SelfCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = [8usize, 32, 128];

    let mut worst_shift: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut identity_ok = true;
    let mut locality_ok = true;
    let mut temporal_ok = true;

    for case in 0..cases {
        let head_dim = dims[case % dims.len()];
        let mut layout = random_layout(&mut rng, head_dim);

        let offset = random_pos(&mut rng, 64);
        let make = |rng: &mut ChaCha8Rng| Token {
            vector: random_vec(rng, head_dim),
            pos: random_pos(rng, 32),
        };
        let q: Vec<Token> = (0..3).map(|_| make(&mut rng)).collect();
        let k: Vec<Token> = (0..3).map(|_| make(&mut rng)).collect();
        let shift = |toks: &[Token]| -> Vec<Token> {
            toks.iter()
                .map(|t| Token {
                    vector: t.vector.clone(),
                    pos: t.pos.offset(offset),
                })
                .collect()
        };
        for use_slf in [false, true] {
            let a = attention_scores(&q, &k, &layout, use_slf).expect("valid inputs");
            let b =
                attention_scores(&shift(&q), &shift(&k), &layout, use_slf).expect("valid inputs");
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    worst_shift = worst_shift.max((x - y).abs());
                }
            }
        }

        let base = base_frequencies(&layout).expect("valid layout");
        let scaled = slf_scale(&layout, &base).expect("matching layout");
        temporal_ok &= scaled.freqs.t == base.t;
        let changed = Axis::ALL
            .iter()
            .flat_map(|&a| base.get(a).iter().zip(scaled.freqs.get(a)))
            .filter(|(b, s)| b != s)
            .count();
        let expected = if scaled.gamma == 1.0 {
            0
        } else {
            scaled.low_h + scaled.low_w
        };
        locality_ok &= changed == expected;
        for axis in [Axis::H, Axis::W] {
            let n = base.get(axis).len();
            let low = layout.low_count(axis);
            for j in n - low..n {
                let ratio = scaled.freqs.get(axis)[j] / base.get(axis)[j];
                locality_ok &= (ratio - scaled.gamma).abs() <= 1e-15 * scaled.gamma;
            }
        }

        let v = random_vec(&mut rng, head_dim);
        let rotated = apply_rope(&v, random_pos(&mut rng, 500), &scaled.freqs, &layout)
            .expect("dimension matches");
        let n0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n1 = rotated.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst_norm = worst_norm.max((n0 - n1).abs());

        layout.space_scale_factor = 0.0;
        let plain = attention_scores(&q, &k, &layout, false).expect("valid inputs");
        let slf = attention_scores(&q, &k, &layout, true).expect("valid inputs");
        identity_ok &= plain == slf;
    }

    let mut composition_ok = true;
    for _ in 0..cases.min(50) {
        let t = rng.gen_range(1..=9);
        let h = rng.gen_range(1..=16);
        let w = rng.gen_range(1..=16);
        let full = LatentShape::new(16, t, h, w);
        let block = |rng: &mut ChaCha8Rng, role, shape: LatentShape| {
            LatentBlock::new(role, shape, random_vec(rng, shape.len())).expect("valid block")
        };
        let noisy = block(&mut rng, LatentRole::Noisy, full);
        let pose = block(&mut rng, LatentRole::Pose, full);
        let reference = block(
            &mut rng,
            LatentRole::Reference,
            LatentShape { frames: 1, ..full },
        );
        let out = compose_latents(&noisy, &pose, &reference).expect("matching shapes");
        let parts = split_composed(&out).expect("composed block");
        let mask_ok = (0..4).all(|c| {
            (0..t).all(|f| {
                (0..h).all(|y| {
                    (0..w).all(|x| out.get(0, 48 + c, f, y, x) == if f == 0 { 1.0 } else { 0.0 })
                })
            })
        });
        composition_ok &= out.shape().channels == COMPOSED_CHANNELS
            && mask_ok
            && parts.noisy == noisy
            && parts.pose == pose
            && parts.reference == reference;
    }

    let outcome = |name, passed, detail: String| CheckOutcome {
        name,
        passed,
        cases,
        detail,
    };
    SelfCheckReport {
        seed,
        checks: vec![
            outcome(
                "translation invariance",
                worst_shift <= 1e-10,
                format!("max |dscore| = {worst_shift:.3e} (limit 1e-10)"),
            ),
            outcome(
                "norm preservation",
                worst_norm <= 1e-12,
                format!("max |dnorm| = {worst_norm:.3e} (limit 1e-12)"),
            ),
            outcome(
                "zero space factor identity",
                identity_ok,
                "scaled scores equal plain scores bit-for-bit".into(),
            ),
            outcome(
                "low-frequency locality",
                locality_ok,
                "only the last round(alpha * c) spatial entries change, each by gamma".into(),
            ),
            outcome(
                "temporal axis untouched",
                temporal_ok,
                "temporal frequencies bit-identical".into(),
            ),
            outcome(
                "latent composition",
                composition_ok,
                "52 channels, frame-0 mask, inputs recovered by slicing".into(),
            ),
        ],
    }
}
