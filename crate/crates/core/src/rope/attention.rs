use serde::{Deserialize, Serialize};

use super::frequencies::{effective_frequencies, Axis, AxisFrequencies, FrequencyLayout};
use super::RopeError;

/// Token coordinates in the latent grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GridPosition {
    pub t: u32,
    pub h: u32,
    pub w: u32,
}

impl GridPosition {
    pub fn new(t: u32, h: u32, w: u32) -> Self {
        Self { t, h, w }
    }

    pub fn get(&self, axis: Axis) -> u32 {
        match axis {
            Axis::T => self.t,
            Axis::H => self.h,
            Axis::W => self.w,
        }
    }

    pub fn offset(&self, by: GridPosition) -> Self {
        Self::new(self.t + by.t, self.h + by.h, self.w + by.w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub vector: Vec<f64>,
    pub pos: GridPosition,
}

/// Rotates each channel pair `(x[2k], x[2k+1])` by `p_a * theta_j`, where
/// pair `k` is the `j`-th pair of axis `a` in (t, h, w) order.
pub fn apply_rope(
    vector: &[f64],
    pos: GridPosition,
    freqs: &AxisFrequencies,
    layout: &FrequencyLayout,
) -> Result<Vec<f64>, RopeError> {
    if vector.len() != layout.head_dim {
        return Err(RopeError::DimensionMismatch {
            expected: layout.head_dim,
            found: vector.len(),
        });
    }
    if !freqs.matches(layout) {
        return Err(RopeError::FrequencyMismatch);
    }
    let mut out = Vec::with_capacity(vector.len());
    let mut pairs = vector.chunks_exact(2);
    for axis in Axis::ALL {
        let p = pos.get(axis) as f64;
        for &theta in freqs.get(axis) {
            let pair = pairs.next().expect("pair counts sum to head_dim / 2");
            let (sin, cos) = (p * theta).sin_cos();
            out.push(cos * pair[0] - sin * pair[1]);
            out.push(sin * pair[0] + cos * pair[1]);
        }
    }
    Ok(out)
}

/// `scores[i][j] = <R(q_i), R(k_j)> / sqrt(d)`.
pub fn attention_scores(
    queries: &[Token],
    keys: &[Token],
    layout: &FrequencyLayout,
    use_slf: bool,
) -> Result<Vec<Vec<f64>>, RopeError> {
    let freqs = effective_frequencies(layout, use_slf)?;
    let rotate = |tokens: &[Token]| -> Result<Vec<Vec<f64>>, RopeError> {
        tokens
            .iter()
            .map(|tok| apply_rope(&tok.vector, tok.pos, &freqs, layout))
            .collect()
    };
    let q = rotate(queries)?;
    let k = rotate(keys)?;
    let scale = (layout.head_dim as f64).sqrt().recip();
    Ok(q.iter()
        .map(|qi| {
            k.iter()
                .map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale)
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rope::frequencies::{base_frequencies, AxisPairs};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn origin_is_identity() {
        let layout = FrequencyLayout::new(32).unwrap();
        let freqs = base_frequencies(&layout).unwrap();
        let v: Vec<f64> = (0..32).map(|i| i as f64 - 7.5).collect();
        assert_eq!(
            apply_rope(&v, GridPosition::default(), &freqs, &layout).unwrap(),
            v
        );
    }

    #[test]
    fn quarter_turn() {
        let layout = FrequencyLayout::with_pairs(2, AxisPairs { t: 1, h: 0, w: 0 }).unwrap();
        let freqs = AxisFrequencies {
            t: vec![FRAC_PI_2],
            h: vec![],
            w: vec![],
        };
        let out = apply_rope(&[1.0, 0.0], GridPosition::new(1, 0, 0), &freqs, &layout).unwrap();
        assert!(out[0].abs() < 1e-16);
        assert!((out[1] - 1.0).abs() < 1e-16);
    }

    #[test]
    fn wrong_dimension() {
        let layout = FrequencyLayout::new(8).unwrap();
        let freqs = base_frequencies(&layout).unwrap();
        assert_eq!(
            apply_rope(&[0.0; 6], GridPosition::default(), &freqs, &layout),
            Err(RopeError::DimensionMismatch {
                expected: 8,
                found: 6
            })
        );
        let q = [Token {
            vector: vec![0.0; 8],
            pos: GridPosition::default(),
        }];
        let k = [Token {
            vector: vec![0.0; 10],
            pos: GridPosition::default(),
        }];
        assert!(attention_scores(&q, &k, &layout, true).is_err());
    }

    #[test]
    fn h_offset_closed_form() {
        // <R(p)q, R(p+dh)k> = sum over h pairs of q^T R(dh * theta) k, plus
        // plain dot products on the unrotated t and w pairs.
        let layout = FrequencyLayout::new(32).unwrap();
        let freqs = base_frequencies(&layout).unwrap();
        let q: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let k: Vec<f64> = (0..32).map(|i| ((i * 3) % 7) as f64 - 3.0).collect();
        let dh = 5u32;
        let p = GridPosition::new(2, 3, 4);
        let two_sided = attention_scores(
            &[Token {
                vector: q.clone(),
                pos: p,
            }],
            &[Token {
                vector: k.clone(),
                pos: p.offset(GridPosition::new(0, dh, 0)),
            }],
            &layout,
            false,
        )
        .unwrap()[0][0];

        let t_pairs = layout.pair_counts.t;
        let mut closed = 0.0;
        for pair in 0..16 {
            let (q0, q1, k0, k1) = (q[2 * pair], q[2 * pair + 1], k[2 * pair], k[2 * pair + 1]);
            let angle = if (t_pairs..t_pairs + layout.pair_counts.h).contains(&pair) {
                dh as f64 * freqs.h[pair - t_pairs]
            } else {
                0.0
            };
            let (s, c) = angle.sin_cos();
            closed += q0 * (c * k0 - s * k1) + q1 * (s * k0 + c * k1);
        }
        closed /= 32f64.sqrt();
        assert!(
            (two_sided - closed).abs() < 1e-12,
            "{two_sided} vs {closed}"
        );
    }

    proptest! {
        #[test]
        fn rotation_preserves_norm(
            v in proptest::collection::vec(-10.0..10.0f64, 48),
            t in 0u32..200, h in 0u32..200, w in 0u32..200,
        ) {
            let layout = FrequencyLayout::new(48).unwrap();
            let freqs = base_frequencies(&layout).unwrap();
            let out = apply_rope(&v, GridPosition::new(t, h, w), &freqs, &layout).unwrap();
            prop_assert!((norm(&out) - norm(&v)).abs() <= 1e-12 * norm(&v).max(1.0));
        }

        #[test]
        fn scores_depend_only_on_relative_position(
            q in proptest::collection::vec(-1.0..1.0f64, 24),
            k in proptest::collection::vec(-1.0..1.0f64, 24),
            a in (0u32..20, 0u32..20, 0u32..20),
            b in (0u32..20, 0u32..20, 0u32..20),
            d in (0u32..50, 0u32..50, 0u32..50),
            slf in any::<bool>(),
        ) {
            let layout = FrequencyLayout::new(24).unwrap();
            let pa = GridPosition::new(a.0, a.1, a.2);
            let pb = GridPosition::new(b.0, b.1, b.2);
            let off = GridPosition::new(d.0, d.1, d.2);
            let s0 = attention_scores(&[Token { vector: q.clone(), pos: pa }], &[Token { vector: k.clone(), pos: pb }], &layout, slf).unwrap();
            let s1 = attention_scores(&[Token { vector: q, pos: pa.offset(off) }], &[Token { vector: k, pos: pb.offset(off) }], &layout, slf).unwrap();
            prop_assert!((s0[0][0] - s1[0][0]).abs() <= 1e-10);
        }
    }

    #[test]
    fn zero_space_factor_matches_plain_rope_exactly() {
        let mut layout = FrequencyLayout::new(32).unwrap();
        layout.space_scale_factor = 0.0;
        let toks: Vec<Token> = (0..4)
            .map(|i| Token {
                vector: (0..32).map(|c| ((c + i) as f64).sin()).collect(),
                pos: GridPosition::new(i, 2 * i, 3 * i),
            })
            .collect();
        assert_eq!(
            attention_scores(&toks, &toks, &layout, true).unwrap(),
            attention_scores(&toks, &toks, &layout, false).unwrap()
        );
    }
}
