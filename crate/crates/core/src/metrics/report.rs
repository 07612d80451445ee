use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{l1, pck_with, psnr, ssim, FrameImage, MetricError, PckParams};
use crate::keypoints::KeypointSequence;

/// Infinite PSNR is written as the string `"inf"`.
mod decibels {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            Repr::Tag("inf".into()).serialize(s)
        } else {
            Repr::Finite(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(v),
            Repr::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "unexpected PSNR value {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub name: String,
    #[serde(with = "decibels")]
    pub psnr: f64,
    pub ssim: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(with = "decibels")]
    pub psnr: f64,
    pub ssim: f64,
    pub l1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pck: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_frame: Option<Vec<FrameMetrics>>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric report serializes")
    }

    /// CSV with header `frame,psnr,ssim,l1`; empty when there is no breakdown.
    pub fn per_frame_csv(&self) -> String {
        let mut out = String::from("frame,psnr,ssim,l1\n");
        for f in self.per_frame.iter().flatten() {
            out.push_str(&format!("{},{},{},{}\n", f.name, f.psnr, f.ssim, f.l1));
        }
        out
    }
}

/// Scores named frame pairs (generated, reference) and, when given,
/// predicted against ground-truth keypoints. Frames are scored in
/// parallel and aggregated in input order.
pub fn evaluate_frames(
    pairs: &[(String, FrameImage, FrameImage)],
    keypoints: Option<(&KeypointSequence, &KeypointSequence)>,
    pck_params: PckParams,
) -> Result<MetricReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::NoFrames);
    }
    let per_frame = pairs
        .par_iter()
        .map(|(name, generated, reference)| {
            Ok(FrameMetrics {
                name: name.clone(),
                psnr: psnr(generated, reference)?,
                ssim: ssim(generated, reference)?,
                l1: l1(generated, reference)?,
            })
        })
        .collect::<Result<Vec<_>, MetricError>>()?;

    let n = per_frame.len() as f64;
    let mean = |f: fn(&FrameMetrics) -> f64| per_frame.iter().map(f).sum::<f64>() / n;
    let pck = keypoints
        .map(|(pred, gt)| pck_with(pred, gt, pck_params))
        .transpose()?;

    Ok(MetricReport {
        psnr: mean(|f| f.psnr),
        ssim: mean(|f| f.ssim),
        l1: mean(|f| f.l1),
        pck,
        per_frame: Some(per_frame),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_are_means_and_round_trip() {
        let a = FrameImage::filled(12, 12, 1, 0.0).unwrap();
        let b = FrameImage::filled(12, 12, 1, 0.5).unwrap();
        let pairs = vec![
            ("f0".to_string(), a.clone(), b.clone()),
            ("f1".to_string(), a.clone(), a.clone()),
        ];
        let report = evaluate_frames(&pairs, None, PckParams::default()).unwrap();
        assert_eq!(report.psnr, f64::INFINITY);
        assert_eq!(report.l1, 0.25);
        let frames = report.per_frame.as_ref().unwrap();
        assert_eq!(frames[0].name, "f0");
        assert_eq!(report.ssim, (frames[0].ssim + frames[1].ssim) / 2.0);
        let json = report.to_json();
        assert!(json.contains("\"inf\""));
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(report.per_frame_csv().lines().count(), 3);
    }

    #[test]
    fn empty_and_mismatched() {
        assert_eq!(
            evaluate_frames(&[], None, PckParams::default()),
            Err(MetricError::NoFrames)
        );
        let a = FrameImage::filled(12, 12, 1, 0.0).unwrap();
        let b = FrameImage::filled(12, 13, 1, 0.0).unwrap();
        assert!(evaluate_frames(&[("x".into(), a, b)], None, PckParams::default()).is_err());
    }
}
