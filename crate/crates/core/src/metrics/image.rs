use std::path::Path;

use super::MetricError;

/// Interleaved image with values in `[0, 1]`; 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FrameImage {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, MetricError> {
        if width == 0 || height == 0 {
            return Err(MetricError::InvalidImage(
                "dimensions must be positive".into(),
            ));
        }
        if channels != 1 && channels != 3 {
            return Err(MetricError::InvalidImage(format!(
                "{channels} channels (need 1 or 3)"
            )));
        }
        if data.len() != width * height * channels {
            return Err(MetricError::InvalidImage(format!(
                "{} values for {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(MetricError::InvalidImage(
                "values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        channels: usize,
        value: f64,
    ) -> Result<Self, MetricError> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// 8-bit samples scaled by 1/255.
    pub fn from_u8(
        width: usize,
        height: usize,
        channels: usize,
        bytes: &[u8],
    ) -> Result<Self, MetricError> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    /// Loads an 8-bit PNG or PPM/PGM. Grayscale stays single-channel, everything
    /// else is converted to RGB (alpha dropped).
    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let img = ::image::open(path)
            .map_err(|e| MetricError::InvalidImage(format!("{}: {e}", path.display())))?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            ::image::DynamicImage::ImageLuma8(g) => Self::from_u8(w, h, 1, g.as_raw()),
            other => Self::from_u8(w, h, 3, other.to_rgb8().as_raw()),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    /// One channel as a row-major plane.
    pub fn plane(&self, channel: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(channel)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub(crate) fn check_same_shape(&self, other: &FrameImage) -> Result<(), MetricError> {
        if self.shape() != other.shape() {
            return Err(MetricError::ShapeMismatch(self.shape(), other.shape()));
        }
        Ok(())
    }
}
