use super::{FrameImage, MetricError};

pub fn mse(a: &FrameImage, b: &FrameImage) -> Result<f64, MetricError> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)` for unit peak; `f64::INFINITY` for identical images.
pub fn psnr(a: &FrameImage, b: &FrameImage) -> Result<f64, MetricError> {
    let m = mse(a, b)?;
    if m == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / m).log10())
    }
}

/// Mean absolute difference over all pixels and channels.
pub fn l1(a: &FrameImage, b: &FrameImage) -> Result<f64, MetricError> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_closed_form() {
        let zero = FrameImage::filled(8, 6, 3, 0.0).unwrap();
        let half = FrameImage::filled(8, 6, 3, 0.5).unwrap();
        let one = FrameImage::filled(8, 6, 3, 1.0).unwrap();
        assert_eq!(psnr(&zero, &zero).unwrap(), f64::INFINITY);
        assert_eq!(l1(&half, &half).unwrap(), 0.0);
        assert_eq!(mse(&zero, &half).unwrap(), 0.25);
        assert!((psnr(&zero, &half).unwrap() - 6.020599913279624).abs() < 1e-12);
        assert_eq!(l1(&zero, &one).unwrap(), 1.0);
        let other = FrameImage::filled(6, 8, 3, 0.0).unwrap();
        assert!(matches!(
            psnr(&zero, &other),
            Err(MetricError::ShapeMismatch(..))
        ));
        assert!(l1(&zero, &other).is_err());
    }

    fn image() -> impl Strategy<Value = FrameImage> {
        proptest::collection::vec(0.0..=1.0f64, 5 * 4)
            .prop_map(|v| FrameImage::new(5, 4, 1, v).unwrap())
    }

    proptest! {
        #[test]
        fn symmetric_and_zero_iff_equal(a in image(), b in image()) {
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
            prop_assert_eq!(l1(&a, &b).unwrap(), l1(&b, &a).unwrap());
            let same = a == b;
            prop_assert_eq!(l1(&a, &b).unwrap() == 0.0, same);
            prop_assert_eq!(psnr(&a, &b).unwrap().is_infinite(), same);
        }
    }
}
