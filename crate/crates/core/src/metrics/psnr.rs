use crate::error::{Error, Result};
use crate::image::PlanarImage;

use super::MetricResult;

const PEAK: f64 = 255.0;

/// Mean squared error over every sample of every channel.
pub fn mse(reference: &PlanarImage, output: &PlanarImage) -> Result<f64> {
    if !reference.same_shape(output) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            reference.width(),
            reference.height(),
            reference.channels(),
            output.width(),
            output.height(),
            output.channels()
        )));
    }
    let sum: f64 = reference
        .data()
        .iter()
        .zip(output.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.data().len() as f64)
}

/// `10 log10(255^2 / MSE)`. The peak stays 255 in float precision mode
/// because samples live on the nominal `[0, 255]` scale.
pub fn psnr(reference: &PlanarImage, output: &PlanarImage) -> Result<MetricResult> {
    let err = mse(reference, output)?;
    if err == 0.0 {
        return Ok(MetricResult::infinite("psnr"));
    }
    Ok(MetricResult::ok("psnr", 10.0 * (PEAK * PEAK / err).log10()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorSpace;
    use crate::metrics::MetricStatus;

    #[test]
    fn identical_is_infinite() {
        let a = PlanarImage::filled(4, 4, ColorSpace::Rgb, 12.0).unwrap();
        let r = psnr(&a, &a).unwrap();
        assert_eq!(r.status, MetricStatus::Infinite);
        assert_eq!(r.value, None);
        assert_eq!(r.as_f64(), f64::INFINITY);
    }

    #[test]
    fn unit_difference() {
        let a = PlanarImage::filled(5, 3, ColorSpace::Gray, 100.0).unwrap();
        let b = PlanarImage::filled(5, 3, ColorSpace::Gray, 101.0).unwrap();
        let v = psnr(&a, &b).unwrap().value.unwrap();
        assert!((v - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((v - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn shape_mismatch() {
        let a = PlanarImage::filled(5, 3, ColorSpace::Gray, 0.0).unwrap();
        let b = PlanarImage::filled(5, 3, ColorSpace::Rgb, 0.0).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::DimensionMismatch(_))));
    }
}
