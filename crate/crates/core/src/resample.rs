//! Separable resampling with MATLAB `imresize` conventions: half-pixel
//! coordinate mapping, Keys cubic with `a = -0.5`, and a kernel stretched by
//! `1/scale` when antialiasing a downscale. Borders are clamped to the edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::PlanarImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleKernel {
    Nearest,
    Bilinear,
    Bicubic,
}

impl ResampleKernel {
    /// Half-width of the unscaled kernel in source pixels.
    pub fn support(self) -> f64 {
        match self {
            ResampleKernel::Nearest => 0.5,
            ResampleKernel::Bilinear => 1.0,
            ResampleKernel::Bicubic => 2.0,
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            // half-open so that exactly one tap fires at integer spacing
            ResampleKernel::Nearest => {
                if (-0.5..0.5).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            ResampleKernel::Bilinear => (1.0 - x.abs()).max(0.0),
            ResampleKernel::Bicubic => cubic(x),
        }
    }
}

/// Keys cubic convolution kernel with `a = -0.5`.
fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    let ax2 = ax * ax;
    let ax3 = ax2 * ax;
    if ax <= 1.0 {
        1.5 * ax3 - 2.5 * ax2 + 1.0
    } else if ax <= 2.0 {
        -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    } else {
        0.0
    }
}

/// Source taps for one output coordinate. Indices are already clamped, so a
/// border index may appear more than once.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub taps: Vec<(usize, f64)>,
}

impl Contribution {
    pub fn weight_sum(&self) -> f64 {
        self.taps.iter().map(|&(_, w)| w).sum()
    }
}

/// Normalized contributions for resampling an axis of `in_len` samples to
/// `out_len` samples.
pub fn axis_contributions(
    in_len: usize,
    out_len: usize,
    kernel: ResampleKernel,
    antialias: bool,
) -> Vec<Contribution> {
    let scale = out_len as f64 / in_len as f64;
    let shrink = antialias && scale < 1.0;
    let mut width = 2.0 * kernel.support();
    if shrink {
        width /= scale;
    }
    let taps = width.ceil() as i64 + 2;
    let last = in_len as i64 - 1;

    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let left = (center - width / 2.0).floor() as i64;
            let mut raw = Vec::with_capacity(taps as usize);
            for j in left..left + taps {
                let d = center - j as f64;
                let w = if shrink {
                    scale * kernel.eval(scale * d)
                } else {
                    kernel.eval(d)
                };
                if w != 0.0 {
                    raw.push((j.clamp(0, last) as usize, w));
                }
            }
            let sum: f64 = raw.iter().map(|&(_, w)| w).sum();
            if sum == 0.0 {
                // Unreachable for the built-in kernels; fall back to the nearest sample.
                let j = (center.round() as i64).clamp(0, last) as usize;
                return Contribution {
                    taps: vec![(j, 1.0)],
                };
            }
            Contribution {
                taps: raw.into_iter().map(|(j, w)| (j, w / sum)).collect(),
            }
        })
        .collect()
}

/// Resamples every plane to `out_w x out_h`, horizontal pass first.
pub fn resize(
    img: &PlanarImage,
    out_w: usize,
    out_h: usize,
    kernel: ResampleKernel,
    antialias: bool,
) -> Result<PlanarImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be at least 1x1, got {out_w}x{out_h}"
        )));
    }
    let (w, h) = img.dims();
    let horiz = axis_contributions(w, out_w, kernel, antialias);
    let vert = axis_contributions(h, out_h, kernel, antialias);

    let mut data = Vec::with_capacity(out_w * out_h * img.channels());
    let mut tmp = vec![0.0; out_w * h];
    for plane in img.planes() {
        for y in 0..h {
            let row = &plane[y * w..(y + 1) * w];
            for (x, contrib) in horiz.iter().enumerate() {
                tmp[y * out_w + x] = contrib.taps.iter().map(|&(j, wt)| row[j] * wt).sum();
            }
        }
        for contrib in &vert {
            for x in 0..out_w {
                data.push(
                    contrib
                        .taps
                        .iter()
                        .map(|&(j, wt)| tmp[j * out_w + x] * wt)
                        .sum(),
                );
            }
        }
    }
    PlanarImage::new(out_w, out_h, img.colorspace(), data)
}

/// Region of an HR image kept before downscaling by `scale`: the largest
/// centered window whose sides are multiples of `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

pub fn hr_crop_for_scale(width: usize, height: usize, scale: usize) -> Result<CropRect> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be at least 1".into()));
    }
    if width < scale || height < scale {
        return Err(Error::TooSmall(format!(
            "{width}x{height} image cannot be downscaled by {scale}"
        )));
    }
    let (cw, ch) = (width - width % scale, height - height % scale);
    Ok(CropRect {
        x: (width - cw) / 2,
        y: (height - ch) / 2,
        width: cw,
        height: ch,
    })
}

/// Produces the LR counterpart of an HR image: center-crop to a multiple of
/// `scale`, then antialiased bicubic downscale. The result is float; callers
/// quantize when writing it out.
pub fn downscale_hr(img: &PlanarImage, scale: usize) -> Result<PlanarImage> {
    let crop = hr_crop_for_scale(img.width(), img.height(), scale)?;
    let cropped = img.crop(crop.x, crop.y, crop.width, crop.height)?;
    if scale == 1 {
        return Ok(cropped);
    }
    resize(
        &cropped,
        crop.width / scale,
        crop.height / scale,
        ResampleKernel::Bicubic,
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorSpace;

    #[test]
    fn cubic_kernel_values() {
        assert_eq!(cubic(0.0), 1.0);
        assert_eq!(cubic(1.0), 0.0);
        assert_eq!(cubic(2.0), 0.0);
        assert!((cubic(0.5) - 0.5625).abs() < 1e-15);
        assert!((cubic(1.5) + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = PlanarImage::filled(7, 5, ColorSpace::Rgb, 93.25).unwrap();
        for kernel in [
            ResampleKernel::Nearest,
            ResampleKernel::Bilinear,
            ResampleKernel::Bicubic,
        ] {
            for (w, h) in [(3, 2), (14, 10), (9, 13), (1, 1)] {
                let out = resize(&img, w, h, kernel, true).unwrap();
                assert!(
                    out.data().iter().all(|&v| (v - 93.25).abs() < 1e-12),
                    "{kernel:?}"
                );
            }
        }
    }

    #[test]
    fn single_pixel_nearest_upscale() {
        let img = PlanarImage::filled(1, 1, ColorSpace::Gray, 42.0).unwrap();
        let out = resize(&img, 2, 2, ResampleKernel::Nearest, true).unwrap();
        assert_eq!(out.dims(), (2, 2));
        assert_eq!(out.data(), &[42.0; 4]);
    }

    #[test]
    fn nearest_x2_duplicates_pixels() {
        let img = PlanarImage::new(3, 1, ColorSpace::Gray, vec![1.0, 2.0, 3.0]).unwrap();
        let out = resize(&img, 6, 1, ResampleKernel::Nearest, false).unwrap();
        assert_eq!(out.data(), &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn zero_size_rejected() {
        let img = PlanarImage::filled(2, 2, ColorSpace::Gray, 0.0).unwrap();
        assert!(resize(&img, 0, 2, ResampleKernel::Bicubic, true).is_err());
    }

    #[test]
    fn downscale_dimensions_follow_crop() {
        let img = PlanarImage::filled(101, 50, ColorSpace::Rgb, 77.0).unwrap();
        let lr = downscale_hr(&img, 4).unwrap();
        assert_eq!(lr.dims(), (25, 12));
        assert!(lr.data().iter().all(|&v| (v - 77.0).abs() < 1e-12));
        assert_eq!(
            hr_crop_for_scale(101, 50, 4).unwrap(),
            CropRect {
                x: 0,
                y: 1,
                width: 100,
                height: 48
            }
        );
        assert!(matches!(
            downscale_hr(
                &PlanarImage::filled(3, 9, ColorSpace::Gray, 0.0).unwrap(),
                4
            ),
            Err(Error::TooSmall(_))
        ));
    }
}
