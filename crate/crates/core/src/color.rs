//! ITU-R BT.601 studio-swing YCbCr, the convention behind MATLAB's
//! `rgb2ycbcr` and therefore behind most published Y-channel SR numbers.
//!
//! Inputs and outputs are on the `[0, 255]` scale; no quantization happens
//! here.

use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};

const OFFSET: [f64; 3] = [16.0, 128.0, 128.0];

/// Rows map normalized RGB (`[0, 1]`) to the YCbCr excursion.
const FORWARD: [[f64; 3]; 3] = [
    [65.481, 128.553, 24.966],
    [-37.797, -74.203, 112.0],
    [112.0, -93.786, -18.214],
];

#[inline]
pub fn rgb_pixel_to_ycbcr(r: f64, g: f64, b: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, (row, off)) in out.iter_mut().zip(FORWARD.iter().zip(OFFSET)) {
        *o = off + (row[0] * r + row[1] * g + row[2] * b) / 255.0;
    }
    out
}

/// Luma only; identical to the first component of [`rgb_pixel_to_ycbcr`].
#[inline]
pub fn rgb_pixel_to_y(r: f64, g: f64, b: f64) -> f64 {
    let row = FORWARD[0];
    OFFSET[0] + (row[0] * r + row[1] * g + row[2] * b) / 255.0
}

fn inverse() -> &'static Matrix3<f64> {
    static INV: OnceLock<Matrix3<f64>> = OnceLock::new();
    INV.get_or_init(|| {
        let m = Matrix3::from_fn(|i, j| FORWARD[i][j] / 255.0);
        m.try_inverse().expect("BT.601 matrix is invertible")
    })
}

pub fn rgb_to_ycbcr(img: &PlanarImage) -> Result<PlanarImage> {
    expect_colorspace(img, ColorSpace::Rgb)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let mut planes: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(r.len())).collect();
    for i in 0..r.len() {
        let ycc = rgb_pixel_to_ycbcr(r[i], g[i], b[i]);
        for (p, v) in planes.iter_mut().zip(ycc) {
            p.push(v);
        }
    }
    PlanarImage::from_planes(img.width(), img.height(), ColorSpace::YCbCr, planes)
}

pub fn ycbcr_to_rgb(img: &PlanarImage) -> Result<PlanarImage> {
    expect_colorspace(img, ColorSpace::YCbCr)?;
    let inv = inverse();
    let (y, cb, cr) = (img.plane(0), img.plane(1), img.plane(2));
    let mut planes: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(y.len())).collect();
    for i in 0..y.len() {
        let v = Vector3::new(y[i] - OFFSET[0], cb[i] - OFFSET[1], cr[i] - OFFSET[2]);
        let rgb = inv * v;
        for (p, c) in planes.iter_mut().zip(rgb.iter()) {
            p.push(*c);
        }
    }
    PlanarImage::from_planes(img.width(), img.height(), ColorSpace::Rgb, planes)
}

/// Single-channel luma plane. RGB input is converted first; gray input is
/// returned unchanged.
pub fn extract_y(img: &PlanarImage) -> Result<PlanarImage> {
    match img.colorspace() {
        ColorSpace::YCbCr => PlanarImage::new(
            img.width(),
            img.height(),
            ColorSpace::Gray,
            img.plane(0).to_vec(),
        ),
        ColorSpace::Rgb => {
            let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
            let y = (0..r.len())
                .map(|i| rgb_pixel_to_y(r[i], g[i], b[i]))
                .collect();
            PlanarImage::new(img.width(), img.height(), ColorSpace::Gray, y)
        }
        ColorSpace::Gray => Ok(img.clone()),
    }
}

/// Gray images are promoted by replicating the plane, which is what an RGB
/// decoder would produce for a gray PNG.
pub fn to_rgb(img: &PlanarImage) -> Result<PlanarImage> {
    match img.colorspace() {
        ColorSpace::Rgb => Ok(img.clone()),
        ColorSpace::YCbCr => ycbcr_to_rgb(img),
        ColorSpace::Gray => {
            let p = img.plane(0).to_vec();
            PlanarImage::from_planes(
                img.width(),
                img.height(),
                ColorSpace::Rgb,
                vec![p.clone(), p.clone(), p],
            )
        }
    }
}

fn expect_colorspace(img: &PlanarImage, expected: ColorSpace) -> Result<()> {
    if img.colorspace() != expected {
        return Err(Error::WrongColorSpace {
            expected,
            actual: img.colorspace(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb1(r: f64, g: f64, b: f64) -> PlanarImage {
        PlanarImage::new(1, 1, ColorSpace::Rgb, vec![r, g, b]).unwrap()
    }

    #[test]
    fn black_and_white_points() {
        let black = rgb_to_ycbcr(&rgb1(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(black.data(), &[16.0, 128.0, 128.0]);
        let white = rgb_to_ycbcr(&rgb1(255.0, 255.0, 255.0)).unwrap();
        // 65.481 + 128.553 + 24.966 = 219
        assert!((white.get(0, 0, 0) - 235.0).abs() < 1e-12);
        assert!((white.get(1, 0, 0) - 128.0).abs() < 1e-12);
        assert!((white.get(2, 0, 0) - 128.0).abs() < 1e-12);
    }

    #[test]
    fn pure_red_luma() {
        // 16 + 65.481 * 255 / 255
        let y = extract_y(&rgb1(255.0, 0.0, 0.0)).unwrap();
        assert_eq!(y.channels(), 1);
        assert!((y.get(0, 0, 0) - 81.481).abs() < 1e-12);
    }

    #[test]
    fn gray_ramp_luma_closed_form() {
        let img =
            PlanarImage::from_fn(4, 2, ColorSpace::Rgb, |_, x, y| (x * 60 + y) as f64).unwrap();
        let y = extract_y(&img).unwrap();
        for (i, &v) in y.data().iter().enumerate() {
            let g = img.plane(0)[i];
            assert!((v - (16.0 + 219.0 * g / 255.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn ycbcr_projection_and_inverse() {
        let img = PlanarImage::from_fn(3, 3, ColorSpace::Rgb, |c, x, y| {
            ((c + 1) * 37 + x * 19 + y * 53) as f64 % 256.0
        })
        .unwrap();
        let ycc = rgb_to_ycbcr(&img).unwrap();
        assert_eq!(extract_y(&ycc).unwrap().data(), ycc.plane(0));
        assert_eq!(extract_y(&ycc).unwrap(), extract_y(&img).unwrap());
        let back = ycbcr_to_rgb(&ycc).unwrap();
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_input_colorspace() {
        let gray = PlanarImage::filled(2, 2, ColorSpace::Gray, 1.0).unwrap();
        assert!(matches!(
            rgb_to_ycbcr(&gray),
            Err(Error::WrongColorSpace { .. })
        ));
    }
}
