//! Planar floating-point image buffer.
//!
//! Every stage of the pipeline exchanges [`PlanarImage`]: samples are `f64`
//! in the nominal range `[0, 255]`, stored plane by plane in row-major order.
//! Integer precision is expressed by [`quantize`], never by a different
//! carrier type.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
    YCbCr,
    Gray,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            ColorSpace::Rgb | ColorSpace::YCbCr => 3,
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorSpace::Rgb => "RGB",
            ColorSpace::YCbCr => "YCbCr",
            ColorSpace::Gray => "Gray",
        })
    }
}

/// Whether metrics see the raw float samples or 8-bit quantized ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    Integer8,
    Float,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    data: Vec<f64>,
}

impl PlanarImage {
    /// Wraps planar data (`channels` planes of `width * height` samples).
    pub fn new(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        let expected = width * height * colorspace.channels();
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} {colorspace} image needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            colorspace,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, colorspace: ColorSpace, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            colorspace,
            vec![value; width * height * colorspace.channels()],
        )
    }

    /// Builds an image from `f(channel, x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * colorspace.channels());
        for c in 0..colorspace.channels() {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self::new(width, height, colorspace, data)
    }

    pub fn from_planes(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        planes: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if planes.len() != colorspace.channels() {
            return Err(Error::InvalidImage(format!(
                "{colorspace} needs {} planes, got {}",
                colorspace.channels(),
                planes.len()
            )));
        }
        Self::new(width, height, colorspace, planes.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.colorspace.channels()
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let len = self.width * self.height;
        &self.data[channel * len..(channel + 1) * len]
    }

    pub fn planes(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width * self.height)
    }

    #[inline]
    pub fn get(&self, channel: usize, x: usize, y: usize) -> f64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    /// Same geometry, different samples.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn same_shape(&self, other: &PlanarImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels() == other.channels()
    }

    /// Rectangular crop with its top-left corner at `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x + width > self.width || y + height > self.height {
            return Err(Error::InvalidArgument(format!(
                "crop {width}x{height}+{x}+{y} outside {}x{} image",
                self.width, self.height
            )));
        }
        Self::from_fn(width, height, self.colorspace, |c, cx, cy| {
            self.get(c, x + cx, y + cy)
        })
    }

    /// Crops to `width x height`, dropping the excess equally from both sides
    /// (the odd pixel goes to the right/bottom).
    pub fn center_crop(&self, width: usize, height: usize) -> Result<Self> {
        let (x, y) = center_crop_origin(self.width, self.height, width, height)?;
        if x == 0 && y == 0 && width == self.width && height == self.height {
            return Ok(self.clone());
        }
        self.crop(x, y, width, height)
    }

    /// Mirrors left-right.
    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        Self::from_fn(w, self.height, self.colorspace, |c, x, y| {
            self.get(c, w - 1 - x, y)
        })
        .expect("geometry preserved")
    }

    /// Rotates 90 degrees counter-clockwise; output is `height x width`.
    pub fn rotate90_ccw(&self) -> Self {
        let w = self.width;
        Self::from_fn(self.height, self.width, self.colorspace, |c, x, y| {
            self.get(c, w - 1 - y, x)
        })
        .expect("geometry preserved")
    }

    /// Rotates 90 degrees clockwise; inverse of [`Self::rotate90_ccw`].
    pub fn rotate90_cw(&self) -> Self {
        let h = self.height;
        Self::from_fn(self.height, self.width, self.colorspace, |c, x, y| {
            self.get(c, y, h - 1 - x)
        })
        .expect("geometry preserved")
    }

    pub fn rotate180(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(w, h, self.colorspace, |c, x, y| {
            self.get(c, w - 1 - x, h - 1 - y)
        })
        .expect("geometry preserved")
    }

    pub fn quantize(&self) -> Self {
        quantize(self)
    }

    pub fn with_precision(&self, precision: PrecisionMode) -> Self {
        match precision {
            PrecisionMode::Integer8 => quantize(self),
            PrecisionMode::Float => self.clone(),
        }
    }
}

/// Top-left corner of a centered `width x height` window.
pub fn center_crop_origin(
    src_width: usize,
    src_height: usize,
    width: usize,
    height: usize,
) -> Result<(usize, usize)> {
    if width == 0 || height == 0 || width > src_width || height > src_height {
        return Err(Error::InvalidArgument(format!(
            "cannot center-crop {src_width}x{src_height} to {width}x{height}"
        )));
    }
    Ok(((src_width - width) / 2, (src_height - height) / 2))
}

/// Rounds one sample to the 8-bit grid: clip to `[0, 255]`, round half away
/// from zero.
#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    // NaN maps to 0 through the saturating cast.
    v.clamp(0.0, 255.0).round() as u8
}

/// Clips every sample to `[0, 255]` and rounds half away from zero.
pub fn quantize(img: &PlanarImage) -> PlanarImage {
    img.map(|v| f64::from(quantize_sample(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, data: Vec<f64>) -> PlanarImage {
        PlanarImage::new(w, h, ColorSpace::Gray, data).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(PlanarImage::new(0, 1, ColorSpace::Gray, vec![]).is_err());
        assert!(PlanarImage::new(2, 2, ColorSpace::Rgb, vec![0.0; 4]).is_err());
        assert!(PlanarImage::new(2, 2, ColorSpace::Rgb, vec![0.0; 12]).is_ok());
    }

    #[test]
    fn quantize_rounding_and_clipping() {
        let img = gray(4, 1, vec![16.4, 16.5, -1.0, 300.0]);
        assert_eq!(quantize(&img).data(), &[16.0, 17.0, 0.0, 255.0]);
        assert_eq!(quantize_sample(254.5), 255);
        assert_eq!(quantize_sample(-3.2), 0);
        assert_eq!(quantize_sample(0.5), 1);
        assert_eq!(quantize_sample(f64::NAN), 0);
    }

    #[test]
    fn quantize_idempotent_on_integers() {
        let img = gray(3, 1, vec![0.0, 128.0, 255.0]);
        assert_eq!(quantize(&img), img);
        let q = quantize(&gray(2, 1, vec![3.7, 99.49]));
        assert_eq!(quantize(&q), q);
    }

    #[test]
    fn rotations_compose_to_identity() {
        let img = PlanarImage::from_fn(3, 2, ColorSpace::Rgb, |c, x, y| {
            (c * 100 + y * 10 + x) as f64
        })
        .unwrap();
        let r = img.rotate90_ccw();
        assert_eq!(r.dims(), (2, 3));
        // top-right corner moves to top-left under a counter-clockwise turn
        assert_eq!(r.get(0, 0, 0), img.get(0, 2, 0));
        assert_eq!(r.rotate90_cw(), img);
        assert_eq!(r.rotate90_ccw(), img.rotate180());
        assert_eq!(img.rotate180().rotate180(), img);
        assert_eq!(img.flip_horizontal().flip_horizontal(), img);
        assert_eq!(img.flip_horizontal().get(1, 0, 1), img.get(1, 2, 1));
    }

    #[test]
    fn center_crop_offsets() {
        let img = PlanarImage::from_fn(101, 50, ColorSpace::Gray, |_, x, y| (x + 1000 * y) as f64)
            .unwrap();
        let c = img.center_crop(100, 48).unwrap();
        assert_eq!(c.dims(), (100, 48));
        assert_eq!(c.get(0, 0, 0), img.get(0, 0, 1));
        assert!(img.center_crop(102, 1).is_err());
    }
}
