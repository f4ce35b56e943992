//! 8-bit PNG reading and writing.
//!
//! Only 8-bit gray and RGB PNGs are accepted (alpha is stripped, palettes and
//! sub-byte gray are expanded). 16-bit files are rejected instead of being
//! silently truncated.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::color::ycbcr_to_rgb;
use crate::error::{Error, Result};
use crate::image::{quantize_sample, ColorSpace, PlanarImage};

pub fn load_png(path: impl AsRef<Path>) -> Result<PlanarImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes).map_err(|e| match e {
        Error::PngDecode(m) => Error::PngDecode(format!("{}: {m}", path.display())),
        Error::UnsupportedPng(m) => Error::UnsupportedPng(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn decode_png(bytes: &[u8]) -> Result<PlanarImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::PngDecode(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != BitDepth::Eight {
        return Err(Error::UnsupportedPng(format!(
            "{}-bit samples; only 8-bit PNG is supported",
            depth as u8
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::PngDecode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::PngDecode(e.to_string()))?;
    let (width, height) = (info.width as usize, info.height as usize);
    let stride = info.line_size;

    let (colorspace, src_channels) = match color {
        ColorType::Grayscale => (ColorSpace::Gray, 1),
        ColorType::GrayscaleAlpha => (ColorSpace::Gray, 2),
        ColorType::Rgb => (ColorSpace::Rgb, 3),
        ColorType::Rgba => (ColorSpace::Rgb, 4),
        ColorType::Indexed => {
            return Err(Error::UnsupportedPng("palette was not expanded".into()));
        }
    };
    PlanarImage::from_fn(width, height, colorspace, |c, x, y| {
        f64::from(buf[y * stride + x * src_channels + c])
    })
}

/// Writes `img` as an 8-bit PNG after clipping and rounding every sample.
/// YCbCr input is converted back to RGB first.
pub fn save_png(img: &PlanarImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_png(img: &PlanarImage) -> Result<Vec<u8>> {
    let converted;
    let img = if img.colorspace() == ColorSpace::YCbCr {
        converted = ycbcr_to_rgb(img)?;
        &converted
    } else {
        img
    };
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut raw = vec![0u8; w * h * ch];
    for c in 0..ch {
        for (i, &v) in img.plane(c).iter().enumerate() {
            raw[i * ch + c] = quantize_sample(v);
        }
    }

    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, w as u32, h as u32);
        encoder.set_color(if ch == 1 {
            ColorType::Grayscale
        } else {
            ColorType::Rgb
        });
        encoder.set_depth(BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::PngEncode(e.to_string()))?;
        writer
            .write_image_data(&raw)
            .map_err(|e| Error::PngEncode(e.to_string()))?;
        writer
            .finish()
            .map_err(|e| Error::PngEncode(e.to_string()))?;
    }
    Ok(out)
}
