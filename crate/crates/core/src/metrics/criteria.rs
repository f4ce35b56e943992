use serde::{Deserialize, Serialize};

use crate::color::{extract_y, to_rgb};
use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage, PrecisionMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorChannels {
    /// Luma of BT.601 studio-swing YCbCr.
    Y,
    Rgb,
}

/// How many border pixels are removed before full-reference metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ShaveRule {
    /// As many pixels as the upscaling factor.
    ScaleEqual,
    /// Upscaling factor plus a constant, e.g. `6 + scale`.
    ScalePlus {
        offset: usize,
    },
    Fixed {
        amount: usize,
    },
}

impl ShaveRule {
    pub fn amount(&self, scale: usize) -> usize {
        match *self {
            ShaveRule::ScaleEqual => scale,
            ShaveRule::ScalePlus { offset } => scale + offset,
            ShaveRule::Fixed { amount } => amount,
        }
    }
}

/// The conditions under which a model output is compared with its reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCriteria {
    pub color: ColorChannels,
    pub shave: ShaveRule,
    pub precision: PrecisionMode,
    pub metrics: Vec<String>,
    #[serde(default = "default_true")]
    pub ssim_auto_downsample: bool,
}

fn default_true() -> bool {
    true
}

impl EvalCriteria {
    pub fn new(
        color: ColorChannels,
        shave: ShaveRule,
        precision: PrecisionMode,
        metrics: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        let mut c = Self {
            color,
            shave,
            precision,
            metrics: metrics.into_iter().map(Into::into).collect(),
            ssim_auto_downsample: true,
        };
        c.normalize();
        c
    }

    /// Sorts and deduplicates the metric set so that equal sets compare and
    /// serialize identically.
    pub fn normalize(&mut self) {
        self.metrics.sort();
        self.metrics.dedup();
    }

    /// Stable JSON text (fixed field order, normalized metric set).
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.normalize();
        serde_json::to_string(&c).expect("criteria serialize")
    }
}

/// Removes `amount` pixels from each border.
pub fn shave(img: &PlanarImage, amount: usize) -> Result<PlanarImage> {
    if amount == 0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    if 2 * amount >= w.min(h) {
        return Err(Error::TooSmall(format!(
            "cannot shave {amount} pixels from a {w}x{h} image"
        )));
    }
    img.crop(amount, amount, w - 2 * amount, h - 2 * amount)
}

fn prepare_one(img: &PlanarImage, criteria: &EvalCriteria, amount: usize) -> Result<PlanarImage> {
    let img = img.with_precision(criteria.precision);
    let img = match criteria.color {
        ColorChannels::Y => extract_y(&img)?,
        ColorChannels::Rgb if img.colorspace() == ColorSpace::Gray => img,
        ColorChannels::Rgb => to_rgb(&img)?,
    };
    shave(&img, amount)
}

/// Quantize (if integer precision), then select color channels, then shave.
/// The order matters and is fixed.
pub fn apply_criteria(
    reference: &PlanarImage,
    output: &PlanarImage,
    criteria: &EvalCriteria,
    scale: usize,
) -> Result<(PlanarImage, PlanarImage)> {
    if !reference.same_shape(output) {
        return Err(Error::DimensionMismatch(format!(
            "reference is {}x{}x{}, output is {}x{}x{}",
            reference.width(),
            reference.height(),
            reference.channels(),
            output.width(),
            output.height(),
            output.channels()
        )));
    }
    let amount = criteria.shave.amount(scale);
    Ok((
        prepare_one(reference, criteria, amount)?,
        prepare_one(output, criteria, amount)?,
    ))
}
