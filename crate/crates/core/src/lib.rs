//! Image buffers, color conversion, resampling and quality metrics for
//! evaluating super-resolution and other image-to-image models under
//! explicit, reproducible criteria.

pub mod color;
mod error;
pub mod image;
pub mod metrics;
mod png_io;
pub mod resample;
pub mod synthetic;

pub use color::{extract_y, rgb_to_ycbcr, ycbcr_to_rgb};
pub use error::{Error, Result};
pub use image::{quantize, ColorSpace, PlanarImage, PrecisionMode};
pub use metrics::niqe::{fit_pristine_model, niqe, NiqePristineModel};
pub use metrics::{
    apply_criteria, psnr, shave, ssim, ColorChannels, EvalCriteria, EvaluatorRegistry,
    MetricResult, MetricStatus, ShaveRule, SsimParams,
};
pub use png_io::{decode_png, encode_png, load_png, save_png};
pub use resample::{downscale_hr, resize, ResampleKernel};
