//! Full-reference (PSNR, SSIM) and no-reference (NIQE) quality metrics, the
//! evaluation-criteria machinery that prepares image pairs for them, and the
//! evaluator registry.

mod criteria;
pub mod niqe;
mod psnr;
mod registry;
mod ssim;

use serde::{Deserialize, Serialize};

pub use criteria::{apply_criteria, shave, ColorChannels, EvalCriteria, ShaveRule};
pub use psnr::{mse, psnr};
pub use registry::{EvalInput, Evaluator, EvaluatorRegistry, FnEvaluator};
pub use ssim::{ssim, ssim_multichannel, SsimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricStatus {
    Ok,
    /// Only produced by PSNR on identical inputs.
    Infinite,
    Undefined,
}

/// One metric value. `value` is `None` unless `status` is `Ok`, which keeps
/// the JSON form free of non-finite numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: String,
    pub value: Option<f64>,
    pub status: MetricStatus,
}

impl MetricResult {
    pub fn ok(metric: impl Into<String>, value: f64) -> Self {
        if !value.is_finite() {
            return Self::undefined(metric);
        }
        Self {
            metric: metric.into(),
            value: Some(value),
            status: MetricStatus::Ok,
        }
    }

    pub fn infinite(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            value: None,
            status: MetricStatus::Infinite,
        }
    }

    pub fn undefined(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            value: None,
            status: MetricStatus::Undefined,
        }
    }

    /// Numeric view: `+inf` for `Infinite`, NaN for `Undefined`.
    pub fn as_f64(&self) -> f64 {
        match self.status {
            MetricStatus::Ok => self.value.unwrap_or(f64::NAN),
            MetricStatus::Infinite => f64::INFINITY,
            MetricStatus::Undefined => f64::NAN,
        }
    }
}
