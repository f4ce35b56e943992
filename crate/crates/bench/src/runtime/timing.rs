use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use srbench_core::PlanarImage;

use crate::error::{Error, Result};

use super::config::RunnerKind;
use super::model::{Model, TimingSample};

static TIMING_LOCK: Mutex<()> = Mutex::new(());

/// Held while timed passes run, so that no two timed passes in this process
/// ever overlap.
pub(crate) fn timing_guard() -> MutexGuard<'static, ()> {
    TIMING_LOCK.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingOptions {
    /// Untimed passes on the first image before any measurement.
    pub warmup: usize,
    /// Timed passes per image; the reported value is their mean.
    pub repeats: usize,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self {
            warmup: 1,
            repeats: 1,
        }
    }
}

impl TimingOptions {
    pub fn check(&self, kind: RunnerKind) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument(
                "timing needs at least one repeat".into(),
            ));
        }
        if kind == RunnerKind::Server && self.warmup == 0 {
            return Err(Error::InvalidArgument(
                "server runners need at least one warmup pass".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// Per-image means, in input order. Shorter than the input when the run
    /// was aborted.
    pub per_image: Vec<TimingSample>,
    /// False when a runner failure cut the benchmark short.
    pub valid: bool,
    pub error: Option<String>,
}

/// Mean of several samples of the same model.
pub(crate) fn mean_sample(samples: &[TimingSample]) -> TimingSample {
    let n = samples.len() as f64;
    TimingSample {
        wall_seconds: samples.iter().map(|s| s.wall_seconds).sum::<f64>() / n,
        raw_seconds: samples.iter().map(|s| s.raw_seconds).sum::<f64>() / n,
        startup_inclusive: samples.iter().any(|s| s.startup_inclusive),
        device_label: samples[0].device_label.clone(),
    }
}

/// Times `model` on each image: `warmup` untimed passes on the first image,
/// then `repeats` timed passes per image. A runner failure stops the
/// benchmark and returns what was measured so far, flagged invalid.
pub fn benchmark_timing(
    model: &Model,
    images: &[PlanarImage],
    scale: usize,
    options: TimingOptions,
    ensemble: bool,
) -> Result<TimingReport> {
    options.check(model.config().runner.kind)?;
    let _serial = timing_guard();
    let mut per_image = Vec::with_capacity(images.len());
    let abort = |per_image, e: Error| TimingReport {
        per_image,
        valid: false,
        error: Some(e.to_string()),
    };
    if let Some(first) = images.first() {
        for _ in 0..options.warmup {
            if let Err(e) = model.run(first, scale, ensemble) {
                return Ok(abort(per_image, e));
            }
        }
    }
    for img in images {
        let mut samples = Vec::with_capacity(options.repeats);
        for _ in 0..options.repeats {
            match model.run(img, scale, ensemble) {
                Ok((_, t)) => samples.push(t),
                Err(e) => return Ok(abort(per_image, e)),
            }
        }
        per_image.push(mean_sample(&samples));
    }
    Ok(TimingReport {
        per_image,
        valid: true,
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::config::{ModelConfig, RunnerSpec};
    use srbench_core::ColorSpace;

    #[test]
    fn zero_repeats_rejected() {
        let m = Model::new(ModelConfig::new(
            "m",
            [2],
            RunnerSpec::builtin(RunnerKind::BuiltinNearest),
        ));
        let imgs = [PlanarImage::filled(4, 4, ColorSpace::Gray, 0.0).unwrap()];
        let opts = TimingOptions {
            warmup: 0,
            repeats: 0,
        };
        assert!(benchmark_timing(&m, &imgs, 2, opts, false).is_err());
    }

    #[test]
    fn builtin_timing_is_positive() {
        let m = Model::new(ModelConfig::new(
            "m",
            [2],
            RunnerSpec::builtin(RunnerKind::BuiltinBicubic),
        ));
        let imgs = vec![PlanarImage::filled(8, 8, ColorSpace::Gray, 1.0).unwrap(); 3];
        let r = benchmark_timing(
            &m,
            &imgs,
            2,
            TimingOptions {
                warmup: 0,
                repeats: 1,
            },
            false,
        )
        .unwrap();
        assert!(r.valid);
        assert_eq!(r.per_image.len(), 3);
        assert!(r.per_image.iter().all(|s| s.wall_seconds > 0.0));
    }
}
