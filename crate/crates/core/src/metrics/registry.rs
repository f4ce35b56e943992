use std::collections::BTreeMap;
use std::sync::Arc;

use crate::color::extract_y;
use crate::error::{Error, Result};
use crate::image::PlanarImage;

use super::criteria::EvalCriteria;
use super::niqe::{niqe, NiqePristineModel};
use super::psnr::psnr;
use super::ssim::{ssim_multichannel, SsimParams};
use super::MetricResult;

/// Everything an evaluator may look at for one (model, image) pair.
/// `reference` and `output` have already been through `apply_criteria`.
pub struct EvalInput<'a> {
    pub reference: &'a PlanarImage,
    pub output: &'a PlanarImage,
    pub criteria: &'a EvalCriteria,
    pub runtime_seconds: Option<f64>,
}

pub trait Evaluator: Send + Sync {
    fn id(&self) -> &str;

    /// One-line summary for listings.
    fn description(&self) -> &str;

    /// Whether larger values mean better quality; reports annotate axes with it.
    fn higher_is_better(&self) -> bool {
        true
    }

    fn evaluate(&self, input: &EvalInput<'_>) -> Result<MetricResult>;
}

/// Adapts a closure into an [`Evaluator`].
pub struct FnEvaluator<F> {
    id: String,
    description: String,
    higher_is_better: bool,
    f: F,
}

impl<F> FnEvaluator<F>
where
    F: Fn(&EvalInput<'_>) -> Result<MetricResult> + Send + Sync,
{
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        higher_is_better: bool,
        f: F,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            higher_is_better,
            f,
        }
    }
}

impl<F> Evaluator for FnEvaluator<F>
where
    F: Fn(&EvalInput<'_>) -> Result<MetricResult> + Send + Sync,
{
    fn id(&self) -> &str {
        &self.id
    }

    fn description(&self) -> &str {
        &self.description
    }

    fn higher_is_better(&self) -> bool {
        self.higher_is_better
    }

    fn evaluate(&self, input: &EvalInput<'_>) -> Result<MetricResult> {
        (self.f)(input)
    }
}

struct Psnr;

impl Evaluator for Psnr {
    fn id(&self) -> &str {
        "psnr"
    }

    fn description(&self) -> &str {
        "peak signal-to-noise ratio in dB, peak 255"
    }

    fn evaluate(&self, input: &EvalInput<'_>) -> Result<MetricResult> {
        psnr(input.reference, input.output)
    }
}

struct Ssim;

impl Evaluator for Ssim {
    fn id(&self) -> &str {
        "ssim"
    }

    fn description(&self) -> &str {
        "structural similarity, 11x11 Gaussian window, valid region"
    }

    fn evaluate(&self, input: &EvalInput<'_>) -> Result<MetricResult> {
        let params = SsimParams {
            auto_downsample: input.criteria.ssim_auto_downsample,
            ..SsimParams::default()
        };
        ssim_multichannel(input.reference, input.output, &params)
    }
}

struct Niqe {
    model: Arc<NiqePristineModel>,
}

impl Evaluator for Niqe {
    fn id(&self) -> &str {
        "niqe"
    }

    fn description(&self) -> &str {
        "natural image quality evaluator on the output luma (no reference), lower is better"
    }

    fn higher_is_better(&self) -> bool {
        false
    }

    /// Images too small for two patches, or with fewer than two usable
    /// patches, score as undefined rather than failing the whole row.
    fn evaluate(&self, input: &EvalInput<'_>) -> Result<MetricResult> {
        match niqe(&extract_y(input.output)?, &self.model) {
            Err(Error::TooSmall(_) | Error::InsufficientData(_)) => {
                Ok(MetricResult::undefined("niqe"))
            }
            other => other,
        }
    }
}

struct Runtime;

impl Evaluator for Runtime {
    fn id(&self) -> &str {
        "runtime"
    }

    fn description(&self) -> &str {
        "wall-clock seconds of the upscale call (requires timing)"
    }

    fn higher_is_better(&self) -> bool {
        false
    }

    fn evaluate(&self, input: &EvalInput<'_>) -> Result<MetricResult> {
        Ok(match input.runtime_seconds {
            Some(s) => MetricResult::ok("runtime", s),
            None => MetricResult::undefined("runtime"),
        })
    }
}

/// Metric evaluators by id. Populate it at startup, then share it
/// read-only (e.g. behind an `Arc`).
#[derive(Default)]
pub struct EvaluatorRegistry {
    evaluators: BTreeMap<String, Arc<dyn Evaluator>>,
}

impl EvaluatorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `psnr`, `ssim`, `niqe` and `runtime`.
    pub fn with_builtins(niqe_model: Arc<NiqePristineModel>) -> Self {
        let mut r = Self::new();
        r.register(Psnr).expect("fresh registry");
        r.register(Ssim).expect("fresh registry");
        r.register(Niqe { model: niqe_model })
            .expect("fresh registry");
        r.register(Runtime).expect("fresh registry");
        r
    }

    pub fn register(&mut self, evaluator: impl Evaluator + 'static) -> Result<()> {
        let id = evaluator.id().to_string();
        if self.evaluators.contains_key(&id) {
            return Err(Error::DuplicateEvaluator(id));
        }
        self.evaluators.insert(id, Arc::new(evaluator));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Evaluator>> {
        self.evaluators.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.evaluators.contains_key(id)
    }

    /// Evaluators in id order.
    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Evaluator>> {
        self.evaluators.values()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.evaluators.keys().map(String::as_str).collect()
    }

    /// Fails on the first metric id in `criteria` that is not registered.
    pub fn check_criteria(&self, criteria: &EvalCriteria) -> Result<()> {
        match criteria.metrics.iter().find(|m| !self.contains(m)) {
            Some(m) => Err(Error::UnknownEvaluator(m.clone())),
            None => Ok(()),
        }
    }

    /// Runs every metric named in `criteria`, in criteria order.
    pub fn evaluate_all(&self, input: &EvalInput<'_>) -> Result<Vec<MetricResult>> {
        input
            .criteria
            .metrics
            .iter()
            .map(|id| {
                self.get(id)
                    .ok_or_else(|| Error::UnknownEvaluator(id.clone()))?
                    .evaluate(input)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{ColorSpace, PrecisionMode};
    use crate::metrics::{mse, ColorChannels, ShaveRule};

    fn registry() -> EvaluatorRegistry {
        EvaluatorRegistry::with_builtins(Arc::new(NiqePristineModel::bundled()))
    }

    #[test]
    fn builtins_present() {
        assert_eq!(registry().ids(), vec!["niqe", "psnr", "runtime", "ssim"]);
    }

    #[test]
    fn duplicate_rejected() {
        let mut r = registry();
        assert!(matches!(r.register(Psnr), Err(Error::DuplicateEvaluator(id)) if id == "psnr"));
    }

    #[test]
    fn custom_evaluator_runs_once_per_pair() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = Arc::new(AtomicUsize::new(0));
        let seen = Arc::clone(&calls);
        let mut r = registry();
        r.register(FnEvaluator::new(
            "mse",
            "mean squared error",
            false,
            move |i: &EvalInput<'_>| {
                seen.fetch_add(1, Ordering::SeqCst);
                Ok(MetricResult::ok("mse", mse(i.reference, i.output)?))
            },
        ))
        .unwrap();
        assert!(r.ids().contains(&"mse"));

        let criteria = EvalCriteria::new(
            ColorChannels::Y,
            ShaveRule::ScaleEqual,
            PrecisionMode::Float,
            ["mse", "psnr"],
        );
        r.check_criteria(&criteria).unwrap();
        let a = PlanarImage::filled(4, 4, ColorSpace::Gray, 1.0).unwrap();
        let b = PlanarImage::filled(4, 4, ColorSpace::Gray, 3.0).unwrap();
        let results = r
            .evaluate_all(&EvalInput {
                reference: &a,
                output: &b,
                criteria: &criteria,
                runtime_seconds: None,
            })
            .unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(results[0], MetricResult::ok("mse", 4.0));
        assert_eq!(results[1].metric, "psnr");
    }

    #[test]
    fn unknown_metric_in_criteria() {
        let criteria = EvalCriteria::new(
            ColorChannels::Y,
            ShaveRule::ScaleEqual,
            PrecisionMode::Float,
            ["lpips"],
        );
        assert!(matches!(
            registry().check_criteria(&criteria),
            Err(Error::UnknownEvaluator(_))
        ));
    }
}
