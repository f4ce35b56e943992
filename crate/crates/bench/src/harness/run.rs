use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use srbench_core::metrics::EvalInput;
use srbench_core::{apply_criteria, EvalCriteria, EvaluatorRegistry, MetricResult, PlanarImage};

use crate::error::{Error, Result};
use crate::runtime::{mean_sample, timing_guard, Model, TimingOptions, TimingSample};

use super::dataset::DatasetSpec;
use super::record::{
    criteria_fingerprint, BenchRecord, RunManifest, HARNESS_VERSION, RECORD_VERSION,
};

/// Which models run with geometric self-ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    /// Every model.
    Force,
    /// Models whose config sets `self_ensemble`.
    #[default]
    Config,
    Off,
}

impl EnsembleMode {
    pub fn applies_to(self, model: &Model) -> bool {
        match self {
            EnsembleMode::Force => true,
            EnsembleMode::Config => model.config().self_ensemble,
            EnsembleMode::Off => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub criteria: EvalCriteria,
    /// `None` disables timing and allows images to run in parallel.
    pub timing: Option<TimingOptions>,
    pub ensemble: EnsembleMode,
    /// Free-text hardware description stored in the run manifest.
    pub environment: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<BenchRecord>,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn errored(&self) -> usize {
        self.records.iter().filter(|r| r.is_error()).count()
    }
}

struct Pair {
    stem: String,
    lr: PlanarImage,
    hr: PlanarImage,
}

/// Runs every model on every image of `dataset` at `scale` and evaluates the
/// outputs. Records are produced in model order, then stem order, and are
/// handed to `sink` as each model finishes. A failing image becomes an
/// errored record; the run goes on.
///
/// Everything that can be checked up front (metric ids, the scale, model
/// support, image pairing) is checked before any model runs.
pub fn run_benchmark(
    models: &[Model],
    dataset: &DatasetSpec,
    scale: usize,
    registry: &EvaluatorRegistry,
    options: &RunOptions,
    mut sink: impl FnMut(&BenchRecord) -> Result<()>,
) -> Result<RunOutcome> {
    if models.is_empty() {
        return Err(Error::InvalidArgument("no models to run".into()));
    }
    registry.check_criteria(&options.criteria)?;
    let unsupported: Vec<&str> = models
        .iter()
        .filter(|m| !m.config().scales.contains(&scale))
        .map(Model::name)
        .collect();
    if !unsupported.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "x{scale} is not supported by: {}",
            unsupported.join(", ")
        )));
    }
    if let Some(t) = options.timing {
        for m in models {
            t.check(m.config().runner.kind)?;
        }
    }
    let stems = dataset.stems_at(scale)?;
    if stems.is_empty() {
        return Err(Error::Dataset(format!(
            "LR/x{scale} of `{}` is empty",
            dataset.name
        )));
    }
    let pairs: Vec<Pair> = stems
        .par_iter()
        .map(|stem| {
            let (lr, hr) = dataset.load_pair(stem, scale)?;
            Ok(Pair {
                stem: stem.clone(),
                lr,
                hr,
            })
        })
        .collect::<Result<_>>()?;

    let fingerprint = criteria_fingerprint(&options.criteria);
    let mut records = Vec::with_capacity(models.len() * pairs.len());
    for model in models {
        let ensemble = options.ensemble.applies_to(model);
        let ctx = Context {
            model,
            scale,
            ensemble,
            registry,
            criteria: &options.criteria,
        };
        let results: Vec<Result<(Vec<MetricResult>, Option<TimingSample>)>> = match options.timing {
            Some(t) => {
                let _serial = timing_guard();
                for _ in 0..t.warmup {
                    // A failing warmup shows up again on the timed passes.
                    let _ = model.run(&pairs[0].lr, scale, ensemble);
                }
                pairs.iter().map(|p| ctx.evaluate_timed(p, t)).collect()
            }
            None => pairs.par_iter().map(|p| ctx.evaluate(p)).collect(),
        };
        let reported = model.config().reported_for(&dataset.name, scale).cloned();
        for (pair, result) in pairs.iter().zip(results) {
            let (metrics, timing, error) = match result {
                Ok((m, t)) => (m, t, None),
                Err(e) => (Vec::new(), None, Some(e.to_string())),
            };
            let record = BenchRecord {
                version: RECORD_VERSION,
                model: model.name().to_string(),
                dataset: dataset.name.clone(),
                scale,
                image: pair.stem.clone(),
                self_ensemble: ensemble,
                metrics,
                timing,
                fingerprint: fingerprint.clone(),
                reported: reported.clone(),
                error,
            };
            sink(&record)?;
            records.push(record);
        }
    }

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default();
    let notes = models
        .iter()
        .filter_map(|m| {
            let declared = m.config().shave_override?;
            (declared.amount(scale) != options.criteria.shave.amount(scale)).then(|| {
                format!(
                    "model `{}` was published with {} px shaving at x{scale}; this run shaves {} px",
                    m.name(),
                    declared.amount(scale),
                    options.criteria.shave.amount(scale)
                )
            })
        })
        .collect();
    let manifest = RunManifest {
        run_id: format!("{timestamp}-{}-{}", std::process::id(), &fingerprint[..8]),
        timestamp,
        harness: HARNESS_VERSION.into(),
        fingerprint,
        criteria: options.criteria.clone(),
        models: models.iter().map(|m| m.name().to_string()).collect(),
        datasets: vec![dataset.name.clone()],
        scales: vec![scale],
        timing: options.timing.is_some(),
        environment: options.environment.clone(),
        notes,
    };
    Ok(RunOutcome { records, manifest })
}

struct Context<'a> {
    model: &'a Model,
    scale: usize,
    ensemble: bool,
    registry: &'a EvaluatorRegistry,
    criteria: &'a EvalCriteria,
}

impl Context<'_> {
    fn evaluate(&self, pair: &Pair) -> Result<(Vec<MetricResult>, Option<TimingSample>)> {
        let (out, _) = self.model.run(&pair.lr, self.scale, self.ensemble)?;
        Ok((self.score(pair, &out, None)?, None))
    }

    /// The first timed pass supplies the image that gets scored.
    fn evaluate_timed(
        &self,
        pair: &Pair,
        t: TimingOptions,
    ) -> Result<(Vec<MetricResult>, Option<TimingSample>)> {
        let mut first = None;
        let mut samples = Vec::with_capacity(t.repeats);
        for _ in 0..t.repeats {
            let (out, sample) = self.model.run(&pair.lr, self.scale, self.ensemble)?;
            first.get_or_insert(out);
            samples.push(sample);
        }
        let timing = mean_sample(&samples);
        let out = first.expect("at least one repeat");
        Ok((
            self.score(pair, &out, Some(timing.wall_seconds))?,
            Some(timing),
        ))
    }

    fn score(
        &self,
        pair: &Pair,
        out: &PlanarImage,
        runtime: Option<f64>,
    ) -> Result<Vec<MetricResult>> {
        let (reference, output) = apply_criteria(&pair.hr, out, self.criteria, self.scale)?;
        Ok(self.registry.evaluate_all(&EvalInput {
            reference: &reference,
            output: &output,
            criteria: self.criteria,
            runtime_seconds: runtime,
        })?)
    }
}
