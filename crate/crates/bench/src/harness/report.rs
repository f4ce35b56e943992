//! Per-model aggregation of record files and table output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use srbench_core::{MetricResult, MetricStatus};

use crate::error::{Error, Result};
use crate::runtime::ReportedValues;

use super::record::BenchRecord;

/// Mean metrics of one model on one dataset at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub model: String,
    pub dataset: String,
    pub scale: usize,
    pub self_ensemble: bool,
    pub images: usize,
    /// Sorted by metric id.
    pub metrics: Vec<MetricResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<ReportedValues>,
}

impl ModelAggregate {
    pub fn metric(&self, id: &str) -> Option<&MetricResult> {
        self.metrics.iter().find(|m| m.metric == id)
    }
}

/// A model with at least one errored record. It gets no averages, since a
/// mean over the images that happened to succeed is not comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedModel {
    pub model: String,
    pub dataset: String,
    pub scale: usize,
    pub errors: usize,
    pub images: usize,
    pub first_error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub fingerprint: String,
    /// Ascending by PSNR, then by model name.
    pub rows: Vec<ModelAggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<FailedModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    Json,
}

/// Mean of the `Ok` values. Any `Infinite` input makes the mean infinite;
/// no `Ok` values at all make it undefined.
fn mean_metric<'a>(id: &str, results: impl Iterator<Item = &'a MetricResult>) -> MetricResult {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in results {
        match r.status {
            MetricStatus::Infinite => return MetricResult::infinite(id),
            MetricStatus::Ok => {
                sum += r.as_f64();
                n += 1;
            }
            MetricStatus::Undefined => {}
        }
    }
    if n == 0 {
        MetricResult::undefined(id)
    } else {
        MetricResult::ok(id, sum / n as f64)
    }
}

/// Groups records by (model, dataset, scale) and averages each metric over
/// the images. All records must share one criteria fingerprint.
pub fn aggregate(records: &[BenchRecord]) -> Result<Report> {
    let Some(first) = records.first() else {
        return Err(Error::Records("no records".into()));
    };
    if let Some(other) = records.iter().find(|r| r.fingerprint != first.fingerprint) {
        return Err(Error::Records(format!(
            "records were evaluated under different criteria (fingerprints {} and {}); report them separately",
            first.fingerprint, other.fingerprint
        )));
    }

    let mut groups: BTreeMap<(&str, &str, usize), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((&r.model, &r.dataset, r.scale))
            .or_default()
            .push(r);
    }

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for ((model, dataset, scale), group) in groups {
        let errors: Vec<&&BenchRecord> = group.iter().filter(|r| r.is_error()).collect();
        if let Some(e) = errors.first() {
            failed.push(FailedModel {
                model: model.into(),
                dataset: dataset.into(),
                scale,
                errors: errors.len(),
                images: group.len(),
                first_error: format!("{}: {}", e.image, e.error.as_deref().unwrap_or_default()),
            });
            continue;
        }
        let mut ids: Vec<&str> = group
            .iter()
            .flat_map(|r| r.metrics.iter().map(|m| m.metric.as_str()))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let metrics = ids
            .iter()
            .map(|id| mean_metric(id, group.iter().filter_map(|r| r.metric(id))))
            .collect();
        rows.push(ModelAggregate {
            model: model.into(),
            dataset: dataset.into(),
            scale,
            self_ensemble: group.iter().any(|r| r.self_ensemble),
            images: group.len(),
            metrics,
            device_label: group
                .iter()
                .find_map(|r| r.timing.as_ref().map(|t| t.device_label.clone())),
            reported: group.iter().find_map(|r| r.reported.clone()),
        });
    }

    // Undefined PSNR sorts after everything, infinite after every finite value.
    let key = |a: &ModelAggregate| {
        let v = a.metric("psnr").map_or(f64::NAN, MetricResult::as_f64);
        (v.is_nan(), if v.is_nan() { 0.0 } else { v })
    };
    rows.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then_with(|| a.model.cmp(&b.model))
            .then_with(|| a.dataset.cmp(&b.dataset))
            .then(a.scale.cmp(&b.scale))
    });
    Ok(Report {
        fingerprint: first.fingerprint.clone(),
        rows,
        failed,
    })
}

/// Display precision by metric id.
fn precision(id: &str) -> usize {
    match id {
        "psnr" => 2,
        "ssim" => 4,
        "niqe" | "runtime" => 3,
        _ => 4,
    }
}

/// Formats a metric for tables and plots: `inf`, `n/a`, or a fixed number
/// of decimals depending on the metric.
pub fn format_metric(m: &MetricResult) -> String {
    match m.status {
        MetricStatus::Ok => format!("{:.*}", precision(&m.metric), m.as_f64()),
        MetricStatus::Infinite => "inf".into(),
        MetricStatus::Undefined => "n/a".into(),
    }
}

fn format_reported(id: &str, v: Option<f64>) -> String {
    v.map(|v| format!("{:.*}", precision(id), v))
        .unwrap_or_default()
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn build_table(report: &Report) -> Table {
    let mut ids: Vec<&str> = report
        .rows
        .iter()
        .flat_map(|r| r.metrics.iter().map(|m| m.metric.as_str()))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    let with_reported = report.rows.iter().any(|r| r.reported.is_some());

    let mut header: Vec<String> = ["model", "dataset", "scale", "self_ensemble", "images"]
        .map(String::from)
        .to_vec();
    header.extend(ids.iter().map(|s| s.to_string()));
    if with_reported {
        header.push("reported_psnr".into());
        header.push("reported_ssim".into());
    }

    let rows = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.model.clone(),
                r.dataset.clone(),
                r.scale.to_string(),
                r.self_ensemble.to_string(),
                r.images.to_string(),
            ];
            row.extend(
                ids.iter()
                    .map(|id| r.metric(id).map(format_metric).unwrap_or_default()),
            );
            if with_reported {
                let rep = r.reported.as_ref();
                row.push(format_reported("psnr", rep.and_then(|p| p.psnr)));
                row.push(format_reported("ssim", rep.and_then(|p| p.ssim)));
            }
            row
        })
        .collect();
    Table { header, rows }
}

/// CSV text of a header and rows.
pub(crate) fn to_csv<R: AsRef<[u8]>>(
    header: &[R],
    rows: impl IntoIterator<Item = Vec<R>>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Renders a report. Output depends only on the report, so equal record
/// files give byte-identical tables.
pub fn emit_table(report: &Report, format: TableFormat) -> String {
    match format {
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        TableFormat::Csv => {
            let table = build_table(report);
            to_csv(&table.header, table.rows)
        }
        TableFormat::Markdown => {
            let table = build_table(report);
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", table.header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(table.header.len()));
            for row in &table.rows {
                let _ = writeln!(out, "| {} |", row.join(" | "));
            }
            if !report.failed.is_empty() {
                let _ = writeln!(out, "\nModels with failed images (not averaged):\n");
                for f in &report.failed {
                    let _ = writeln!(
                        out,
                        "- {} on {} x{}: {}/{} images failed; first: {}",
                        f.model, f.dataset, f.scale, f.errors, f.images, f.first_error
                    );
                }
            }
            let _ = writeln!(out, "\ncriteria fingerprint: {}", report.fingerprint);
            out
        }
    }
}
