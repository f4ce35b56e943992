//! Datasets, benchmark runs, record files, tables and scatter plots.

mod dataset;
mod record;
mod report;
mod run;
mod scatter;

pub use dataset::{
    prepare_dataset, sha256_hex, CropNote, DatasetManifest, DatasetSpec, FileEntry, PrepareReport,
};
pub use record::{
    criteria_fingerprint, read_records, BenchRecord, RecordWriter, RunManifest, HARNESS_VERSION,
    RECORD_VERSION,
};
pub use report::{
    aggregate, emit_table, format_metric, FailedModel, ModelAggregate, Report, TableFormat,
};
pub use run::{run_benchmark, EnsembleMode, RunOptions, RunOutcome};
pub use scatter::{emit_scatter, Scatter};
