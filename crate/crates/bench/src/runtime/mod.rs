//! Model configs, built-in and external runners, self-ensemble and timing.

mod config;
mod ensemble;
mod model;
mod server;
mod timing;

pub use config::{
    load_model_config, load_model_configs, parse_model_config, validate_config, validate_value,
    Diagnostic, InputRange, ModelConfig, ReportedValues, RunnerKind, RunnerSpec,
    DEFAULT_STARTUP_TIMEOUT, SCHEMA_VERSION,
};
pub use ensemble::{self_ensemble_with, Transform};
pub use model::{default_device_label, Model, TimingSample};
pub use timing::{benchmark_timing, TimingOptions, TimingReport};

pub(crate) use timing::{mean_sample, timing_guard};
