//! Model configuration files.
//!
//! A model is described by a small JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "carn",
//!   "scales": [2, 3, 4],
//!   "runner": { "kind": "server", "argv": ["python3", "adapter.py", "--weights", "carn.pt"] },
//!   "input_range": "unit01",
//!   "self_ensemble": false,
//!   "reported": [{ "dataset": "bsd100", "scale": 4, "psnr": 27.58, "ssim": 0.7349 }]
//! }
//! ```
//!
//! Only `name`, `scales` and `runner.kind` are required.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use srbench_core::ShaveRule;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Seconds allowed for a server runner to answer its first request.
pub const DEFAULT_STARTUP_TIMEOUT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunnerKind {
    BuiltinNearest,
    BuiltinBilinear,
    BuiltinBicubic,
    Command,
    Server,
}

impl RunnerKind {
    pub const ALL: [RunnerKind; 5] = [
        RunnerKind::BuiltinNearest,
        RunnerKind::BuiltinBilinear,
        RunnerKind::BuiltinBicubic,
        RunnerKind::Command,
        RunnerKind::Server,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RunnerKind::BuiltinNearest => "builtin-nearest",
            RunnerKind::BuiltinBilinear => "builtin-bilinear",
            RunnerKind::BuiltinBicubic => "builtin-bicubic",
            RunnerKind::Command => "command",
            RunnerKind::Server => "server",
        }
    }

    pub fn is_external(self) -> bool {
        matches!(self, RunnerKind::Command | RunnerKind::Server)
    }
}

impl fmt::Display for RunnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value range the model expects. The harness always exchanges 8-bit PNG;
/// external runners receive this as `SRBENCH_INPUT_RANGE` and rescale
/// themselves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputRange {
    #[default]
    Byte255,
    Unit01,
}

impl InputRange {
    pub fn as_str(self) -> &'static str {
        match self {
            InputRange::Byte255 => "byte255",
            InputRange::Unit01 => "unit01",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerSpec {
    pub kind: RunnerKind,
    /// Program and arguments; `{input}`, `{output}` and `{scale}` are
    /// substituted per request in command mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argv: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env: BTreeMap<String, String>,
    #[serde(default = "default_startup_timeout")]
    pub startup_timeout: f64,
    /// Per-request limit in seconds; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
}

fn default_startup_timeout() -> f64 {
    DEFAULT_STARTUP_TIMEOUT
}

impl RunnerSpec {
    pub fn builtin(kind: RunnerKind) -> Self {
        Self {
            kind,
            argv: None,
            working_dir: None,
            env: BTreeMap::new(),
            startup_timeout: DEFAULT_STARTUP_TIMEOUT,
            timeout: None,
        }
    }

    pub fn external(kind: RunnerKind, argv: Vec<String>) -> Self {
        Self {
            argv: Some(argv),
            ..Self::builtin(kind)
        }
    }
}

/// Published numbers for one dataset and scale, copied from the model's
/// paper or model card. Never computed by the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedValues {
    pub dataset: String,
    pub scale: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: String,
    pub scales: BTreeSet<usize>,
    pub runner: RunnerSpec,
    #[serde(default)]
    pub input_range: InputRange,
    #[serde(default)]
    pub self_ensemble: bool,
    /// Shaving the model's authors used. Informational: a run always applies
    /// its own criteria so that every record shares one fingerprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shave_override: Option<ShaveRule>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reported: Vec<ReportedValues>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl ModelConfig {
    pub fn new(
        name: impl Into<String>,
        scales: impl IntoIterator<Item = usize>,
        runner: RunnerSpec,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            scales: scales.into_iter().collect(),
            runner,
            input_range: InputRange::Byte255,
            self_ensemble: false,
            shave_override: None,
            notes: String::new(),
            reported: Vec::new(),
        }
    }

    /// Reported values for a dataset (case-insensitive) and scale.
    pub fn reported_for(&self, dataset: &str, scale: usize) -> Option<&ReportedValues> {
        self.reported
            .iter()
            .find(|r| r.scale == scale && r.dataset.eq_ignore_ascii_case(dataset))
    }
}

/// One schema violation, located by a dotted field path such as
/// `runner.argv[2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Default)]
struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            path: path.into(),
            message: message.into(),
        });
    }
}

const TOP_LEVEL: [&str; 9] = [
    "schema_version",
    "name",
    "scales",
    "runner",
    "input_range",
    "self_ensemble",
    "shave_override",
    "notes",
    "reported",
];
const RUNNER_FIELDS: [&str; 6] = [
    "kind",
    "argv",
    "working_dir",
    "env",
    "startup_timeout",
    "timeout",
];

/// Reports every schema violation in a parsed config document.
pub fn validate_value(doc: &Value) -> Vec<Diagnostic> {
    let mut d = Diagnostics::default();
    let Some(obj) = doc.as_object() else {
        d.push("", "config must be a JSON object");
        return d.0;
    };
    unknown_fields(obj, &TOP_LEVEL, "", &mut d);

    match obj.get("schema_version") {
        None => {}
        Some(v) if v.as_u64() == Some(u64::from(SCHEMA_VERSION)) => {}
        Some(v) => d.push(
            "schema_version",
            format!("unsupported schema version {v}; expected {SCHEMA_VERSION}"),
        ),
    }

    match obj.get("name") {
        None => d.push("name", "missing required field"),
        Some(Value::String(s)) if s.is_empty() => d.push("name", "must be non-empty"),
        Some(Value::String(s)) if !is_identifier(s) => d.push(
            "name",
            format!("`{s}` is not an identifier (letters, digits, `-`, `_`, `.`, `+`)"),
        ),
        Some(Value::String(_)) => {}
        Some(_) => d.push("name", "must be a string"),
    }

    match obj.get("scales") {
        None => d.push("scales", "missing required field"),
        Some(Value::Array(a)) if a.is_empty() => d.push("scales", "scales must be non-empty"),
        Some(Value::Array(a)) => {
            let mut seen = BTreeSet::new();
            for (i, v) in a.iter().enumerate() {
                match v.as_u64() {
                    Some(s) if s >= 1 => {
                        if !seen.insert(s) {
                            d.push(format!("scales[{i}]"), format!("duplicate scale {s}"));
                        }
                    }
                    _ => d.push(
                        format!("scales[{i}]"),
                        format!("scale must be an integer >= 1, got {v}"),
                    ),
                }
            }
        }
        Some(_) => d.push("scales", "must be an array of integers"),
    }

    match obj.get("runner") {
        None => d.push("runner", "missing required field"),
        Some(Value::Object(r)) => validate_runner(r, &mut d),
        Some(_) => d.push("runner", "must be an object"),
    }

    if let Some(v) = obj.get("input_range") {
        if !matches!(v.as_str(), Some("byte255" | "unit01")) {
            d.push(
                "input_range",
                format!("expected \"byte255\" or \"unit01\", got {v}"),
            );
        }
    }
    if let Some(v) = obj.get("self_ensemble") {
        if !v.is_boolean() {
            d.push("self_ensemble", "must be a boolean");
        }
    }
    if let Some(v) = obj.get("shave_override") {
        if !v.is_null() {
            if let Err(e) = serde_json::from_value::<ShaveRule>(v.clone()) {
                d.push("shave_override", format!("invalid shave rule: {e}"));
            }
        }
    }
    if let Some(v) = obj.get("notes") {
        if !v.is_string() {
            d.push("notes", "must be a string");
        }
    }
    match obj.get("reported") {
        None => {}
        Some(Value::Array(a)) => {
            for (i, v) in a.iter().enumerate() {
                if let Err(e) = serde_json::from_value::<ReportedValues>(v.clone()) {
                    d.push(format!("reported[{i}]"), e.to_string());
                }
            }
        }
        Some(_) => d.push("reported", "must be an array"),
    }
    d.0
}

fn validate_runner(r: &Map<String, Value>, d: &mut Diagnostics) {
    unknown_fields(r, &RUNNER_FIELDS, "runner", d);
    let kind = match r.get("kind") {
        None => {
            d.push("runner.kind", "missing required field");
            None
        }
        Some(Value::String(s)) => match RunnerKind::ALL.iter().find(|k| k.as_str() == s) {
            Some(k) => Some(*k),
            None => {
                let known: Vec<_> = RunnerKind::ALL.iter().map(|k| k.as_str()).collect();
                d.push(
                    "runner.kind",
                    format!(
                        "unknown runner kind `{s}`; expected one of {}",
                        known.join(", ")
                    ),
                );
                None
            }
        },
        Some(_) => {
            d.push("runner.kind", "must be a string");
            None
        }
    };

    match (kind, r.get("argv")) {
        (Some(k), None) if k.is_external() => {
            d.push("runner.argv", format!("required for {k} runners"))
        }
        (Some(k), Some(_)) if !k.is_external() => {
            d.push("runner.argv", format!("not allowed for {k} runners"));
        }
        (_, Some(Value::Array(a))) => {
            if a.is_empty() {
                d.push("runner.argv", "must name a program");
            }
            for (i, v) in a.iter().enumerate() {
                if !v.is_string() {
                    d.push(format!("runner.argv[{i}]"), "must be a string");
                }
            }
            if kind == Some(RunnerKind::Command) {
                for placeholder in ["{input}", "{output}"] {
                    let present = a
                        .iter()
                        .filter_map(Value::as_str)
                        .any(|s| s.contains(placeholder));
                    if !present {
                        d.push(
                            "runner.argv",
                            format!("command runner needs the {placeholder} placeholder"),
                        );
                    }
                }
            }
        }
        (_, Some(_)) => d.push("runner.argv", "must be an array of strings"),
        _ => {}
    }

    if let Some(v) = r.get("working_dir") {
        if !v.is_string() {
            d.push("runner.working_dir", "must be a string");
        }
    }
    match r.get("env") {
        None => {}
        Some(Value::Object(m)) => {
            for (k, v) in m {
                if !v.is_string() {
                    d.push(format!("runner.env.{k}"), "must be a string");
                }
            }
        }
        Some(_) => d.push("runner.env", "must be an object of strings"),
    }
    for field in ["startup_timeout", "timeout"] {
        if let Some(v) = r.get(field) {
            if !v.as_f64().is_some_and(|t| t > 0.0 && t.is_finite()) {
                d.push(
                    format!("runner.{field}"),
                    format!("must be a positive number of seconds, got {v}"),
                );
            }
        }
    }
}

fn unknown_fields(obj: &Map<String, Value>, known: &[&str], prefix: &str, d: &mut Diagnostics) {
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        d.push(path, "unknown field");
    }
}

fn is_identifier(s: &str) -> bool {
    s.chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '+'))
}

/// Parses and validates a config document. `origin` names it in errors.
pub fn parse_model_config(text: &str, origin: &str) -> Result<ModelConfig> {
    let invalid = |diagnostics| Error::InvalidConfig {
        path: origin.to_string(),
        diagnostics,
    };
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        invalid(vec![Diagnostic {
            path: String::new(),
            message: format!("not valid JSON: {e}"),
        }])
    })?;
    let diagnostics = validate_value(&doc);
    if !diagnostics.is_empty() {
        return Err(invalid(diagnostics));
    }
    serde_json::from_value(doc).map_err(|e| {
        invalid(vec![Diagnostic {
            path: String::new(),
            message: e.to_string(),
        }])
    })
}

pub fn load_model_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model_config(&text, &path.display().to_string())
}

/// Every violation in the file; empty when the config is valid.
pub fn validate_config(path: impl AsRef<Path>) -> Result<Vec<Diagnostic>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(match serde_json::from_str::<Value>(&text) {
        Ok(doc) => validate_value(&doc),
        Err(e) => vec![Diagnostic {
            path: String::new(),
            message: format!("not valid JSON: {e}"),
        }],
    })
}

/// Expands each pattern (a path or a glob) and loads the matching configs in
/// pattern order, sorted by path within a pattern. Model names must be
/// unique.
pub fn load_model_configs(patterns: &[String]) -> Result<Vec<ModelConfig>> {
    let mut paths = Vec::new();
    for pattern in patterns {
        let matches: Vec<PathBuf> = glob::glob(pattern)
            .map_err(|e| Error::InvalidArgument(format!("bad glob `{pattern}`: {e}")))?
            .filter_map(std::result::Result::ok)
            .collect();
        if matches.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no model config matches `{pattern}`"
            )));
        }
        paths.extend(matches);
    }
    let mut configs: Vec<ModelConfig> = Vec::with_capacity(paths.len());
    for p in paths {
        let c = load_model_config(&p)?;
        if configs.iter().any(|o| o.name == c.name) {
            return Err(Error::DuplicateModel(c.name));
        }
        configs.push(c);
    }
    Ok(configs)
}
