//! Named evaluation criteria matching the conditions under which popular
//! models were published. The definitions are JSON files under
//! `presets/criteria/`, embedded at build time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use srbench_core::EvalCriteria;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaPreset {
    pub name: String,
    /// Models whose published numbers used these conditions.
    #[serde(default)]
    pub rows: Vec<String>,
    #[serde(default)]
    pub description: String,
    /// Whether those published numbers used self-ensemble. Informational:
    /// the run's ensemble mode decides what actually happens.
    #[serde(default)]
    pub self_ensemble: Option<bool>,
    pub criteria: EvalCriteria,
}

const BUILTIN: [&str; 4] = [
    include_str!("../presets/criteria/y-integer-shave-scale-se.json"),
    include_str!("../presets/criteria/rgb-integer-shave-6+scale-se.json"),
    include_str!("../presets/criteria/y-float-shave-scale-se.json"),
    include_str!("../presets/criteria/y-float-shave-scale.json"),
];

fn parse(text: &str, origin: &str) -> Result<CriteriaPreset> {
    let mut p: CriteriaPreset =
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("{origin}: {e}")))?;
    p.criteria.normalize();
    Ok(p)
}

/// The built-in presets, in table order.
pub fn presets() -> Vec<CriteriaPreset> {
    BUILTIN
        .iter()
        .map(|t| parse(t, "built-in preset").expect("built-in presets are valid"))
        .collect()
}

pub fn preset(name: &str) -> Option<CriteriaPreset> {
    presets().into_iter().find(|p| p.name == name)
}

/// Resolves `--criteria`: a built-in preset name, or a JSON file holding
/// either a preset or a bare criteria object.
pub fn resolve_criteria(arg: &str) -> Result<CriteriaPreset> {
    if let Some(p) = preset(arg) {
        return Ok(p);
    }
    let path = Path::new(arg);
    if !path.is_file() {
        let names: Vec<String> = presets().into_iter().map(|p| p.name).collect();
        return Err(Error::InvalidArgument(format!(
            "`{arg}` is neither a preset ({}) nor a file",
            names.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if value.get("criteria").is_some() {
        return parse(&text, arg);
    }
    let mut criteria: EvalCriteria =
        serde_json::from_value(value).map_err(|e| Error::json(path, e))?;
    criteria.normalize();
    Ok(CriteriaPreset {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        rows: Vec::new(),
        description: String::new(),
        self_ensemble: None,
        criteria,
    })
}
