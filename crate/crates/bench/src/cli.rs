//! The `srbench` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, unknown
//! presets, config violations), 2 when the work itself failed, including
//! runs where some images errored. Record files are kept in every case.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use srbench_core::metrics::niqe::{
    fit_pristine_model_with, DEFAULT_PATCH_SIZE, DEFAULT_SHARPNESS_FRACTION,
};
use srbench_core::{load_png, EvaluatorRegistry, NiqePristineModel};

use crate::error::{Error, Result};
use crate::harness::{
    aggregate, emit_scatter, emit_table, prepare_dataset, read_records, run_benchmark, DatasetSpec,
    EnsembleMode, RecordWriter, RunManifest, RunOptions, TableFormat,
};
use crate::presets::resolve_criteria;
use crate::runtime::{
    default_device_label, load_model_configs, validate_config, Model, TimingOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "srbench",
    version,
    about = "Benchmark super-resolution models under explicit evaluation criteria"
)]
pub struct Cli {
    /// Output style for results and listings.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dataset (HR copies, bicubic LR images, manifest) from a folder of PNGs.
    Prepare(PrepareArgs),
    /// Run models on a dataset and write one record per image.
    Run(RunArgs),
    /// Summarize a record file as a table and optionally a scatter plot.
    Report(ReportArgs),
    /// Show the model configs matched by globs.
    ListModels(ListModelsArgs),
    /// Show the registered metrics and the criteria presets.
    ListEvaluators,
    /// Check model config files and print every violation.
    ValidateConfig(ValidateArgs),
    /// Fit a NIQE pristine model on a folder of undistorted images.
    FitNiqe(FitNiqeArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Folder of high-resolution PNG images.
    #[arg(long)]
    pub hr: PathBuf,
    /// Dataset root to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated downscaling factors.
    #[arg(long, value_delimiter = ',', required = true)]
    pub scales: Vec<usize>,
    /// Overwrite files whose contents differ.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    Force,
    Config,
    Off,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Model config files or globs, e.g. 'models/*.json'.
    #[arg(long, num_args = 1.., required = true)]
    pub models: Vec<String>,
    /// Dataset root created by `prepare`.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub scale: usize,
    /// Preset name or path to a criteria JSON file.
    #[arg(long, default_value = "y-float-shave-scale")]
    pub criteria: String,
    /// Measure runtimes. Runs images one at a time.
    #[arg(long)]
    pub timing: bool,
    /// Untimed passes per model before measuring.
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Timed passes per image.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Which models use self-ensemble.
    #[arg(long, value_enum, default_value_t = EnsembleArg::Config)]
    pub self_ensemble: EnsembleArg,
    /// Record file to write.
    #[arg(long, default_value = "srbench-records.ndjson")]
    pub records: PathBuf,
    /// Append to the record file instead of replacing it.
    #[arg(long)]
    pub append: bool,
    /// Hardware description stored with timings.
    #[arg(long)]
    pub device_label: Option<String>,
    /// NIQE pristine model file; the bundled one is used otherwise.
    #[arg(long)]
    pub niqe_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Record file written by `run`.
    #[arg(long)]
    pub records: PathBuf,
    /// Table style. `--format json` implies `json`.
    #[arg(long, value_enum, default_value_t = TableArg::Markdown)]
    pub table: TableArg,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scatter plot of two metrics, as `x:y`, e.g. `psnr:niqe`.
    #[arg(long)]
    pub scatter: Option<String>,
    /// Models to leave out of the scatter plot.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    /// Path prefix for the scatter outputs (`.svg` and `.csv` are appended).
    #[arg(long, default_value = "scatter")]
    pub scatter_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ListModelsArgs {
    /// Model config files or globs.
    #[arg(long, num_args = 1.., default_value = "models/*.json")]
    pub models: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Config files to check.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitNiqeArgs {
    /// Glob matching the pristine PNG images, e.g. 'pristine/*.png'.
    #[arg(long)]
    pub images: String,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
    pub patch_size: usize,
    /// Keep patches whose sharpness is at least this fraction of the maximum.
    #[arg(long, default_value_t = DEFAULT_SHARPNESS_FRACTION)]
    pub sharpness: f64,
    /// Description of the corpus stored in the model file.
    #[arg(long, default_value = "")]
    pub source: String,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidArgument(_)
                | Error::InvalidConfig { .. }
                | Error::DuplicateModel(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("json value")
    )
    .map_err(io_out)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let json = cli.format == OutputFormat::Json;
    match &cli.command {
        Command::Prepare(a) => prepare(a, json, out),
        Command::Run(a) => run(a, json, out, err),
        Command::Report(a) => report(a, json, out),
        Command::ListModels(a) => list_models(a, json, out),
        Command::ListEvaluators => list_evaluators(json, out),
        Command::ValidateConfig(a) => validate(a, json, out),
        Command::FitNiqe(a) => fit_niqe(a, json, out),
    }
}

fn prepare(a: &PrepareArgs, json: bool, out: &mut dyn Write) -> Result<i32> {
    let scales: BTreeSet<usize> = a.scales.iter().copied().collect();
    let r = prepare_dataset(&a.hr, &a.out, &scales, a.force)?;
    if json {
        print_json(
            out,
            &json!({
                "dataset": r.dataset.name,
                "root": r.dataset.root,
                "images": r.dataset.stems.len(),
                "scales": r.dataset.scales,
                "written": r.written,
                "unchanged": r.unchanged,
                "crops": r.manifest.crops,
            }),
        )?;
    } else {
        writeln!(
            out,
            "prepared `{}` at {}: {} images, scales {:?}; {} files written, {} unchanged",
            r.dataset.name,
            a.out.display(),
            r.dataset.stems.len(),
            r.dataset.scales,
            r.written.len(),
            r.unchanged.len()
        )
        .map_err(io_out)?;
        for c in &r.manifest.crops {
            writeln!(
                out,
                "  {} x{}: HR {}x{} cropped to {}x{}",
                c.stem, c.scale, c.hr_width, c.hr_height, c.crop.width, c.crop.height
            )
            .map_err(io_out)?;
        }
    }
    Ok(EXIT_OK)
}

fn run(a: &RunArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let preset = resolve_criteria(&a.criteria)?;
    let ensemble = match a.self_ensemble {
        EnsembleArg::Force => EnsembleMode::Force,
        EnsembleArg::Config => EnsembleMode::Config,
        EnsembleArg::Off => EnsembleMode::Off,
    };
    let device = a.device_label.clone().unwrap_or_else(default_device_label);
    let models: Vec<Model> = load_model_configs(&a.models)?
        .into_iter()
        .map(|c| Model::new(c).with_device_label(device.clone()))
        .collect();
    if let Some(expected) = preset.self_ensemble {
        for m in &models {
            if ensemble.applies_to(m) != expected {
                let _ =
                    writeln!(
                    err,
                    "warning: `{}` runs {} self-ensemble but criteria `{}` were published {} it",
                    m.name(),
                    if ensemble.applies_to(m) { "with" } else { "without" },
                    preset.name,
                    if expected { "with" } else { "without" },
                );
            }
        }
    }
    let dataset = DatasetSpec::open(&a.dataset)?;
    let niqe = match &a.niqe_model {
        Some(p) => NiqePristineModel::load(p)?,
        None => NiqePristineModel::bundled(),
    };
    let registry = EvaluatorRegistry::with_builtins(Arc::new(niqe));
    let options = RunOptions {
        criteria: preset.criteria.clone(),
        timing: a.timing.then_some(TimingOptions {
            warmup: a.warmup,
            repeats: a.repeats,
        }),
        ensemble,
        environment: device,
    };

    let mut writer = RecordWriter::create(&a.records, a.append)?;
    let result = run_benchmark(&models, &dataset, a.scale, &registry, &options, |r| {
        writer.write(r)
    });
    for m in &models {
        m.shutdown();
    }
    let outcome = result?;
    outcome.manifest.save(RunManifest::path_for(&a.records))?;
    for note in &outcome.manifest.notes {
        let _ = writeln!(err, "warning: {note}");
    }

    let summary = aggregate(&outcome.records)?;
    if json {
        let mut s = emit_table(&summary, TableFormat::Json);
        s.pop();
        writeln!(out, "{s}").map_err(io_out)?;
    } else {
        write!(out, "{}", emit_table(&summary, TableFormat::Markdown)).map_err(io_out)?;
        writeln!(out, "records: {}", a.records.display()).map_err(io_out)?;
    }
    let failed = outcome.errored();
    if failed > 0 {
        let _ = writeln!(
            err,
            "error: {failed} of {} images failed; see {}",
            outcome.records.len(),
            a.records.display()
        );
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}

fn report(a: &ReportArgs, json: bool, out: &mut dyn Write) -> Result<i32> {
    let records = read_records(&a.records)?;
    let summary = aggregate(&records)?;
    let format = match (json, a.table) {
        (true, _) | (_, TableArg::Json) => TableFormat::Json,
        (_, TableArg::Csv) => TableFormat::Csv,
        (_, TableArg::Markdown) => TableFormat::Markdown,
    };
    let table = emit_table(&summary, format);
    match &a.out {
        Some(p) => std::fs::write(p, &table).map_err(|e| Error::io(p, e))?,
        None => write!(out, "{table}").map_err(io_out)?,
    }
    if let Some(spec) = &a.scatter {
        let (x, y) = spec
            .split_once(':')
            .filter(|(x, y)| !x.is_empty() && !y.is_empty())
            .ok_or_else(|| {
                Error::InvalidArgument(format!("--scatter expects `x:y`, got `{spec}`"))
            })?;
        let plot = emit_scatter(&summary, x, y, &a.exclude)?;
        let base = a.scatter_out.as_os_str().to_owned();
        for (ext, body) in [(".svg", &plot.svg), (".csv", &plot.csv)] {
            let mut p = base.clone();
            p.push(ext);
            let p = PathBuf::from(p);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(EXIT_OK)
}

fn list_models(a: &ListModelsArgs, json: bool, out: &mut dyn Write) -> Result<i32> {
    let configs = load_model_configs(&a.models)?;
    if json {
        print_json(
            out,
            &serde_json::to_value(&configs).expect("configs serialize"),
        )?;
        return Ok(EXIT_OK);
    }
    for c in &configs {
        let scales: Vec<String> = c.scales.iter().map(|s| format!("x{s}")).collect();
        writeln!(
            out,
            "{:<20} {:<18} {:<14} self_ensemble={}",
            c.name,
            c.runner.kind,
            scales.join(","),
            c.self_ensemble
        )
        .map_err(io_out)?;
    }
    Ok(EXIT_OK)
}

fn list_evaluators(json: bool, out: &mut dyn Write) -> Result<i32> {
    let registry = EvaluatorRegistry::with_builtins(Arc::new(NiqePristineModel::bundled()));
    let presets = crate::presets::presets();
    if json {
        let evaluators: Vec<_> = registry
            .iter()
            .map(|e| json!({"id": e.id(), "description": e.description(), "higher_is_better": e.higher_is_better()}))
            .collect();
        return print_json(out, &json!({"evaluators": evaluators, "presets": presets}))
            .map(|_| EXIT_OK);
    }
    writeln!(out, "evaluators:").map_err(io_out)?;
    for e in registry.iter() {
        let dir = if e.higher_is_better() {
            "higher is better"
        } else {
            "lower is better"
        };
        writeln!(out, "  {:<10} {} ({dir})", e.id(), e.description()).map_err(io_out)?;
    }
    writeln!(out, "criteria presets:").map_err(io_out)?;
    for p in &presets {
        writeln!(out, "  {:<30} {}", p.name, p.description).map_err(io_out)?;
    }
    Ok(EXIT_OK)
}

fn validate(a: &ValidateArgs, json: bool, out: &mut dyn Write) -> Result<i32> {
    let mut any = false;
    let mut results = Vec::new();
    for path in &a.configs {
        let diags = validate_config(path)?;
        any |= !diags.is_empty();
        if json {
            let list: Vec<_> = diags
                .iter()
                .map(|d| json!({"path": d.path, "message": d.message}))
                .collect();
            results.push(json!({"file": path, "valid": diags.is_empty(), "diagnostics": list}));
        } else if diags.is_empty() {
            writeln!(out, "{}: ok", path.display()).map_err(io_out)?;
        } else {
            for d in &diags {
                writeln!(out, "{}: {d}", path.display()).map_err(io_out)?;
            }
        }
    }
    if json {
        print_json(out, &serde_json::Value::Array(results))?;
    }
    Ok(if any { EXIT_USAGE } else { EXIT_OK })
}

fn fit_niqe(a: &FitNiqeArgs, json: bool, out: &mut dyn Write) -> Result<i32> {
    let paths: Vec<PathBuf> = glob::glob(&a.images)
        .map_err(|e| Error::InvalidArgument(format!("bad glob `{}`: {e}", a.images)))?
        .filter_map(std::result::Result::ok)
        .collect();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no images match `{}`",
            a.images
        )));
    }
    let corpus = paths
        .iter()
        .map(load_png)
        .collect::<srbench_core::Result<Vec<_>>>()?;
    let source = if a.source.is_empty() {
        format!("{} images matching {}", corpus.len(), a.images)
    } else {
        a.source.clone()
    };
    let model = fit_pristine_model_with(&corpus, a.patch_size, a.sharpness, &source)?;
    model.save(&a.out)?;
    if json {
        print_json(
            out,
            &json!({"out": a.out, "images": corpus.len(), "patches": model.patches}),
        )?;
    } else {
        writeln!(
            out,
            "wrote {} ({} images, {} patches)",
            a.out.display(),
            corpus.len(),
            model.patches
        )
        .map_err(io_out)?;
    }
    Ok(EXIT_OK)
}
