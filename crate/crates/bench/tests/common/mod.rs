#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use rand::RngExt;
use srbench::harness::{prepare_dataset, DatasetSpec};
use srbench::runtime::{Model, ModelConfig, RunnerKind, RunnerSpec};
use srbench_core::{save_png, ColorSpace, PlanarImage};

pub const STUB: &str = env!("CARGO_BIN_EXE_srbench-stub");
pub const SRBENCH: &str = env!("CARGO_BIN_EXE_srbench");

pub fn builtin(name: &str, kind: RunnerKind, scales: &[usize]) -> Model {
    Model::new(ModelConfig::new(
        name,
        scales.iter().copied(),
        RunnerSpec::builtin(kind),
    ))
}

pub fn command_argv(extra: &[&str]) -> Vec<String> {
    let mut argv: Vec<String> = [
        STUB, "--input", "{input}", "--output", "{output}", "--scale", "{scale}",
    ]
    .map(String::from)
    .to_vec();
    argv.extend(extra.iter().map(|s| s.to_string()));
    argv
}

pub fn server_argv(extra: &[&str]) -> Vec<String> {
    let mut argv = vec![STUB.to_string(), "--server".into()];
    argv.extend(extra.iter().map(|s| s.to_string()));
    argv
}

pub fn command_model(name: &str, scales: &[usize], extra: &[&str]) -> Model {
    let spec = RunnerSpec::external(RunnerKind::Command, command_argv(extra));
    Model::new(ModelConfig::new(name, scales.iter().copied(), spec))
}

pub fn server_model(name: &str, scales: &[usize], extra: &[&str]) -> Model {
    let spec = RunnerSpec::external(RunnerKind::Server, server_argv(extra));
    Model::new(ModelConfig::new(name, scales.iter().copied(), spec))
}

/// Image with integer samples, so it survives the PNG boundary unchanged.
pub fn random_image(rng: &mut impl rand::Rng, w: usize, h: usize, cs: ColorSpace) -> PlanarImage {
    let data = (0..w * h * cs.channels())
        .map(|_| rng.random_range(0..=255) as f64)
        .collect();
    PlanarImage::new(w, h, cs, data).unwrap()
}

/// Writes `images` as HR PNGs under `dir/src` and prepares `dir/<name>`.
pub fn make_dataset(
    dir: &Path,
    name: &str,
    images: &[PlanarImage],
    scales: &[usize],
) -> DatasetSpec {
    let src = dir.join(format!("{name}-src"));
    std::fs::create_dir_all(&src).unwrap();
    for (i, img) in images.iter().enumerate() {
        save_png(img, src.join(format!("img{i:02}.png"))).unwrap();
    }
    let scales: BTreeSet<usize> = scales.iter().copied().collect();
    prepare_dataset(&src, dir.join(name), &scales, false)
        .unwrap()
        .dataset
}
