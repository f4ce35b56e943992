//! Regenerates `data/niqe_pristine_synthetic_v1.json`.
//!
//! cargo run --release -p srbench-core --example fit_synthetic_pristine -- data/niqe_pristine_synthetic_v1.json

use srbench_core::metrics::niqe::{
    fit_pristine_model_with, DEFAULT_PATCH_SIZE, DEFAULT_SHARPNESS_FRACTION,
};
use srbench_core::synthetic::dead_leaves;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "niqe_pristine_synthetic_v1.json".into());
    let corpus: Vec<_> = (0..40)
        .map(|seed| dead_leaves(480, 384, 1000 + seed))
        .collect();
    let model = fit_pristine_model_with(
        &corpus,
        DEFAULT_PATCH_SIZE,
        DEFAULT_SHARPNESS_FRACTION,
        "synthetic dead-leaves corpus: 40 images, 480x384, seeds 1000..1040",
    )?;
    model.save(&out)?;
    eprintln!("wrote {out} ({} patches)", model.patches);
    Ok(())
}
