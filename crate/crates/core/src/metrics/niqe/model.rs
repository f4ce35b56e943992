use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::color::extract_y;
use crate::error::{Error, Result};
use crate::image::PlanarImage;

use super::{
    mean_and_covariance, pooled_features, DEFAULT_PATCH_SIZE, DEFAULT_SHARPNESS_FRACTION,
    FEATURE_DIM,
};

pub const MIN_CORPUS_IMAGES: usize = 25;
const FORMAT: &str = "srbench-niqe-pristine";
const VERSION: u32 = 1;

/// Multivariate Gaussian fitted to patch features of undistorted images.
#[derive(Debug, Clone, PartialEq)]
pub struct NiqePristineModel {
    pub mean: Vec<f64>,
    /// Row-major `FEATURE_DIM x FEATURE_DIM`.
    pub cov: Vec<f64>,
    pub patch_size: usize,
    pub sharpness_fraction: f64,
    /// Number of patches the model was fitted on.
    pub patches: usize,
    /// Free-text description of the fitting corpus.
    pub source: String,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    feature_dim: usize,
    patch_size: usize,
    sharpness_fraction: f64,
    patches: usize,
    source: String,
    mean: Vec<f64>,
    cov: Vec<f64>,
}

impl NiqePristineModel {
    /// Model fitted on the deterministic synthetic corpus shipped with this
    /// crate. Scores against it are comparable with each other, not with
    /// values computed against other pristine models.
    pub fn bundled() -> Self {
        Self::from_json(include_str!(
            "../../../data/niqe_pristine_synthetic_v1.json"
        ))
        .expect("bundled NIQE model is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::NiqeModel(format!("malformed model file: {e}")))?;
        if file.format != FORMAT {
            return Err(Error::NiqeModel(format!(
                "unexpected format tag `{}`",
                file.format
            )));
        }
        if file.version != VERSION {
            return Err(Error::NiqeModel(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if file.feature_dim != FEATURE_DIM
            || file.mean.len() != FEATURE_DIM
            || file.cov.len() != FEATURE_DIM * FEATURE_DIM
        {
            return Err(Error::NiqeModel(format!(
                "dimension mismatch: expected {FEATURE_DIM} features, file declares {} with mean of {} and covariance of {} entries",
                file.feature_dim,
                file.mean.len(),
                file.cov.len()
            )));
        }
        let model = Self {
            mean: file.mean,
            cov: file.cov,
            patch_size: file.patch_size,
            sharpness_fraction: file.sharpness_fraction,
            patches: file.patches,
            source: file.source,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            feature_dim: FEATURE_DIM,
            patch_size: self.patch_size,
            sharpness_fraction: self.sharpness_fraction,
            patches: self.patches,
            source: self.source.clone(),
            mean: self.mean.clone(),
            cov: self.cov.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Checks shape, finiteness, symmetry and positive semi-definiteness.
    pub fn validate(&self) -> Result<()> {
        let n = FEATURE_DIM;
        if self.mean.len() != n || self.cov.len() != n * n {
            return Err(Error::NiqeModel("dimension mismatch".into()));
        }
        if self.mean.iter().chain(&self.cov).any(|v| !v.is_finite()) {
            return Err(Error::NiqeModel("non-finite entries".into()));
        }
        if self.patch_size < 2 || !self.patch_size.is_multiple_of(2) {
            return Err(Error::NiqeModel(format!(
                "invalid patch size {}",
                self.patch_size
            )));
        }
        if !(0.0..=1.0).contains(&self.sharpness_fraction) {
            return Err(Error::NiqeModel(format!(
                "sharpness fraction {} outside [0, 1]",
                self.sharpness_fraction
            )));
        }
        let scale = self.cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (self.cov[i * n + j] - self.cov[j * n + i]).abs() > 1e-12 * scale {
                    return Err(Error::NiqeModel(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &self.cov));
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-8 * scale {
            return Err(Error::NiqeModel(format!(
                "covariance is not positive semi-definite (eigenvalue {min:e})"
            )));
        }
        Ok(())
    }
}

/// Fits a pristine model on a corpus of undistorted images. Color images
/// are reduced to their BT.601 luma first, matching what Y-channel criteria
/// feed to the metric.
pub fn fit_pristine_model(corpus: &[PlanarImage]) -> Result<NiqePristineModel> {
    fit_pristine_model_with(corpus, DEFAULT_PATCH_SIZE, DEFAULT_SHARPNESS_FRACTION, "")
}

pub fn fit_pristine_model_with(
    corpus: &[PlanarImage],
    patch_size: usize,
    sharpness_fraction: f64,
    source: &str,
) -> Result<NiqePristineModel> {
    if corpus.len() < MIN_CORPUS_IMAGES {
        return Err(Error::InsufficientData(format!(
            "pristine corpus has {} images; at least {MIN_CORPUS_IMAGES} are required",
            corpus.len()
        )));
    }
    let luma = corpus.iter().map(extract_y).collect::<Result<Vec<_>>>()?;
    let min = 2 * patch_size;
    for (i, img) in luma.iter().enumerate() {
        if img.width() < min || img.height() < min {
            return Err(Error::TooSmall(format!(
                "corpus image {i} is {}x{}; at least {min}x{min} is required",
                img.width(),
                img.height(),
            )));
        }
    }
    let rows = pooled_features(&luma, patch_size, sharpness_fraction)?;
    let (mean, cov) = mean_and_covariance(&rows)?;
    let model = NiqePristineModel {
        mean,
        cov,
        patch_size,
        sharpness_fraction,
        patches: rows.len(),
        source: source.to_string(),
    };
    model.validate()?;
    Ok(model)
}
