//! Natural image quality evaluator.
//!
//! The image is split into square patches. For every patch, at full and half
//! resolution, we fit a GGD to the MSCN coefficients and an AGGD to each of
//! the four neighbor-product maps, giving 18 features per scale. Patches
//! whose mean local deviation is below a fraction of the sharpest patch are
//! dropped. The quality score is the Mahalanobis-like distance between the
//! multivariate Gaussian of the surviving features and a pristine model.

mod fit;
mod model;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};
use crate::resample::{resize, ResampleKernel};

use super::MetricResult;

pub use fit::{fit_aggd, fit_ggd, moment_ratio, AggdParams, GgdParams};
pub use model::{
    fit_pristine_model, fit_pristine_model_with, NiqePristineModel, MIN_CORPUS_IMAGES,
};

pub const FEATURES_PER_SCALE: usize = 18;
pub const FEATURE_DIM: usize = 2 * FEATURES_PER_SCALE;
pub const DEFAULT_PATCH_SIZE: usize = 96;
pub const DEFAULT_SHARPNESS_FRACTION: f64 = 0.75;
/// Singular values below this are discarded by the pseudo-inverse.
pub const PINV_TOLERANCE: f64 = 1e-10;

const LOCAL_WINDOW: usize = 7;
const LOCAL_SIGMA: f64 = 7.0 / 6.0;
const MSCN_C: f64 = 1.0;

/// Neighbor offsets `(dy, dx)`: horizontal, vertical, main and
/// anti-diagonal.
const SHIFTS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

pub type FeatureVector = [f64; FEATURE_DIM];

/// Local mean and standard deviation under a normalized Gaussian window,
/// with replicated borders.
fn local_stats(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let r = (LOCAL_WINDOW / 2) as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * LOCAL_SIGMA * LOCAL_SIGMA)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);

    let blur = |src: &[f64]| -> Vec<f64> {
        let mut tmp = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                tmp[y * w + x] = taps
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                        t * src[y * w + sx]
                    })
                    .sum();
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                out[y * w + x] = taps
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                        t * tmp[sy * w + x]
                    })
                    .sum();
            }
        }
        out
    };

    let mu = blur(plane);
    let sq: Vec<f64> = plane.iter().map(|v| v * v).collect();
    let mu_sq = blur(&sq);
    let sigma = mu
        .iter()
        .zip(&mu_sq)
        .map(|(m, m2)| (m2 - m * m).abs().sqrt())
        .collect();
    (mu, sigma)
}

/// Mean-subtracted contrast-normalized coefficients and the local deviation
/// field they were normalized by.
pub fn mscn(img: &PlanarImage) -> Result<(Vec<f64>, Vec<f64>)> {
    expect_gray(img)?;
    let (w, h) = img.dims();
    let plane = img.plane(0);
    let (mu, sigma) = local_stats(plane, w, h);
    let coeffs = plane
        .iter()
        .zip(mu.iter().zip(&sigma))
        .map(|(v, (m, s))| (v - m) / (s + MSCN_C))
        .collect();
    Ok((coeffs, sigma))
}

fn patch(field: &[f64], w: usize, px: usize, py: usize, size: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(size * size);
    for y in py * size..(py + 1) * size {
        out.extend_from_slice(&field[y * w + px * size..y * w + (px + 1) * size]);
    }
    out
}

/// 18 features of one square MSCN patch. Neighbor products wrap around
/// inside the patch.
fn patch_features(coeffs: &[f64], size: usize) -> [f64; FEATURES_PER_SCALE] {
    let mut f = [0.0; FEATURES_PER_SCALE];
    let g = fit_ggd(coeffs);
    f[0] = g.shape;
    f[1] = g.scale();
    let n = size as isize;
    let mut products = vec![0.0; size * size];
    for (k, &(dy, dx)) in SHIFTS.iter().enumerate() {
        for y in 0..n {
            let sy = (y - dy).rem_euclid(n);
            for x in 0..n {
                let sx = (x - dx).rem_euclid(n);
                products[(y * n + x) as usize] =
                    coeffs[(y * n + x) as usize] * coeffs[(sy * n + sx) as usize];
            }
        }
        let a = fit_aggd(&products);
        let base = 2 + 4 * k;
        f[base] = a.shape;
        f[base + 1] = a.mean();
        f[base + 2] = a.scale_left();
        f[base + 3] = a.scale_right();
    }
    f
}

/// Per-patch feature vectors that survive sharpness selection.
///
/// The image is cropped from the top-left to a whole number of patches. The
/// half-resolution pass uses the same patch grid at half the patch size.
pub fn extract_features(
    img: &PlanarImage,
    patch_size: usize,
    sharpness_fraction: f64,
) -> Result<Vec<FeatureVector>> {
    expect_gray(img)?;
    if patch_size < 2 || !patch_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "NIQE patch size must be even, got {patch_size}"
        )));
    }
    let (w, h) = img.dims();
    if w < 2 * patch_size || h < 2 * patch_size {
        return Err(Error::TooSmall(format!(
            "NIQE needs at least {0}x{0} pixels, got {w}x{h}",
            2 * patch_size
        )));
    }
    let (cols, rows) = (w / patch_size, h / patch_size);
    let (cw, ch) = (cols * patch_size, rows * patch_size);
    let full = img.crop(0, 0, cw, ch)?;
    let half = resize(&full, cw / 2, ch / 2, ResampleKernel::Bicubic, true)?;

    let (m1, sigma1) = mscn(&full)?;
    let (m2, _) = mscn(&half)?;
    let half_size = patch_size / 2;

    let mut sharpness = Vec::with_capacity(rows * cols);
    let mut feats = Vec::with_capacity(rows * cols);
    for py in 0..rows {
        for px in 0..cols {
            let s = patch(&sigma1, cw, px, py, patch_size);
            sharpness.push(s.iter().sum::<f64>() / s.len() as f64);
            let a = patch_features(&patch(&m1, cw, px, py, patch_size), patch_size);
            let b = patch_features(&patch(&m2, cw / 2, px, py, half_size), half_size);
            let mut v = [0.0; FEATURE_DIM];
            v[..FEATURES_PER_SCALE].copy_from_slice(&a);
            v[FEATURES_PER_SCALE..].copy_from_slice(&b);
            feats.push(v);
        }
    }

    let max_sharp = sharpness.iter().copied().fold(0.0, f64::max);
    let threshold = sharpness_fraction * max_sharp;
    Ok(feats
        .into_iter()
        .zip(sharpness)
        .filter(|(v, s)| *s > threshold && v.iter().all(|x| x.is_finite()))
        .map(|(v, _)| v)
        .collect())
}

/// Sample mean and unbiased covariance (row-major) of feature vectors.
pub fn mean_and_covariance(rows: &[FeatureVector]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} qualifying NIQE patch(es); at least 2 are needed"
        )));
    }
    let mut mean = vec![0.0; FEATURE_DIM];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; FEATURE_DIM * FEATURE_DIM];
    for r in rows {
        for i in 0..FEATURE_DIM {
            let di = r[i] - mean[i];
            for j in i..FEATURE_DIM {
                cov[i * FEATURE_DIM + j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..FEATURE_DIM {
        for j in i..FEATURE_DIM {
            let v = cov[i * FEATURE_DIM + j] / (n - 1) as f64;
            cov[i * FEATURE_DIM + j] = v;
            cov[j * FEATURE_DIM + i] = v;
        }
    }
    Ok((mean, cov))
}

/// `sqrt(d' pinv((cov_a + cov_b) / 2) d)` with `d = mean_a - mean_b`.
pub fn mvg_distance(mean_a: &[f64], cov_a: &[f64], mean_b: &[f64], cov_b: &[f64]) -> Result<f64> {
    let n = mean_a.len();
    if mean_b.len() != n || cov_a.len() != n * n || cov_b.len() != n * n {
        return Err(Error::DimensionMismatch(
            "NIQE mean/covariance dimensions disagree".into(),
        ));
    }
    let pooled = DMatrix::from_fn(n, n, |i, j| (cov_a[i * n + j] + cov_b[i * n + j]) / 2.0);
    let pinv = pooled
        .svd(true, true)
        .pseudo_inverse(PINV_TOLERANCE)
        .map_err(|e| Error::NiqeModel(e.to_string()))?;
    let d = DVector::from_fn(n, |i, _| mean_a[i] - mean_b[i]);
    let q = (d.transpose() * pinv * &d)[(0, 0)];
    Ok(q.max(0.0).sqrt())
}

/// NIQE score of a single-channel image against a pristine model. Lower is
/// better.
pub fn niqe(img: &PlanarImage, model: &NiqePristineModel) -> Result<MetricResult> {
    let rows = extract_features(img, model.patch_size, model.sharpness_fraction)?;
    let (mean, cov) = mean_and_covariance(&rows)?;
    let d = mvg_distance(&model.mean, &model.cov, &mean, &cov)?;
    Ok(MetricResult::ok("niqe", d))
}

/// Features of many images in parallel, in input order.
pub(crate) fn pooled_features(
    corpus: &[PlanarImage],
    patch_size: usize,
    sharpness_fraction: f64,
) -> Result<Vec<FeatureVector>> {
    let per_image: Vec<Result<Vec<FeatureVector>>> = corpus
        .par_iter()
        .map(|img| extract_features(img, patch_size, sharpness_fraction))
        .collect();
    let mut all = Vec::new();
    for r in per_image {
        all.extend(r?);
    }
    Ok(all)
}

fn expect_gray(img: &PlanarImage) -> Result<()> {
    if img.colorspace() != ColorSpace::Gray {
        return Err(Error::WrongColorSpace {
            expected: ColorSpace::Gray,
            actual: img.colorspace(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_image_has_zero_mscn() {
        let img = PlanarImage::filled(20, 20, ColorSpace::Gray, 77.0).unwrap();
        let (m, s) = mscn(&img).unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-9));
        // sqrt of the cancellation residue in E[x^2] - E[x]^2
        assert!(s.iter().all(|v| v.abs() < 1e-5));
    }

    #[test]
    fn covariance_is_symmetric_and_unbiased() {
        let rows: Vec<FeatureVector> = (0..5)
            .map(|i| {
                let mut v = [0.0; FEATURE_DIM];
                for (j, x) in v.iter_mut().enumerate() {
                    *x = ((i * 7 + j * 3) % 11) as f64;
                }
                v
            })
            .collect();
        let (mean, cov) = mean_and_covariance(&rows).unwrap();
        let col0: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let m0 = col0.iter().sum::<f64>() / 5.0;
        assert!((mean[0] - m0).abs() < 1e-12);
        let var0 = col0.iter().map(|x| (x - m0).powi(2)).sum::<f64>() / 4.0;
        assert!((cov[0] - var0).abs() < 1e-12);
        for i in 0..FEATURE_DIM {
            for j in 0..FEATURE_DIM {
                assert_eq!(cov[i * FEATURE_DIM + j], cov[j * FEATURE_DIM + i]);
            }
        }
        assert!(mean_and_covariance(&rows[..1]).is_err());
    }

    #[test]
    fn distance_with_identity_covariance() {
        let n = 3;
        let eye: Vec<f64> = (0..n * n)
            .map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 })
            .collect();
        let d = mvg_distance(&[0.0, 0.0, 0.0], &eye, &[3.0, 4.0, 0.0], &eye).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
        let zero = vec![0.0; n * n];
        // singular pooled covariance falls back to the pseudo-inverse
        assert_eq!(
            mvg_distance(&[1.0, 2.0, 3.0], &zero, &[1.0, 2.0, 3.0], &zero).unwrap(),
            0.0
        );
    }

    #[test]
    fn small_or_color_input_rejected() {
        let small = PlanarImage::filled(150, 300, ColorSpace::Gray, 0.0).unwrap();
        assert!(matches!(
            extract_features(&small, 96, 0.75),
            Err(Error::TooSmall(_))
        ));
        let rgb = PlanarImage::filled(200, 200, ColorSpace::Rgb, 0.0).unwrap();
        assert!(matches!(
            extract_features(&rgb, 96, 0.75),
            Err(Error::WrongColorSpace { .. })
        ));
    }
}
