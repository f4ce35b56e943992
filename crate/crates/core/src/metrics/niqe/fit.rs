//! Moment-matching estimators for the generalized Gaussian (GGD) and its
//! asymmetric variant (AGGD).
//!
//! The shape parameter is recovered by inverting the ratio
//! `r(a) = G(2/a)^2 / (G(1/a) G(3/a))` against a table sampled on
//! `[0.2, 10]` at step `0.001`, picking the nearest entry.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

pub const SHAPE_MIN: f64 = 0.2;
pub const SHAPE_MAX: f64 = 10.0;
pub const SHAPE_STEP: f64 = 0.001;

struct ShapeTable {
    shapes: Vec<f64>,
    ratios: Vec<f64>,
}

fn table() -> &'static ShapeTable {
    static TABLE: OnceLock<ShapeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ((SHAPE_MAX - SHAPE_MIN) / SHAPE_STEP).round() as usize + 1;
        let shapes: Vec<f64> = (0..n).map(|i| SHAPE_MIN + i as f64 * SHAPE_STEP).collect();
        let ratios = shapes.iter().map(|&a| moment_ratio(a)).collect();
        ShapeTable { shapes, ratios }
    })
}

/// `G(2/a)^2 / (G(1/a) G(3/a))`, which equals `E|x|^2 / E[x^2]` for a GGD
/// of shape `a`.
pub fn moment_ratio(shape: f64) -> f64 {
    (2.0 * ln_gamma(2.0 / shape) - ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape)).exp()
}

/// `sqrt(G(1/a) / G(3/a))`: converts a standard deviation into the GGD
/// scale parameter.
pub fn std_to_scale(shape: f64) -> f64 {
    (0.5 * (ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape))).exp()
}

/// Table entry whose ratio is closest to `r`; NaN propagates.
fn invert_ratio(r: f64) -> f64 {
    if !r.is_finite() {
        return f64::NAN;
    }
    let t = table();
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (i, &ri) in t.ratios.iter().enumerate() {
        let e = (ri - r) * (ri - r);
        if e < best_err {
            best_err = e;
            best = i;
        }
    }
    t.shapes[best]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    pub shape: f64,
    /// Standard deviation of the distribution.
    pub sigma: f64,
}

impl GgdParams {
    /// Scale parameter `beta` of `exp(-(|x|/beta)^shape)`.
    pub fn scale(&self) -> f64 {
        self.sigma * std_to_scale(self.shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdParams {
    pub shape: f64,
    /// Root mean square of the negative samples.
    pub sigma_left: f64,
    /// Root mean square of the positive samples.
    pub sigma_right: f64,
}

impl AggdParams {
    pub fn scale_left(&self) -> f64 {
        self.sigma_left * std_to_scale(self.shape)
    }

    pub fn scale_right(&self) -> f64 {
        self.sigma_right * std_to_scale(self.shape)
    }

    pub fn mean(&self) -> f64 {
        let g = (ln_gamma(2.0 / self.shape) - ln_gamma(1.0 / self.shape)).exp();
        (self.scale_right() - self.scale_left()) * g
    }

    pub fn is_finite(&self) -> bool {
        self.shape.is_finite() && self.sigma_left.is_finite() && self.sigma_right.is_finite()
    }
}

/// Symmetric special case of [`fit_aggd`].
pub fn fit_ggd(samples: &[f64]) -> GgdParams {
    let n = samples.len() as f64;
    let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean_sq = samples.iter().map(|v| v * v).sum::<f64>() / n;
    GgdParams {
        shape: invert_ratio(mean_abs * mean_abs / mean_sq),
        sigma: mean_sq.sqrt(),
    }
}

/// Fits an AGGD; returns NaN fields when either side has no samples.
pub fn fit_aggd(samples: &[f64]) -> AggdParams {
    let (mut left_sq, mut left_n, mut right_sq, mut right_n) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &v in samples {
        if v < 0.0 {
            left_sq += v * v;
            left_n += 1;
        } else if v > 0.0 {
            right_sq += v * v;
            right_n += 1;
        }
        abs_sum += v.abs();
        sq_sum += v * v;
    }
    let n = samples.len() as f64;
    let sigma_left = (left_sq / left_n as f64).sqrt();
    let sigma_right = (right_sq / right_n as f64).sqrt();
    let gamma_hat = sigma_left / sigma_right;
    let r_hat = (abs_sum / n).powi(2) / (sq_sum / n);
    let r_norm = r_hat * (gamma_hat.powi(3) + 1.0) * (gamma_hat + 1.0)
        / (gamma_hat * gamma_hat + 1.0).powi(2);
    AggdParams {
        shape: invert_ratio(r_norm),
        sigma_left,
        sigma_right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_known_points() {
        // Gaussian: E|x|^2 / E[x^2] = 2 / pi
        assert!((moment_ratio(2.0) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        // Laplacian: G(2)^2 / (G(1) G(3)) = 1/2
        assert!((moment_ratio(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn table_is_monotone_and_sized() {
        let t = table();
        assert_eq!(t.shapes.len(), 9801);
        assert!((t.shapes[9800] - 10.0).abs() < 1e-9);
        assert!(t.ratios.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn inversion_hits_grid_points() {
        for a in [0.3, 0.7, 1.0, 2.0, 5.5] {
            assert!((invert_ratio(moment_ratio(a)) - a).abs() < 1e-9);
        }
        assert!(invert_ratio(f64::NAN).is_nan());
    }

    #[test]
    fn one_sided_samples_give_nan() {
        let p = fit_aggd(&[1.0, 2.0, 3.0]);
        assert!(p.sigma_left.is_nan());
        assert!(!p.is_finite());
    }

    #[test]
    fn gaussian_scale_relation() {
        let p = GgdParams {
            shape: 2.0,
            sigma: 1.0,
        };
        assert!((p.scale() - std::f64::consts::SQRT_2).abs() < 1e-12);
    }
}
