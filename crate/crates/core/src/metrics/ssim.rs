//! Structural similarity following the original authors' reference code:
//! 11x11 Gaussian window (sigma 1.5), statistics over the valid region only,
//! and an optional box-filter-and-decimate step for large images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};

use super::MetricResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window_size: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub auto_downsample: bool,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_size: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            auto_downsample: true,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn window_1d(&self) -> Vec<f64> {
        let r = (self.window_size as f64 - 1.0) / 2.0;
        let taps: Vec<f64> = (0..self.window_size)
            .map(|i| {
                let x = i as f64 - r;
                (-(x * x) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    /// Decimation factor applied when `auto_downsample` is on.
    pub fn downsample_factor(&self, width: usize, height: usize) -> usize {
        if !self.auto_downsample {
            return 1;
        }
        ((width.min(height) as f64 / 256.0).round() as usize).max(1)
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    // one reflection is enough for kernels narrower than the image
    if i < 0 {
        i = -i - 1;
    }
    if i >= n {
        i = 2 * n - 1 - i;
    }
    i.clamp(0, n - 1) as usize
}

/// `f x f` mean filter with symmetric borders, then keep every `f`-th sample
/// starting at the first.
fn box_decimate(plane: &[f64], w: usize, h: usize, f: usize) -> (Vec<f64>, usize, usize) {
    let lo = -((f as isize + 1) / 2 - 1);
    let norm = (f * f) as f64;
    let (ow, oh) = (w.div_ceil(f), h.div_ceil(f));
    let mut out = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        for ox in 0..ow {
            let (cx, cy) = ((ox * f) as isize, (oy * f) as isize);
            let mut acc = 0.0;
            for dy in 0..f as isize {
                let y = reflect(cy + lo + dy, h);
                for dx in 0..f as isize {
                    acc += plane[y * w + reflect(cx + lo + dx, w)];
                }
            }
            out.push(acc / norm);
        }
    }
    (out, ow, oh)
}

/// Valid-region separable correlation.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(j, t)| t * tmp[(y + j) * ow + x])
                .sum();
        }
    }
    out
}

/// Per-window SSIM values over the valid region, row-major.
pub(crate) fn ssim_map(a: &[f64], b: &[f64], w: usize, h: usize, params: &SsimParams) -> Vec<f64> {
    let taps = params.window_1d();
    let (c1, c2) = (params.c1(), params.c2());
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, w, h, &taps);
    let mu_b = filter_valid(b, w, h, &taps);
    let e_aa = filter_valid(&aa, w, h, &taps);
    let e_bb = filter_valid(&bb, w, h, &taps);
    let e_ab = filter_valid(&ab, w, h, &taps);
    (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect()
}

/// Mean SSIM of two single-channel images.
pub fn ssim(
    reference: &PlanarImage,
    output: &PlanarImage,
    params: &SsimParams,
) -> Result<MetricResult> {
    if reference.channels() != 1 || output.channels() != 1 {
        return Err(Error::InvalidArgument(
            "SSIM expects single-channel images; use ssim_multichannel for RGB".into(),
        ));
    }
    if !reference.same_shape(output) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            output.width(),
            output.height()
        )));
    }
    let (mut w, mut h) = reference.dims();
    let f = params.downsample_factor(w, h);
    let (a, b) = if f > 1 {
        let (a, ow, oh) = box_decimate(reference.plane(0), w, h, f);
        let (b, _, _) = box_decimate(output.plane(0), w, h, f);
        (w, h) = (ow, oh);
        (a, b)
    } else {
        (reference.plane(0).to_vec(), output.plane(0).to_vec())
    };
    if w < params.window_size || h < params.window_size {
        return Err(Error::TooSmall(format!(
            "{w}x{h} image is smaller than the {0}x{0} SSIM window",
            params.window_size
        )));
    }
    let map = ssim_map(&a, &b, w, h, params);
    Ok(MetricResult::ok(
        "ssim",
        map.iter().sum::<f64>() / map.len() as f64,
    ))
}

/// Channel-averaged SSIM, for criteria that compare in RGB.
pub fn ssim_multichannel(
    reference: &PlanarImage,
    output: &PlanarImage,
    params: &SsimParams,
) -> Result<MetricResult> {
    if !reference.same_shape(output) {
        return Err(Error::DimensionMismatch(
            "SSIM inputs differ in shape".into(),
        ));
    }
    if reference.channels() == 1 {
        return ssim(reference, output, params);
    }
    let (w, h) = reference.dims();
    let mut total = 0.0;
    for c in 0..reference.channels() {
        let a = PlanarImage::new(w, h, ColorSpace::Gray, reference.plane(c).to_vec())?;
        let b = PlanarImage::new(w, h, ColorSpace::Gray, output.plane(c).to_vec())?;
        total += ssim(&a, &b, params)?.as_f64();
    }
    Ok(MetricResult::ok(
        "ssim",
        total / reference.channels() as f64,
    ))
}
