//! Brute-force reference computations. Nothing here calls into the
//! library's filtering, resampling or fitting code.

#![allow(dead_code)]

use rand::RngExt;
use rand_distr::{Distribution, Gamma};
use srbench_core::{PlanarImage, ResampleKernel};

fn keys_cubic(x: f64) -> f64 {
    let t = x.abs();
    if t < 1.0 {
        (1.5 * t - 2.5) * t * t + 1.0
    } else if t < 2.0 {
        ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    } else {
        0.0
    }
}

fn kernel_value(kernel: ResampleKernel, x: f64) -> f64 {
    match kernel {
        ResampleKernel::Nearest => f64::from(u8::from((-0.5..0.5).contains(&x))),
        ResampleKernel::Bilinear => (1.0 - x.abs()).max(0.0),
        ResampleKernel::Bicubic => keys_cubic(x),
    }
}

fn axis_weight(kernel: ResampleKernel, d: f64, scale: f64, antialias: bool) -> f64 {
    if antialias && scale < 1.0 {
        scale * kernel_value(kernel, scale * d)
    } else {
        kernel_value(kernel, d)
    }
}

/// Direct 2-D resampling: every output pixel visits every source position
/// in a generous window, weights by the product kernel, reads clamped
/// samples, and normalizes by the total 2-D weight.
pub fn resize_direct(
    img: &PlanarImage,
    out_w: usize,
    out_h: usize,
    kernel: ResampleKernel,
    antialias: bool,
) -> Vec<f64> {
    let (w, h) = img.dims();
    let (sx, sy) = (out_w as f64 / w as f64, out_h as f64 / h as f64);
    let reach = |s: f64| -> i64 { (4.0 / s.min(1.0)).ceil() as i64 + 4 };
    let (rx, ry) = (reach(sx), reach(sy));
    let mut out = Vec::new();
    for c in 0..img.channels() {
        for oy in 0..out_h {
            let cy = (oy as f64 + 0.5) / sy - 0.5;
            for ox in 0..out_w {
                let cx = (ox as f64 + 0.5) / sx - 0.5;
                let (mut acc, mut norm) = (0.0, 0.0);
                for py in (cy.floor() as i64 - ry)..=(cy.floor() as i64 + ry) {
                    let wy = axis_weight(kernel, cy - py as f64, sy, antialias);
                    if wy == 0.0 {
                        continue;
                    }
                    for px in (cx.floor() as i64 - rx)..=(cx.floor() as i64 + rx) {
                        let wx = axis_weight(kernel, cx - px as f64, sx, antialias);
                        let wgt = wx * wy;
                        if wgt == 0.0 {
                            continue;
                        }
                        let qx = px.clamp(0, w as i64 - 1) as usize;
                        let qy = py.clamp(0, h as i64 - 1) as usize;
                        acc += wgt * img.get(c, qx, qy);
                        norm += wgt;
                    }
                }
                out.push(acc / norm);
            }
        }
    }
    out
}

/// Mean SSIM computed window by window with two-pass moments.
pub fn ssim_naive(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let (size, sigma) = (11usize, 1.5f64);
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut win = vec![0.0; size * size];
    for j in 0..size {
        for i in 0..size {
            let (dx, dy) = (i as f64 - 5.0, j as f64 - 5.0);
            win[j * size + i] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= total);

    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - size {
        for x0 in 0..=w - size {
            let at = |img: &[f64], i: usize, j: usize| img[(y0 + j) * w + x0 + i];
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..size {
                for i in 0..size {
                    ma += win[j * size + i] * at(a, i, j);
                    mb += win[j * size + i] * at(b, i, j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..size {
                for i in 0..size {
                    let (da, db) = (at(a, i, j) - ma, at(b, i, j) - mb);
                    let wt = win[j * size + i];
                    va += wt * da * da;
                    vb += wt * db * db;
                    cov += wt * da * db;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

fn gamma_ratio_sqrt(shape: f64) -> f64 {
    use statrs::function::gamma::gamma;
    (gamma(1.0 / shape) / gamma(3.0 / shape)).sqrt()
}

/// Draws from an AGGD parameterized by shape and the left/right RMS values.
/// `|x| / beta` raised to `shape` is Gamma(1/shape, 1) distributed.
pub fn sample_aggd(
    rng: &mut impl rand::Rng,
    n: usize,
    shape: f64,
    sigma_left: f64,
    sigma_right: f64,
) -> Vec<f64> {
    let g = gamma_ratio_sqrt(shape);
    let (bl, br) = (sigma_left * g, sigma_right * g);
    let p_left = bl / (bl + br);
    let dist = Gamma::new(1.0 / shape, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let mag = dist.sample(rng).powf(1.0 / shape);
            if rng.random::<f64>() < p_left {
                -bl * mag
            } else {
                br * mag
            }
        })
        .collect()
}

pub fn sample_ggd(rng: &mut impl rand::Rng, n: usize, shape: f64, sigma: f64) -> Vec<f64> {
    sample_aggd(rng, n, shape, sigma, sigma)
}

pub fn rel_err(est: f64, truth: f64) -> f64 {
    ((est - truth) / truth).abs()
}
