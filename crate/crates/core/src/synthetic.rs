//! Deterministic synthetic images for tests, smoke runs and the bundled NIQE
//! model.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{ColorSpace, PlanarImage};

/// Occlusion ("dead leaves") image: disks with power-law radii, each carrying
/// a gentle color gradient, softened edges and mild sensor noise. Its
/// local statistics resemble those of natural photographs.
pub fn dead_leaves(width: usize, height: usize, seed: u64) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let mut planes = vec![vec![128.0; n]; 3];
    let (r_min, r_max) = (2.0f64, (width.min(height) as f64 / 4.0).max(3.0));
    let (a, b) = (r_min.powi(-2), r_max.powi(-2));
    let disks = n / 40;
    for _ in 0..disks {
        let u: f64 = rng.random();
        let r = (a - u * (a - b)).powf(-0.5);
        let cx = rng.random_range(-r..width as f64 + r);
        let cy = rng.random_range(-r..height as f64 + r);
        let base: [f64; 3] = [
            rng.random_range(20.0..235.0),
            rng.random_range(20.0..235.0),
            rng.random_range(20.0..235.0),
        ];
        let (gx, gy) = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
        let x0 = (cx - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil() as usize).min(width);
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil() as usize).min(height);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r * r {
                    let shade = gx * dx + gy * dy;
                    for (p, c) in planes.iter_mut().zip(base) {
                        p[y * width + x] = c + shade;
                    }
                }
            }
        }
    }
    let img = PlanarImage::from_planes(width, height, ColorSpace::Rgb, planes).expect("geometry");
    let img = box_soften(&img);
    let noisy: Vec<f64> = img
        .data()
        .iter()
        .map(|v| {
            // sum of four uniforms: approximately normal, sd ~ 1.15
            let e: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum();
            (v + e).clamp(0.0, 255.0)
        })
        .collect();
    PlanarImage::new(width, height, ColorSpace::Rgb, noisy).expect("geometry")
}

/// Smooth color field built from a few long-wavelength sinusoids.
pub fn smooth_gradient(width: usize, height: usize, seed: u64) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<[f64; 4]> = (0..9)
        .map(|_| {
            [
                rng.random_range(0.3..1.5) / width as f64,
                rng.random_range(0.3..1.5) / height as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(15.0..35.0),
            ]
        })
        .collect();
    PlanarImage::from_fn(width, height, ColorSpace::Rgb, |c, x, y| {
        let mut v = 128.0;
        for t in &terms[c * 3..c * 3 + 3] {
            v += t[3] * (std::f64::consts::TAU * (t[0] * x as f64 + t[1] * y as f64) + t[2]).sin();
        }
        v
    })
    .expect("geometry")
}

/// Separable `[1 2 1] / 4` filter with clamped borders.
fn box_soften(img: &PlanarImage) -> PlanarImage {
    let (w, h) = img.dims();
    PlanarImage::from_fn(w, h, img.colorspace(), |c, x, y| {
        let tap = |dx: isize, dy: isize| {
            let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            img.get(c, sx, sy)
        };
        let k = [0.25, 0.5, 0.25];
        let mut acc = 0.0;
        for (j, ky) in k.iter().enumerate() {
            for (i, kx) in k.iter().enumerate() {
                acc += kx * ky * tap(i as isize - 1, j as isize - 1);
            }
        }
        acc
    })
    .expect("geometry")
}

/// Gaussian blur with clamped borders; kernel radius `ceil(3 sigma)`.
pub fn gaussian_blur(img: &PlanarImage, sigma: f64) -> PlanarImage {
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    let (w, h) = img.dims();
    let horiz = PlanarImage::from_fn(w, h, img.colorspace(), |c, x, y| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| {
                t * img.get(
                    c,
                    (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize,
                    y,
                )
            })
            .sum()
    })
    .expect("geometry");
    PlanarImage::from_fn(w, h, img.colorspace(), |c, x, y| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| {
                t * horiz.get(
                    c,
                    x,
                    (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize,
                )
            })
            .sum()
    })
    .expect("geometry")
}
