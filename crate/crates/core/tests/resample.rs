mod common;

use common::oracles::resize_direct;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srbench_core::resample::{axis_contributions, hr_crop_for_scale};
use srbench_core::synthetic::dead_leaves;
use srbench_core::{downscale_hr, quantize, resize, ColorSpace, PlanarImage, ResampleKernel};

const KERNELS: [ResampleKernel; 3] = [
    ResampleKernel::Nearest,
    ResampleKernel::Bilinear,
    ResampleKernel::Bicubic,
];

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, cs: ColorSpace) -> PlanarImage {
    PlanarImage::from_fn(w, h, cs, |_, _, _| rng.random_range(0.0..255.0)).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn separable_matches_direct_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for case in 0..40 {
        let (w, h) = (rng.random_range(1..40usize), rng.random_range(1..40usize));
        let (ow, oh) = (rng.random_range(1..80usize), rng.random_range(1..80usize));
        let kernel = KERNELS[case % 3];
        let antialias = case % 2 == 0;
        let img = random_image(&mut rng, w, h, ColorSpace::Gray);
        let fast = resize(&img, ow, oh, kernel, antialias).unwrap();
        let slow = resize_direct(&img, ow, oh, kernel, antialias);
        worst = worst.max(max_abs_diff(fast.data(), &slow));
    }
    assert!(worst <= 1e-9, "max deviation {worst:e}");
}

#[test]
fn integer_downscale_matches_direct_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for scale in [2usize, 3, 4, 8] {
        let img = random_image(&mut rng, 8 * scale, 5 * scale, ColorSpace::Rgb);
        let fast = resize(&img, 8, 5, ResampleKernel::Bicubic, true).unwrap();
        let slow = resize_direct(&img, 8, 5, ResampleKernel::Bicubic, true);
        assert!(max_abs_diff(fast.data(), &slow) <= 1e-9, "scale {scale}");
    }
}

#[test]
fn contributions_partition_unity() {
    let mut worst = 0.0f64;
    for kernel in KERNELS {
        for antialias in [false, true] {
            for in_len in [1usize, 2, 3, 7, 16, 33, 100] {
                for out_len in [1usize, 2, 5, 8, 25, 64, 200, 400] {
                    for c in axis_contributions(in_len, out_len, kernel, antialias) {
                        worst = worst.max((c.weight_sum() - 1.0).abs());
                        assert!(c.taps.iter().all(|&(j, _)| j < in_len));
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-12, "max deviation {worst:e}");
}

#[test]
fn same_size_resize_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let img = random_image(&mut rng, 23, 17, ColorSpace::Rgb);
    for kernel in KERNELS {
        let out = resize(&img, 23, 17, kernel, true).unwrap();
        assert!(max_abs_diff(out.data(), img.data()) <= 1e-9);
    }
}

#[test]
fn downscale_natural_image_within_one_level_of_oracle() {
    let hr = dead_leaves(130, 97, 5);
    for scale in [2usize, 3, 4] {
        let lr = quantize(&downscale_hr(&hr, scale).unwrap());
        let crop = hr_crop_for_scale(130, 97, scale).unwrap();
        let cropped = hr.crop(crop.x, crop.y, crop.width, crop.height).unwrap();
        let oracle = resize_direct(
            &cropped,
            crop.width / scale,
            crop.height / scale,
            ResampleKernel::Bicubic,
            true,
        );
        for (got, want) in lr.data().iter().zip(&oracle) {
            assert!((got - want.clamp(0.0, 255.0).round()).abs() <= 1.0);
        }
    }
}

#[test]
fn odd_hr_is_center_cropped() {
    let hr = PlanarImage::filled(101, 50, ColorSpace::Rgb, 90.0).unwrap();
    let lr = downscale_hr(&hr, 4).unwrap();
    assert_eq!(lr.dims(), (25, 12));
    let crop = hr_crop_for_scale(101, 50, 4).unwrap();
    assert_eq!((crop.x, crop.y, crop.width, crop.height), (0, 1, 100, 48));
}

proptest! {
    #[test]
    fn constant_images_stay_constant(
        w in 1usize..24, h in 1usize..24, ow in 1usize..48, oh in 1usize..48,
        v in 0.0f64..255.0, k in 0usize..3, aa: bool,
    ) {
        let img = PlanarImage::filled(w, h, ColorSpace::Gray, v).unwrap();
        let out = resize(&img, ow, oh, KERNELS[k], aa).unwrap();
        prop_assert_eq!(out.dims(), (ow, oh));
        prop_assert!(out.data().iter().all(|x| (x - v).abs() < 1e-9));
    }

    #[test]
    fn downscale_dimensions(w in 1usize..80, h in 1usize..80, scale in 1usize..9) {
        let img = PlanarImage::filled(w, h, ColorSpace::Gray, 1.0).unwrap();
        match downscale_hr(&img, scale) {
            Ok(lr) => prop_assert_eq!(lr.dims(), (w / scale, h / scale)),
            Err(_) => prop_assert!(w < scale || h < scale),
        }
    }
}
