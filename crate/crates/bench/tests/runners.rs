mod common;

use std::time::Instant;

use common::{builtin, command_argv, command_model, random_image, server_model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srbench::runtime::{Model, ModelConfig, RunnerKind, RunnerSpec};
use srbench::Error;
use srbench_core::{ColorSpace, PlanarImage};

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(17)
}

#[test]
fn command_runner_matches_builtin_nearest() {
    let lr = random_image(&mut rng(), 13, 9, ColorSpace::Rgb);
    let (expected, _) = builtin("n", RunnerKind::BuiltinNearest, &[3])
        .upscale(&lr, 3)
        .unwrap();
    let (out, t) = command_model("stub", &[3], &[]).upscale(&lr, 3).unwrap();
    assert_eq!(out, expected);
    assert!(t.startup_inclusive);
}

#[test]
fn server_runner_serves_several_requests() {
    let m = server_model("stub", &[2], &[]);
    let mut r = rng();
    for (w, h) in [(5, 4), (8, 8), (3, 11)] {
        let lr = random_image(&mut r, w, h, ColorSpace::Gray);
        let (out, t) = m.upscale(&lr, 2).unwrap();
        assert_eq!(out.dims(), (2 * w, 2 * h));
        assert!(!t.startup_inclusive);
        assert!(t.raw_seconds >= t.wall_seconds);
    }
}

#[test]
fn server_respawns_after_crash() {
    let m = server_model("stub", &[2], &["--crash-on", "2"]);
    let lr = random_image(&mut rng(), 6, 6, ColorSpace::Rgb);
    assert!(m.upscale(&lr, 2).is_ok());
    match m.upscale(&lr, 2) {
        Err(Error::Runner { message, .. }) => {
            assert!(message.contains("crashing on request 2"), "{message}")
        }
        other => panic!("expected a runner error, got {other:?}"),
    }
    assert!(
        m.upscale(&lr, 2).is_ok(),
        "a fresh server is started after a crash"
    );
}

#[test]
fn error_reply_fails_one_request_only() {
    let m = server_model("stub", &[2], &["--fail-on-width", "7"]);
    let mut r = rng();
    let bad = random_image(&mut r, 7, 5, ColorSpace::Gray);
    match m.upscale(&bad, 2) {
        Err(Error::Runner { message, .. }) => {
            assert!(message.contains("refusing input of width 7"))
        }
        other => panic!("expected a runner error, got {other:?}"),
    }
    assert!(m
        .upscale(&random_image(&mut r, 8, 5, ColorSpace::Gray), 2)
        .is_ok());
}

#[test]
fn command_failure_carries_stderr() {
    let m = command_model("stub", &[2], &["--fail-on-width", "7"]);
    let err = m
        .upscale(&random_image(&mut rng(), 7, 5, ColorSpace::Gray), 2)
        .unwrap_err();
    assert!(
        err.to_string().contains("refusing input of width 7"),
        "{err}"
    );
}

#[test]
fn wrong_output_size_breaks_the_contract() {
    let lr = random_image(&mut rng(), 6, 5, ColorSpace::Rgb);
    for m in [
        command_model("stub", &[2], &["--bad-dims"]),
        server_model("stub", &[2], &["--bad-dims"]),
    ] {
        match m.upscale(&lr, 2) {
            Err(Error::DimensionContract { expected, got, .. }) => {
                assert!(expected.starts_with("12x10 "), "{expected}");
                assert!(got.starts_with("13x10 "), "{got}");
            }
            other => panic!("expected a dimension error, got {other:?}"),
        }
    }
}

#[test]
fn stray_stdout_is_a_protocol_error() {
    let m = server_model("stub", &[2], &["--log-to-stdout"]);
    let lr = random_image(&mut rng(), 4, 4, ColorSpace::Gray);
    assert!(matches!(m.upscale(&lr, 2), Err(Error::Protocol { .. })));
}

#[test]
fn command_timeout_kills_the_runner() {
    let mut spec = RunnerSpec::external(RunnerKind::Command, command_argv(&["--sleep-ms", "5000"]));
    spec.timeout = Some(0.3);
    let m = Model::new(ModelConfig::new("slow", [2], spec));
    let start = Instant::now();
    let err = m
        .upscale(&random_image(&mut rng(), 4, 4, ColorSpace::Gray), 2)
        .unwrap_err();
    assert!(start.elapsed().as_secs_f64() < 3.0);
    assert!(err.to_string().contains("timed out"), "{err}");
}

#[test]
fn missing_program_is_a_runner_error() {
    let spec = RunnerSpec::external(
        RunnerKind::Server,
        vec!["/nonexistent/srbench-runner".into()],
    );
    let m = Model::new(ModelConfig::new("gone", [2], spec));
    let lr = PlanarImage::filled(4, 4, ColorSpace::Gray, 1.0).unwrap();
    assert!(matches!(m.upscale(&lr, 2), Err(Error::Runner { .. })));
}

#[test]
fn scale_one_is_identity() {
    let lr = random_image(&mut rng(), 9, 7, ColorSpace::Rgb);
    for kind in [
        RunnerKind::BuiltinNearest,
        RunnerKind::BuiltinBilinear,
        RunnerKind::BuiltinBicubic,
    ] {
        assert_eq!(builtin("b", kind, &[1]).upscale(&lr, 1).unwrap().0, lr);
    }
    assert_eq!(
        command_model("id", &[1], &["--mode", "identity"])
            .upscale(&lr, 1)
            .unwrap()
            .0,
        lr
    );
    assert_eq!(
        server_model("id", &[1], &["--mode", "identity"])
            .upscale(&lr, 1)
            .unwrap()
            .0,
        lr
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn builtin_output_dimensions(
        w in 1usize..64,
        h in 1usize..64,
        scale in prop::sample::select(vec![1usize, 2, 3, 4, 8]),
        kind in prop::sample::select(vec![
            RunnerKind::BuiltinNearest,
            RunnerKind::BuiltinBilinear,
            RunnerKind::BuiltinBicubic,
        ]),
        rgb in any::<bool>(),
    ) {
        let cs = if rgb { ColorSpace::Rgb } else { ColorSpace::Gray };
        let lr = PlanarImage::from_fn(w, h, cs, |c, x, y| ((c * 31 + x * 7 + y * 13) % 256) as f64).unwrap();
        let (out, _) = builtin("b", kind, &[scale]).upscale(&lr, scale).unwrap();
        prop_assert_eq!(out.dims(), (w * scale, h * scale));
        prop_assert_eq!(out.colorspace(), cs);
    }
}
