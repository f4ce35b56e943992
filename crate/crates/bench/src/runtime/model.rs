use std::env;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use srbench_core::{load_png, resize, save_png, PlanarImage, ResampleKernel};
use tempfile::TempDir;

use crate::error::{Error, Result};

use super::config::{ModelConfig, RunnerKind};
use super::ensemble::self_ensemble_with;
use super::server::ServerProcess;

/// Wall-clock cost of producing one output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    /// Seconds attributed to the model. For server runners this is the raw
    /// round trip minus the measured protocol overhead.
    pub wall_seconds: f64,
    /// Seconds as measured, before any overhead subtraction.
    pub raw_seconds: f64,
    /// Command runners pay process startup on every call; their times
    /// include it.
    pub startup_inclusive: bool,
    pub device_label: String,
}

/// Smallest wall time reported, so that samples stay strictly positive even
/// when overhead subtraction overshoots.
const MIN_WALL: f64 = 1e-9;

/// A loaded model that can upscale images. Server runners are started lazily
/// on first use and restarted if they die.
pub struct Model {
    config: ModelConfig,
    device_label: String,
    server: Mutex<Option<ServerProcess>>,
}

struct Timed {
    image: PlanarImage,
    /// Seconds spent in the model call itself.
    raw: f64,
    /// Protocol overhead inside `raw`.
    overhead: f64,
    /// Server start time spent outside `raw`.
    startup: f64,
}

impl Model {
    pub fn new(config: ModelConfig) -> Self {
        Self {
            config,
            device_label: default_device_label(),
            server: Mutex::new(None),
        }
    }

    pub fn with_device_label(mut self, label: impl Into<String>) -> Self {
        self.device_label = label.into();
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn device_label(&self) -> &str {
        &self.device_label
    }

    /// Upscales `lr` by `scale`. The timing covers the model only: no PNG
    /// work of the harness and no server startup.
    pub fn upscale(&self, lr: &PlanarImage, scale: usize) -> Result<(PlanarImage, TimingSample)> {
        self.check_scale(scale)?;
        let t = self.upscale_once(lr, scale)?;
        let sample = self.sample(t.raw, t.overhead);
        Ok((t.image, sample))
    }

    /// Mean of the back-transformed outputs over the eight flips and
    /// rotations. The timing covers the whole call, transforms included.
    pub fn self_ensemble(
        &self,
        lr: &PlanarImage,
        scale: usize,
    ) -> Result<(PlanarImage, TimingSample)> {
        self.check_scale(scale)?;
        let start = Instant::now();
        let mut overhead = 0.0;
        let image = self_ensemble_with(lr, |x| {
            let t = self.upscale_once(x, scale)?;
            overhead += t.overhead + t.startup;
            Ok(t.image)
        })?;
        let sample = self.sample(start.elapsed().as_secs_f64(), overhead);
        Ok((image, sample))
    }

    /// [`Self::self_ensemble`] or [`Self::upscale`].
    pub fn run(
        &self,
        lr: &PlanarImage,
        scale: usize,
        ensemble: bool,
    ) -> Result<(PlanarImage, TimingSample)> {
        if ensemble {
            self.self_ensemble(lr, scale)
        } else {
            self.upscale(lr, scale)
        }
    }

    /// Stops a running server child, if any.
    pub fn shutdown(&self) {
        self.server.lock().expect("server lock").take();
    }

    fn check_scale(&self, scale: usize) -> Result<()> {
        if self.config.scales.contains(&scale) {
            return Ok(());
        }
        Err(Error::InvalidArgument(format!(
            "model `{}` does not support x{scale} (scales: {:?})",
            self.config.name, self.config.scales
        )))
    }

    fn sample(&self, raw: f64, overhead: f64) -> TimingSample {
        TimingSample {
            wall_seconds: (raw - overhead).max(MIN_WALL),
            raw_seconds: raw.max(MIN_WALL),
            startup_inclusive: self.config.runner.kind == RunnerKind::Command,
            device_label: self.device_label.clone(),
        }
    }

    fn upscale_once(&self, lr: &PlanarImage, scale: usize) -> Result<Timed> {
        let kernel = match self.config.runner.kind {
            RunnerKind::BuiltinNearest => ResampleKernel::Nearest,
            RunnerKind::BuiltinBilinear => ResampleKernel::Bilinear,
            RunnerKind::BuiltinBicubic => ResampleKernel::Bicubic,
            RunnerKind::Command => return self.run_command(lr, scale),
            RunnerKind::Server => return self.run_server(lr, scale),
        };
        let start = Instant::now();
        let image = if scale == 1 {
            lr.clone()
        } else {
            resize(lr, lr.width() * scale, lr.height() * scale, kernel, false)?
        };
        Ok(Timed {
            image,
            raw: start.elapsed().as_secs_f64(),
            overhead: 0.0,
            startup: 0.0,
        })
    }

    fn run_command(&self, lr: &PlanarImage, scale: usize) -> Result<Timed> {
        let spec = &self.config.runner;
        let dir = temp_dir()?;
        let (input, output) = (dir.path().join("input.png"), dir.path().join("output.png"));
        save_png(lr, &input)?;
        let argv: Vec<String> = spec
            .argv
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|a| substitute(a, &input, &output, scale))
            .collect();
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| self.runner_error("empty argv".into()))?;
        let stderr_path = dir.path().join("stderr.txt");
        let stderr = std::fs::File::create(&stderr_path).map_err(|e| Error::io(&stderr_path, e))?;
        let mut cmd = Command::new(program);
        cmd.args(args)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(stderr)
            .envs(&spec.env)
            .envs(self.runner_env());
        if let Some(d) = &spec.working_dir {
            cmd.current_dir(d);
        }

        let start = Instant::now();
        let mut child = cmd
            .spawn()
            .map_err(|e| self.runner_error(format!("cannot start `{program}`: {e}")))?;
        let status = match spec.timeout {
            None => child.wait(),
            Some(limit) => {
                let deadline = start + Duration::from_secs_f64(limit);
                loop {
                    match child.try_wait() {
                        Ok(Some(s)) => break Ok(s),
                        Ok(None) if Instant::now() >= deadline => {
                            let _ = child.kill();
                            let _ = child.wait();
                            return Err(self.runner_error(format!("timed out after {limit} s")));
                        }
                        Ok(None) => thread::sleep(Duration::from_millis(1)),
                        Err(e) => break Err(e),
                    }
                }
            }
        }
        .map_err(|e| self.runner_error(format!("wait failed: {e}")))?;
        let raw = start.elapsed().as_secs_f64();

        if !status.success() {
            let tail = std::fs::read_to_string(&stderr_path).unwrap_or_default();
            let tail = tail
                .lines()
                .rev()
                .take(5)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect::<Vec<_>>();
            let mut message = format!("command exited with {status}");
            if !tail.is_empty() {
                message.push_str(&format!("; stderr: {}", tail.join(" | ")));
            }
            return Err(self.runner_error(message));
        }
        let image = self.read_output(&output, lr, scale)?;
        Ok(Timed {
            image,
            raw,
            overhead: 0.0,
            startup: 0.0,
        })
    }

    fn run_server(&self, lr: &PlanarImage, scale: usize) -> Result<Timed> {
        let dir = temp_dir()?;
        let (input, output) = (dir.path().join("input.png"), dir.path().join("output.png"));
        save_png(lr, &input)?;
        let mut guard = self.server.lock().expect("server lock");
        let mut startup = 0.0;
        if !guard.as_mut().is_some_and(ServerProcess::is_alive) {
            *guard = None;
            let start = Instant::now();
            *guard = Some(ServerProcess::spawn(&self.config, &self.runner_env())?);
            startup = start.elapsed().as_secs_f64();
        }
        let server = guard.as_mut().expect("server running");
        let raw = server.request(&input, &output, scale)?;
        let overhead = server.baseline;
        drop(guard);
        let image = self.read_output(&output, lr, scale)?;
        Ok(Timed {
            image,
            raw,
            overhead,
            startup,
        })
    }

    fn runner_env(&self) -> Vec<(String, String)> {
        vec![(
            "SRBENCH_INPUT_RANGE".into(),
            self.config.input_range.as_str().into(),
        )]
    }

    fn read_output(&self, path: &Path, lr: &PlanarImage, scale: usize) -> Result<PlanarImage> {
        if !path.exists() {
            return Err(Error::Protocol {
                model: self.config.name.clone(),
                message: "reported success but wrote no output image".into(),
            });
        }
        let out = load_png(path)?;
        let (ew, eh) = (lr.width() * scale, lr.height() * scale);
        if out.dims() != (ew, eh) || out.channels() != lr.channels() {
            return Err(Error::DimensionContract {
                model: self.config.name.clone(),
                expected: format!("{ew}x{eh} {}", lr.colorspace()),
                got: format!("{}x{} {}", out.width(), out.height(), out.colorspace()),
            });
        }
        Ok(out)
    }

    fn runner_error(&self, message: String) -> Error {
        Error::Runner {
            model: self.config.name.clone(),
            message,
        }
    }
}

fn substitute(arg: &str, input: &Path, output: &Path, scale: usize) -> String {
    arg.replace("{input}", &input.to_string_lossy())
        .replace("{output}", &output.to_string_lossy())
        .replace("{scale}", &scale.to_string())
}

/// Per-request scratch directory under `SRBENCH_TMPDIR` or the system temp
/// directory; removed when dropped.
fn temp_dir() -> Result<TempDir> {
    let base: PathBuf = env::var_os("SRBENCH_TMPDIR").map_or_else(env::temp_dir, PathBuf::from);
    tempfile::Builder::new()
        .prefix("srbench-")
        .tempdir_in(&base)
        .map_err(|e| Error::io(&base, e))
}

/// CPU model name when the platform exposes it, plus OS and architecture.
pub fn default_device_label() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
        s.lines()
            .find(|l| l.starts_with("model name"))
            .and_then(|l| l.split_once(':'))
            .map(|(_, v)| v.trim().to_string())
    });
    let platform = format!("{}-{}", env::consts::OS, env::consts::ARCH);
    match cpu {
        Some(c) => format!("CPU: {c} ({platform})"),
        None => format!("CPU ({platform})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::config::RunnerSpec;
    use srbench_core::ColorSpace;

    fn builtin(kind: RunnerKind) -> Model {
        Model::new(ModelConfig::new(
            "m",
            [1, 2, 3, 4, 8],
            RunnerSpec::builtin(kind),
        ))
    }

    #[test]
    fn nearest_dimension_contract() {
        let lr = PlanarImage::filled(10, 8, ColorSpace::Rgb, 3.0).unwrap();
        let (out, t) = builtin(RunnerKind::BuiltinNearest).upscale(&lr, 4).unwrap();
        assert_eq!(out.dims(), (40, 32));
        assert!(t.wall_seconds > 0.0);
        assert!(!t.startup_inclusive);
    }

    #[test]
    fn bicubic_keeps_constant() {
        let lr = PlanarImage::filled(7, 5, ColorSpace::Gray, 91.0).unwrap();
        let (out, _) = builtin(RunnerKind::BuiltinBicubic).upscale(&lr, 2).unwrap();
        assert!(out.data().iter().all(|v| (v - 91.0).abs() < 1e-9));
    }

    #[test]
    fn unsupported_scale_rejected() {
        let m = Model::new(ModelConfig::new(
            "m",
            [2],
            RunnerSpec::builtin(RunnerKind::BuiltinBicubic),
        ));
        let lr = PlanarImage::filled(4, 4, ColorSpace::Gray, 0.0).unwrap();
        assert!(matches!(m.upscale(&lr, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn placeholders_substituted() {
        let s = substitute(
            "--in={input} --x{scale}",
            Path::new("/a.png"),
            Path::new("/b.png"),
            3,
        );
        assert_eq!(s, "--in=/a.png --x3");
    }
}
