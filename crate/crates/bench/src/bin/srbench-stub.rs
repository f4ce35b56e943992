//! Scriptable fake model runner for exercising command and server runners.
//!
//! Command mode: `srbench-stub --input in.png --output out.png --scale 2`.
//! Server mode:  `srbench-stub --server`, speaking the line protocol on
//! stdin/stdout.

use std::io::{BufRead, Write};
use std::path::Path;
use std::process::ExitCode;
use std::thread::sleep;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use srbench_core::{load_png, resize, save_png, PlanarImage, ResampleKernel};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Nearest,
    /// Copies the input, whatever the scale.
    Identity,
}

#[derive(Debug, Parser)]
#[command(
    name = "srbench-stub",
    about = "Fake super-resolution runner for tests"
)]
struct Opts {
    #[arg(long)]
    server: bool,
    #[arg(long, value_enum, default_value_t = Mode::Nearest)]
    mode: Mode,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    scale: Option<usize>,
    /// Sleep before every request.
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    /// Sleep before the first real request instead of `--sleep-ms`.
    #[arg(long)]
    first_sleep_ms: Option<u64>,
    /// Fail on inputs of this width.
    #[arg(long)]
    fail_on_width: Option<usize>,
    /// Server mode: exit without replying to the K-th request (1-based).
    #[arg(long)]
    crash_on: Option<usize>,
    /// Write an output one pixel wider than requested.
    #[arg(long)]
    bad_dims: bool,
    /// Server mode: write a stray non-JSON line before each reply.
    #[arg(long)]
    log_to_stdout: bool,
}

impl Opts {
    fn process(&self, input: &str, output: &str, scale: usize, nth: usize) -> Result<(), String> {
        let delay = match (nth, self.first_sleep_ms) {
            (1, Some(ms)) => ms,
            _ => self.sleep_ms,
        };
        sleep(Duration::from_millis(delay));
        let img = load_png(input).map_err(|e| e.to_string())?;
        if self.fail_on_width == Some(img.width()) {
            return Err(format!("refusing input of width {}", img.width()));
        }
        let out = upscale(&img, scale, self.mode, self.bad_dims).map_err(|e| e.to_string())?;
        save_png(&out, Path::new(output)).map_err(|e| e.to_string())
    }
}

fn upscale(
    img: &PlanarImage,
    scale: usize,
    mode: Mode,
    bad_dims: bool,
) -> srbench_core::Result<PlanarImage> {
    let (w, h) = match mode {
        Mode::Nearest => (img.width() * scale, img.height() * scale),
        Mode::Identity => (img.width(), img.height()),
    };
    let w = w + usize::from(bad_dims);
    if (w, h) == img.dims() {
        return Ok(img.clone());
    }
    resize(img, w, h, ResampleKernel::Nearest, false)
}

fn serve(opts: &Opts) -> ExitCode {
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    let mut requests = 0;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let req: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                let _ = writeln!(
                    stdout,
                    "{}",
                    json!({"id": null, "status": "error", "message": format!("bad request: {e}")})
                );
                let _ = stdout.flush();
                continue;
            }
        };
        let id = req.get("id").cloned().unwrap_or(Value::Null);
        let reply = if req.get("op").and_then(Value::as_str) == Some("ping") {
            json!({"id": id, "status": "ok"})
        } else {
            requests += 1;
            if opts.crash_on == Some(requests) {
                eprintln!("stub: crashing on request {requests}");
                return ExitCode::from(3);
            }
            let field = |name: &str| {
                req.get(name)
                    .ok_or_else(|| format!("missing field `{name}`"))
            };
            let result = field("input")
                .and_then(|i| Ok((i, field("output")?, field("scale")?)))
                .and_then(|(i, o, s)| match (i.as_str(), o.as_str(), s.as_u64()) {
                    (Some(i), Some(o), Some(s)) => opts.process(i, o, s as usize, requests),
                    _ => Err("`input`, `output` must be strings and `scale` an integer".into()),
                });
            match result {
                Ok(()) => json!({"id": id, "status": "ok"}),
                Err(message) => json!({"id": id, "status": "error", "message": message}),
            }
        };
        if opts.log_to_stdout {
            let _ = writeln!(stdout, "stub: handling request");
        }
        let _ = writeln!(stdout, "{reply}");
        let _ = stdout.flush();
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let opts = Opts::parse();
    if opts.server {
        return serve(&opts);
    }
    let (Some(input), Some(output), Some(scale)) = (&opts.input, &opts.output, opts.scale) else {
        eprintln!("stub: --input, --output and --scale are required outside --server");
        return ExitCode::from(2);
    };
    match opts.process(input, output, scale, 1) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stub: {e}");
            ExitCode::FAILURE
        }
    }
}
