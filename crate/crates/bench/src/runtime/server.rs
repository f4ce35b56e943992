//! Persistent runner process speaking line-delimited JSON.
//!
//! Request:  `{"id":7,"input":"/tmp/a.png","output":"/tmp/b.png","scale":4}`
//! Reply:    `{"id":7,"status":"ok"}` or
//!           `{"id":7,"status":"error","message":"..."}`
//!
//! Requests are strictly sequential. A reader thread forwards reply lines
//! over a channel so that waits can time out.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};

use super::config::ModelConfig;

const STDERR_TAIL: usize = 20;
const BASELINE_PINGS: usize = 5;

#[derive(Deserialize)]
struct Reply {
    id: u64,
    status: String,
    #[serde(default)]
    message: Option<String>,
}

pub(crate) struct ServerProcess {
    model: String,
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<String>,
    stderr_tail: Arc<Mutex<VecDeque<String>>>,
    next_id: u64,
    request_timeout: Option<Duration>,
    /// Round-trip time of a request the runner rejects immediately.
    pub(crate) baseline: f64,
    dead: bool,
}

impl ServerProcess {
    /// Starts the child and measures the no-op round trip. The first ping may
    /// take up to `startup_timeout` while the runner loads its model.
    pub(crate) fn spawn(config: &ModelConfig, program_env: &[(String, String)]) -> Result<Self> {
        let spec = &config.runner;
        let argv = spec.argv.as_deref().unwrap_or_default();
        let (program, args) = argv.split_first().ok_or_else(|| Error::Runner {
            model: config.name.clone(),
            message: "server runner has an empty argv".into(),
        })?;
        let mut cmd = Command::new(program);
        cmd.args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .envs(&spec.env)
            .envs(program_env.iter().map(|(k, v)| (k, v)));
        if let Some(dir) = &spec.working_dir {
            cmd.current_dir(dir);
        }
        let mut child = cmd.spawn().map_err(|e| Error::Runner {
            model: config.name.clone(),
            message: format!("cannot start `{program}`: {e}"),
        })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let stderr = child.stderr.take().expect("piped stderr");
        let stderr_tail = Arc::new(Mutex::new(VecDeque::new()));
        let tail = Arc::clone(&stderr_tail);
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines() {
                let Ok(line) = line else { break };
                let mut t = tail.lock().expect("stderr tail");
                if t.len() == STDERR_TAIL {
                    t.pop_front();
                }
                t.push_back(line);
            }
        });

        let mut server = Self {
            model: config.name.clone(),
            stdin: child.stdin.take(),
            child,
            replies,
            stderr_tail,
            next_id: 0,
            request_timeout: spec.timeout.map(Duration::from_secs_f64),
            baseline: 0.0,
            dead: false,
        };
        server.ping(Some(Duration::from_secs_f64(spec.startup_timeout)))?;
        let mut rtts: Vec<f64> = (0..BASELINE_PINGS)
            .map(|_| server.ping(server.request_timeout))
            .collect::<Result<_>>()?;
        rtts.sort_by(f64::total_cmp);
        server.baseline = rtts[BASELINE_PINGS / 2];
        Ok(server)
    }

    pub(crate) fn is_alive(&mut self) -> bool {
        !self.dead && matches!(self.child.try_wait(), Ok(None))
    }

    /// A request without paths. Conformant runners answer it with an error
    /// reply without touching any model, so its round trip is pure protocol
    /// overhead. Either status is accepted.
    fn ping(&mut self, timeout: Option<Duration>) -> Result<f64> {
        let id = self.take_id();
        let start = Instant::now();
        self.send(&json!({"id": id, "op": "ping"}))?;
        self.receive(id, timeout)?;
        Ok(start.elapsed().as_secs_f64())
    }

    /// Sends one upscale request; returns the raw round-trip seconds.
    pub(crate) fn request(&mut self, input: &Path, output: &Path, scale: usize) -> Result<f64> {
        let id = self.take_id();
        let start = Instant::now();
        self.send(&json!({
            "id": id,
            "input": input.to_string_lossy(),
            "output": output.to_string_lossy(),
            "scale": scale,
        }))?;
        let reply = self.receive(id, self.request_timeout)?;
        let elapsed = start.elapsed().as_secs_f64();
        match reply.status.as_str() {
            "ok" => Ok(elapsed),
            "error" => Err(Error::Runner {
                model: self.model.clone(),
                message: reply
                    .message
                    .unwrap_or_else(|| "runner reported an error".into()),
            }),
            other => Err(self.protocol(format!("unknown status `{other}`"))),
        }
    }

    fn take_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn send(&mut self, msg: &serde_json::Value) -> Result<()> {
        let line = format!("{msg}\n");
        let written = match self.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        written.map_err(|e| {
            self.dead = true;
            self.crashed(format!("cannot write request: {e}"))
        })
    }

    fn receive(&mut self, id: u64, timeout: Option<Duration>) -> Result<Reply> {
        let line = match timeout {
            Some(t) => self.replies.recv_timeout(t),
            None => self
                .replies
                .recv()
                .map_err(|_| RecvTimeoutError::Disconnected),
        };
        let line = match line {
            Ok(l) => l,
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                return Err(Error::Runner {
                    model: self.model.clone(),
                    message: format!(
                        "no reply to request {id} within {:.1} s; runner killed",
                        timeout.unwrap_or_default().as_secs_f64()
                    ),
                });
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                return Err(self.crashed(format!("exited before answering request {id}")));
            }
        };
        let reply: Reply = serde_json::from_str(&line).map_err(|e| {
            self.kill();
            self.protocol(format!(
                "reply `{}` is not a valid reply object: {e}",
                truncate(&line)
            ))
        })?;
        if reply.id != id {
            self.kill();
            return Err(self.protocol(format!(
                "reply id {} does not match request id {id}",
                reply.id
            )));
        }
        Ok(reply)
    }

    fn protocol(&self, message: String) -> Error {
        Error::Protocol {
            model: self.model.clone(),
            message,
        }
    }

    fn crashed(&mut self, what: String) -> Error {
        // Give the process a moment to finish exiting so the status is known.
        let deadline = Instant::now() + Duration::from_millis(500);
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(s)) => break Some(s),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => break None,
            }
        };
        // The stderr reader may still be draining.
        thread::sleep(Duration::from_millis(20));
        let tail: Vec<String> = self
            .stderr_tail
            .lock()
            .expect("stderr tail")
            .iter()
            .cloned()
            .collect();
        let mut message = format!("server runner {what}");
        if let Some(s) = status {
            message.push_str(&format!(" ({s})"));
        }
        if !tail.is_empty() {
            message.push_str(&format!("; stderr: {}", tail.join(" | ")));
        }
        Error::Runner {
            model: self.model.clone(),
            message,
        }
    }

    fn kill(&mut self) {
        self.dead = true;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        // Closing stdin is the shutdown signal; kill stragglers.
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        self.kill();
    }
}

fn truncate(s: &str) -> String {
    if s.chars().count() > 120 {
        format!("{}...", s.chars().take(120).collect::<String>())
    } else {
        s.to_string()
    }
}
