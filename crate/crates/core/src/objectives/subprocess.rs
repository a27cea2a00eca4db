//! Line protocol to an external objective process.
//!
//! Request: `{"x": [...]}` per line on the child's stdin. Response: `{"y": [...]}`
//! per line on its stdout. One evaluation is in flight at a time.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ObjectiveFn;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct Request<'a> {
    x: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    y: Vec<f64>,
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct SubprocessObjective {
    command: String,
    num_objectives: usize,
    dim: usize,
    timeout: Duration,
    state: Mutex<Option<Running>>,
}

impl SubprocessObjective {
    pub fn new(command: &str, num_objectives: usize, dim: usize, timeout: Duration) -> Self {
        SubprocessObjective {
            command: command.to_string(),
            num_objectives,
            dim,
            timeout,
            state: Mutex::new(None),
        }
    }

    fn spawn(&self) -> Result<Running> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Objective(format!("cannot start {:?}: {e}", self.command)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exit_error(running: &mut Running) -> Error {
        match running.child.wait() {
            Ok(status) => Error::Objective(format!("objective process exited ({status})")),
            Err(e) => Error::Objective(format!("objective process vanished: {e}")),
        }
    }

    fn round_trip(&self, running: &mut Running, x: &[f64]) -> Result<Vec<f64>> {
        let mut line = serde_json::to_string(&Request { x })?;
        line.push('\n');
        if running
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| running.stdin.flush())
            .is_err()
        {
            return Err(Self::exit_error(running));
        }
        let reply = match running.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(Error::Objective(format!("reading objective output: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Objective(format!(
                    "no response within {:.0?} for x = {x:?}",
                    self.timeout
                )))
            }
            Err(RecvTimeoutError::Disconnected) => return Err(Self::exit_error(running)),
        };
        let response: Response = serde_json::from_str(reply.trim())
            .map_err(|e| Error::Protocol(format!("bad response line {reply:?}: {e}")))?;
        if response.y.len() != self.num_objectives {
            return Err(Error::Protocol(format!(
                "response line {reply:?} has {} values, expected {}",
                response.y.len(),
                self.num_objectives
            )));
        }
        Ok(response.y)
    }
}

impl ObjectiveFn for SubprocessObjective {
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(x.len(), self.dim);
        let mut guard = self.state.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let running = guard.as_mut().expect("spawned above");
        let result = self.round_trip(running, x);
        if result.is_err() {
            // a failed child is not reused; the next call starts a fresh one
            *guard = None;
        }
        result
    }
}
