//! Objectives evaluated by another program.
//!
//! Protocol: the decision is written to the child's stdin as one line of
//! whitespace-separated decimals; the child answers with one line holding a
//! single float (already in maximization orientation).

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Objective;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalMode {
    /// A fresh process per evaluation; stdin is closed after the decision.
    OneShot,
    /// One long-lived process answering one line per decision.
    Persistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpec {
    /// Shell command line (run through `sh -c`).
    pub command: String,
    pub mode: ExternalMode,
    pub timeout_s: f64,
}

impl ExternalSpec {
    pub fn one_shot(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            mode: ExternalMode::OneShot,
            timeout_s: 30.0,
        }
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s.max(0.0))
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

pub struct ExternalObjective {
    spec: ExternalSpec,
    session: Option<Session>,
}

fn fail(msg: impl Into<String>) -> Error {
    Error::EvaluationFailed(msg.into())
}

fn spawn(command: &str) -> Result<Child> {
    Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| fail(format!("cannot start {command:?}: {e}")))
}

fn format_decision(x: &[f64]) -> String {
    let mut line = x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
    line.push('\n');
    line
}

fn parse_value(line: &str) -> Result<f64> {
    let t = line.trim();
    let v: f64 = t.parse().map_err(|_| fail(format!("unparseable objective output {t:?}")))?;
    if !v.is_finite() {
        return Err(fail(format!("non-finite objective value {t}")));
    }
    Ok(v)
}

impl ExternalObjective {
    pub fn new(spec: ExternalSpec) -> Result<Self> {
        if spec.command.trim().is_empty() {
            return Err(Error::Config("empty external command".into()));
        }
        if !(spec.timeout_s > 0.0) {
            return Err(Error::Config("external timeout must be positive".into()));
        }
        Ok(Self { spec, session: None })
    }

    fn one_shot(&self, x: &[f64]) -> Result<f64> {
        let mut child = spawn(&self.spec.command)?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut out = String::new();
            let r = stdout.read_to_string(&mut out).map(|_| out);
            let _ = tx.send(r);
        });
        // A child that ignores stdin may already have exited; that is fine.
        let _ = stdin.write_all(format_decision(x).as_bytes());
        drop(stdin);
        let out = match rx.recv_timeout(self.spec.timeout()) {
            Ok(r) => r.map_err(|e| fail(format!("reading objective output: {e}")))?,
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(fail(format!("objective timed out after {} s", self.spec.timeout_s)));
            }
        };
        let status = child.wait().map_err(|e| fail(e.to_string()))?;
        if !status.success() {
            return Err(fail(format!("objective exited with {status}")));
        }
        let line = out.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        parse_value(line)
    }

    fn persistent(&mut self, x: &[f64]) -> Result<f64> {
        if self.session.is_none() {
            let mut child = spawn(&self.spec.command)?;
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
            self.session = Some(Session { child, stdin, lines: rx });
        }
        let timeout = self.spec.timeout();
        let session = self.session.as_mut().expect("session started");
        let answer = match session.stdin.write_all(format_decision(x).as_bytes()).and_then(|_| session.stdin.flush()) {
            Err(e) => Err(fail(format!("objective closed its input: {e}"))),
            Ok(()) => match session.lines.recv_timeout(timeout) {
                Ok(Ok(line)) => parse_value(&line),
                Ok(Err(e)) => Err(fail(format!("reading objective output: {e}"))),
                Err(RecvTimeoutError::Timeout) => Err(fail(format!("objective timed out after {} s", self.spec.timeout_s))),
                Err(RecvTimeoutError::Disconnected) => Err(fail("objective exited")),
            },
        };
        if answer.is_err() {
            self.shutdown();
        }
        answer
    }

    fn shutdown(&mut self) {
        if let Some(mut s) = self.session.take() {
            let _ = s.child.kill();
            let _ = s.child.wait();
        }
    }
}

impl Objective for ExternalObjective {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        match self.spec.mode {
            ExternalMode::OneShot => self.one_shot(x),
            ExternalMode::Persistent => self.persistent(x),
        }
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        self.shutdown();
    }
}
