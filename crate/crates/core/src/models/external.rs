//! Couples an out-of-process simulator: one child process per simulation,
//! input CSV on its stdin, output CSV expected on its stdout.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::signal::Signal;

use super::{InputRange, SimError, SystemModel};

#[derive(Debug, Clone)]
pub struct ExternalModel {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    pub inputs: Vec<InputRange>,
    pub outputs: Vec<String>,
    pub horizon: f64,
    pub step: f64,
    pub timeout: Duration,
}

impl SystemModel for ExternalModel {
    fn name(&self) -> &str {
        "external"
    }

    fn inputs(&self) -> &[InputRange] {
        &self.inputs
    }

    fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn nominal_step(&self) -> f64 {
        self.step
    }

    fn run(&self, u: &Signal) -> Result<Signal, SimError> {
        let (program, args) = self.command.split_first().ok_or_else(|| SimError::External("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SimError::External(format!("cannot start `{program}`: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload = u.to_csv();
        let writer = thread::spawn(move || {
            // a child that exits early closes the pipe; that surfaces below
            let _ = stdin.write_all(payload.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let start = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if start.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(SimError::Timeout(self.timeout.as_secs_f64()));
                }
                Ok(None) => thread::sleep(Duration::from_millis(1)),
                Err(e) => return Err(SimError::External(e.to_string())),
            }
        };
        let _ = writer.join();
        let out = reader
            .join()
            .map_err(|_| SimError::External("stdout reader panicked".into()))?
            .map_err(|e| SimError::External(e.to_string()))?;
        let err_text = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(SimError::External(format!("`{program}` exited with {status}: {}", err_text.trim())));
        }

        let signal = Signal::from_csv(out.as_slice()).map_err(|e| SimError::External(e.to_string()))?;
        if signal.var_names() != self.outputs.as_slice() {
            return Err(SimError::External(format!(
                "output columns {:?}, expected {:?}",
                signal.var_names(),
                self.outputs
            )));
        }
        if signal.len() != u.len() || (signal.step() - u.step()).abs() > 1e-9 * u.step() {
            return Err(SimError::External("output grid differs from input grid".into()));
        }
        // re-base on the exact input step so downstream grid checks agree
        Signal::from_flat(u.step(), signal.var_names().to_vec(), signal.as_flat().to_vec())
            .map_err(|e| SimError::External(e.to_string()))
    }
}
