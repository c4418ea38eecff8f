//! Predictions supplied by a file or by a long-running child process.
//!
//! Child protocol, one item per line: the engine sends `BEGIN <id> <iter>`,
//! the solution document and `END`; the child answers with any number of
//! `unstable <i> <j>` lines followed by `DONE`.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen_io::{parse_unstable_line, read_prediction_doc, write_solution_doc};
use crate::model::{objective_unchecked, Instance, Solution};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExternalSource {
    File(PathBuf),
    /// Run through `sh -c`.
    Command(String),
}

pub(super) fn read_file(path: &Path, instance: &Instance) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path)?;
    let (id, set) = read_prediction_doc(&text, instance.len())?;
    if id != instance.id() {
        return Err(Error::Protocol(format!(
            "prediction file is for instance `{id}`, expected `{}`",
            instance.id()
        )));
    }
    Ok(set.iter().map(|e| (e.lo(), e.hi())).collect())
}

pub(super) struct Child {
    process: std::process::Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Child {
    pub(super) fn spawn(cmd: &str) -> Result<Self> {
        let mut process = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = process.stdin.take().expect("piped stdin");
        let stdout = process.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Child { process, stdin, lines: rx })
    }

    pub(super) fn query(
        &mut self,
        instance: &Instance,
        solution: &Solution,
        iteration: usize,
        timeout: Duration,
    ) -> Result<Vec<(usize, usize)>> {
        let mut request = format!("BEGIN {} {}\n", instance.id(), iteration);
        request.push_str(&write_solution_doc(solution, objective_unchecked(instance, solution)));
        request.push_str("END\n");
        self.stdin
            .write_all(request.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Protocol(format!("cannot write to segmenter process: {e}")))?;

        let deadline = Instant::now() + timeout;
        let mut pairs = Vec::new();
        let mut line_no = 0;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(Error::Protocol(format!("read failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    let _ = self.process.kill();
                    return Err(Error::Protocol(format!("no DONE within {} ms", timeout.as_millis())));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Protocol("segmenter process closed its output".into()))
                }
            };
            line_no += 1;
            let line = line.trim();
            if line == "DONE" {
                return Ok(pairs);
            }
            let pair = parse_unstable_line(line, line_no, instance.len())
                .map_err(|e| Error::Protocol(format!("unexpected reply `{line}`: {e}")))?;
            pairs.push(pair);
        }
    }
}

impl Drop for Child {
    fn drop(&mut self) {
        let _ = self.process.kill();
        let _ = self.process.wait();
    }
}
