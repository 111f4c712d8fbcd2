//! Bridge to an external per-patch command, typically a trained model
//! wrapped in a small script.
//!
//! Each invocation serializes the patch to the raw tensor format in a
//! fresh temporary directory, appends the input and output paths as the
//! final two arguments of the configured command, and reads the result
//! back. The bridge enforces a wall-clock timeout and a cap on concurrent
//! child processes.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};
use crate::processor::PatchProcessor;
use crate::tensor::{read_tensor, write_tensor};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

/// Counting semaphore for the child-process cap.
struct ChildLimiter {
    free: Mutex<usize>,
    cond: Condvar,
}

impl ChildLimiter {
    fn new(limit: usize) -> Self {
        ChildLimiter {
            free: Mutex::new(limit.max(1)),
            cond: Condvar::new(),
        }
    }

    fn acquire(&self) -> ChildPermit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cond.wait(free).unwrap();
        }
        *free -= 1;
        ChildPermit { limiter: self }
    }
}

struct ChildPermit<'a> {
    limiter: &'a ChildLimiter,
}

impl Drop for ChildPermit<'_> {
    fn drop(&mut self) {
        let mut free = self.limiter.free.lock().unwrap();
        *free += 1;
        self.limiter.cond.notify_one();
    }
}

pub struct ExternalProcessor {
    name: String,
    command: Vec<String>,
    workdir: PathBuf,
    timeout: Duration,
    limiter: ChildLimiter,
}

impl ExternalProcessor {
    /// `command` is the argv prefix; the input and output tensor paths are
    /// appended on every call. `max_children` caps concurrent invocations
    /// (0 means "one per rayon worker").
    pub fn new(
        command: Vec<String>,
        workdir: impl AsRef<Path>,
        timeout: Duration,
        max_children: usize,
    ) -> Result<Self> {
        if command.is_empty() {
            return Err(SglcError::Config("external command is empty".into()));
        }
        let limit = if max_children == 0 {
            rayon::current_num_threads()
        } else {
            max_children
        };
        Ok(ExternalProcessor {
            name: format!("external:{}", command.join(" ")),
            command,
            workdir: workdir.as_ref().to_path_buf(),
            timeout,
            limiter: ChildLimiter::new(limit),
        })
    }

    fn invoke(&self, patch: &ImageBuffer) -> Result<ImageBuffer> {
        let scratch = tempfile::Builder::new()
            .prefix("sglc-patch-")
            .tempdir_in(&self.workdir)
            .map_err(|e| SglcError::Io {
                path: self.workdir.clone(),
                source: e,
            })?;
        let input_path = scratch.path().join("input.sglct");
        let output_path = scratch.path().join("output.sglct");
        write_tensor(patch, &input_path)?;

        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(&input_path)
            .arg(&output_path)
            .current_dir(&self.workdir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SglcError::ExternalSpawn {
                command: self.command[0].clone(),
                source: e,
            })?;

        // Drain stderr on a helper thread so a chatty child cannot fill
        // the pipe and stall. The pipe may be inherited by grandchildren
        // that outlive a killed child, so collection goes through a
        // channel with a bounded wait instead of a join.
        let stderr_pipe = child.stderr.take();
        let (stderr_tx, stderr_rx) = std::sync::mpsc::channel::<String>();
        std::thread::spawn(move || {
            let mut buf = String::new();
            if let Some(mut pipe) = stderr_pipe {
                use std::io::Read;
                let _ = pipe.read_to_string(&mut buf);
            }
            let _ = stderr_tx.send(buf);
        });
        let collect_stderr = |wait: Duration| -> String {
            stderr_rx.recv_timeout(wait).unwrap_or_default()
        };

        let started = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {
                    if started.elapsed() >= self.timeout {
                        let _ = child.kill();
                        let _ = child.wait();
                        let stderr = collect_stderr(Duration::from_millis(200));
                        return Err(SglcError::ExternalTimeout {
                            seconds: self.timeout.as_secs(),
                            stderr: trim_stderr(&stderr),
                        });
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => {
                    let _ = child.kill();
                    return Err(SglcError::ExternalSpawn {
                        command: self.command[0].clone(),
                        source: e,
                    });
                }
            }
        };
        let stderr = trim_stderr(&collect_stderr(Duration::from_secs(10)));

        if !status.success() {
            return Err(SglcError::ExternalExit {
                status: status.code().unwrap_or(-1),
                stderr,
            });
        }
        let output = match read_tensor(&output_path) {
            Ok(img) => img,
            Err(SglcError::MalformedTensor(message)) => {
                return Err(SglcError::ExternalMalformedTensor { message, stderr })
            }
            Err(SglcError::Io { path, source }) => {
                return Err(SglcError::ExternalMalformedTensor {
                    message: format!("missing output tensor {}: {source}", path.display()),
                    stderr,
                })
            }
            Err(other) => return Err(other),
        };
        if output.dims() != patch.dims() {
            let (h, w, c) = patch.dims();
            let (oh, ow, oc) = output.dims();
            return Err(SglcError::ExternalShapeMismatch {
                expected: format!("{h}x{w}x{c}"),
                got: format!("{oh}x{ow}x{oc}"),
                stderr,
            });
        }
        Ok(output)
    }
}

fn trim_stderr(s: &str) -> String {
    const LIMIT: usize = 4096;
    let trimmed = s.trim();
    if trimmed.len() > LIMIT {
        format!("{}... [truncated]", &trimmed[..LIMIT])
    } else {
        trimmed.to_string()
    }
}

impl PatchProcessor for ExternalProcessor {
    fn name(&self) -> &str {
        &self.name
    }

    fn process(&self, patch: &ImageBuffer) -> Result<ImageBuffer> {
        let _permit = self.limiter.acquire();
        self.invoke(patch)
    }
}
