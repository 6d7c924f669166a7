use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use ndarray::Array2;

use super::FeatureScorer;
use crate::numerics::{stack_latents, LatentVector};
use crate::{npy, Error, Matrix, Result};

/// Scorer backed by an out-of-process responder sharing a directory.
///
/// Each batch is written as `latents-<id>.npy` (`n × d`, float32). The
/// responder answers with `scores-<id>.npy` (`n × m`, float32); both files
/// are removed once the reply has been read.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    dir: PathBuf,
    d: usize,
    names: Vec<String>,
    timeout: Duration,
    poll: Duration,
}

impl ExternalScorer {
    pub fn new(dir: impl Into<PathBuf>, d: usize, names: Vec<String>, timeout: Duration) -> Result<Self> {
        let dir = dir.into();
        if d == 0 || names.is_empty() {
            return Err(Error::invalid("external scorer needs d ≥ 1 and at least one feature"));
        }
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, d, names, timeout, poll: Duration::from_millis(5) })
    }

    pub fn with_poll_interval(mut self, poll: Duration) -> Self {
        self.poll = poll;
        self
    }

    pub fn request_dir(&self) -> &Path {
        &self.dir
    }

    fn exchange(&self, latents: &Array2<f32>) -> Result<Array2<f32>> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let request = self.dir.join(format!("latents-{id}.npy"));
        let reply = self.dir.join(format!("scores-{id}.npy"));
        npy::write(&request, latents.view())?;

        let start = Instant::now();
        let result = loop {
            if reply.exists() {
                match npy::read(&reply) {
                    Ok(scores) => break Ok(scores),
                    // Possibly still being written; retry until the deadline.
                    Err(Error::Format(_)) if start.elapsed() < self.timeout => {}
                    Err(Error::Format(msg)) => break Err(Error::Protocol(format!("unreadable reply: {msg}"))),
                    Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
                    Err(e) => break Err(e),
                }
            }
            if start.elapsed() >= self.timeout {
                break Err(Error::ScorerTimeout { request: id.clone(), waited_ms: start.elapsed().as_millis() });
            }
            thread::sleep(self.poll);
        };
        let _ = fs::remove_file(&request);
        let _ = fs::remove_file(&reply);
        result
    }
}

impl FeatureScorer for ExternalScorer {
    fn dim(&self) -> usize {
        self.d
    }

    fn feature_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn feature_count(&self) -> usize {
        self.names.len()
    }

    fn score_rows(&self, latents: &[LatentVector<f64>]) -> Result<Matrix> {
        if latents.is_empty() {
            return Ok(Matrix::zeros((0, self.names.len())));
        }
        let payload = stack_latents(latents)?.mapv(|v| v as f32);
        let scores = self.exchange(&payload)?;
        let want = (latents.len(), self.names.len());
        if scores.dim() != want {
            return Err(Error::Protocol(format!("reply has shape {:?}, expected {want:?}", scores.dim())));
        }
        Ok(scores.mapv(f64::from))
    }
}
