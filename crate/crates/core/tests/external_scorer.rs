//! File-exchange protocol with an in-process responder thread.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use latent_shift::axis::FeatureAxis;
use latent_shift::numerics::{sample_gaussian_latents, LatentVector};
use latent_shift::world::{score_batch, ExternalScorer, FeatureScorer};
use latent_shift::{npy, Error};
use ndarray::Array2;

type Reply = Box<dyn Fn(&Array2<f32>) -> Array2<f32> + Send>;

/// Answers every `latents-<id>.npy` with `scores-<id>.npy` computed by
/// `reply`, recording each request payload it saw.
struct Responder {
    stop: Arc<AtomicBool>,
    seen: Arc<Mutex<Vec<Array2<f32>>>>,
    handle: Option<JoinHandle<()>>,
}

impl Responder {
    fn spawn(dir: &Path, reply: Reply) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let seen = Arc::new(Mutex::new(Vec::new()));
        let (dir, stop2, seen2) = (dir.to_path_buf(), stop.clone(), seen.clone());
        let handle = thread::spawn(move || {
            while !stop2.load(Ordering::Relaxed) {
                for (id, path) in pending(&dir) {
                    let Ok(latents) = npy::read(&path) else { continue };
                    let scores = reply(&latents);
                    seen2.lock().unwrap().push(latents);
                    npy::write(&dir.join(format!("scores-{id}.npy")), scores.view()).unwrap();
                }
                thread::sleep(Duration::from_millis(2));
            }
        });
        Self { stop, seen, handle: Some(handle) }
    }
}

impl Drop for Responder {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn pending(dir: &Path) -> Vec<(String, PathBuf)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).into_iter().flatten().flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_prefix("latents-").and_then(|r| r.strip_suffix(".npy")) {
            if !dir.join(format!("scores-{id}.npy")).exists() {
                out.push((id.to_string(), entry.path()));
            }
        }
    }
    out
}

fn scorer(dir: &Path, d: usize, names: &[&str], timeout_ms: u64) -> ExternalScorer {
    ExternalScorer::new(dir, d, names.iter().map(|s| s.to_string()).collect(), Duration::from_millis(timeout_ms))
        .unwrap()
        .with_poll_interval(Duration::from_millis(1))
}

#[test]
fn payload_round_trips_exactly_and_files_are_cleaned_up() {
    let tmp = tempfile::tempdir().unwrap();
    let responder = Responder::spawn(tmp.path(), Box::new(|l| Array2::from_elem((l.nrows(), 2), 0.5)));
    let s = scorer(tmp.path(), 8, &["a", "b"], 10_000);
    let zs = sample_gaussian_latents::<f64>(4, 8, 17).unwrap();
    let scores = score_batch(&s, &zs).unwrap();
    assert_eq!(scores.dim(), (4, 2));
    assert!(scores.iter().all(|&v| v == 0.5));

    let seen = responder.seen.lock().unwrap().clone();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].dim(), (4, 8));
    for (row, z) in seen[0].rows().into_iter().zip(&zs) {
        for (got, want) in row.iter().zip(z.as_slice()) {
            assert_eq!(got.to_bits(), (*want as f32).to_bits());
        }
    }
    drop(responder);
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0, "request and reply files must be removed");
}

#[test]
fn missing_reply_times_out() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scorer(tmp.path(), 3, &["a"], 50);
    let z = vec![LatentVector::zeros(3)];
    match s.score_rows(&z) {
        Err(e @ Error::ScorerTimeout { .. }) => assert_eq!(e.category(), "scorer-timeout"),
        other => panic!("expected a timeout, got {other:?}"),
    }
}

#[test]
fn wrong_reply_shape_is_a_protocol_error() {
    let tmp = tempfile::tempdir().unwrap();
    let _responder = Responder::spawn(tmp.path(), Box::new(|l| Array2::from_elem((l.nrows(), 3), 0.5)));
    let s = scorer(tmp.path(), 3, &["a"], 10_000);
    let err = s.score_rows(&[LatentVector::zeros(3)]).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err:?}");
}

#[test]
fn out_of_range_scores_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let _responder = Responder::spawn(tmp.path(), Box::new(|l| Array2::from_elem((l.nrows(), 1), 1.5)));
    let s = scorer(tmp.path(), 3, &["a"], 10_000);
    let err = score_batch(&s, &[LatentVector::zeros(3)]).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err:?}");
}

#[test]
fn cli_fits_an_axis_through_the_external_scorer() {
    let tmp = tempfile::tempdir().unwrap();
    let exchange = tmp.path().join("exchange");
    fs::create_dir_all(&exchange).unwrap();
    // Feature "smile" depends on the third latent coordinate only.
    let _responder = Responder::spawn(
        &exchange,
        Box::new(|l| {
            Array2::from_shape_fn((l.nrows(), 1), |(i, _)| 1.0 / (1.0 + (-2.0 * l[[i, 2]]).exp()))
        }),
    );
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{ "external_scorer": {{ "dir": {:?}, "d": 6, "features": ["smile"], "timeout_secs": 30 }},
                 "axis": {{ "n_fit": 500 }} }}"#,
            exchange.display().to_string()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let args = ["lfs", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "fit-axis"];
    assert_eq!(latent_shift::cli::main_with_args(args), 0);
    let axis = FeatureAxis::<f64>::load(&out.join("axes").join("smile.json")).unwrap();
    assert!(axis.direction[2] > 0.999, "direction {:?}", axis.direction);
    assert_eq!(axis.n_fit, 500);
}

#[test]
fn scorer_reports_its_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scorer(tmp.path(), 5, &["x", "y"], 10);
    assert_eq!((s.dim(), s.feature_count()), (5, 2));
    assert!(ExternalScorer::new(tmp.path(), 0, vec!["x".into()], Duration::from_millis(1)).is_err());
}
