//! Command-line pipeline behaviour beyond the acceptance criteria.

use std::fs;
use std::path::{Path, PathBuf};

use latent_shift::axis::FeatureAxis;
use latent_shift::cli::main_with_args;
use latent_shift::numerics::{sample_gaussian_latents, stack_latents};
use latent_shift::npy;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["lfs", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    main_with_args(args)
}

#[test]
fn compare_reports_every_architecture_with_full_size_parameter_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{ "world": { "d": 512, "features": [ { "name": "eyeglasses", "boundary": { "kind": "linear" } } ] },
             "axis": { "n_fit": 1500 },
             "pairs": { "n_candidates": 150 } }"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(run(&config, &out, &["world"]), 0);
    assert_eq!(run(&config, &out, &["fit-axis"]), 0);
    assert_eq!(run(&config, &out, &["build-pairs"]), 0);
    assert_eq!(run(&config, &out, &["compare", "--epochs", "1"]), 0);

    let csv = fs::read_to_string(out.join("compare").join("compare-eyeglasses.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("arch,mse,mae,r2,parameters"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let expected = [("a", 1_051_136), ("b", 263_168), ("c", 5_248_512), ("d", 329_088), ("e", 3_150_336)];
    assert_eq!(rows.len(), expected.len());
    for (row, (arch, params)) in rows.iter().zip(expected) {
        assert_eq!(row[0], arch);
        assert_eq!(row[4].parse::<usize>().unwrap(), params);
        for v in &row[1..4] {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn commands_name_the_missing_producer() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{ "world": { "d": 8 } }"#);
    let out = tmp.path().join("out");
    // Nothing has been produced yet.
    assert_eq!(run(&config, &out, &["fit-axis"]), 1);
    assert_eq!(run(&config, &out, &["world"]), 0);
    assert_eq!(run(&config, &out, &["build-pairs"]), 1);
    assert_eq!(run(&config, &out, &["train"]), 1);
    assert_eq!(run(&config, &out, &["eval"]), 1);
    assert!(!out.join("pairs").exists());
}

#[test]
fn malformed_arguments_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{ "world": { "d": 8 } }"#);
    let out = tmp.path().join("out");
    assert_ne!(run(&config, &out, &["train", "--arch", "z"]), 0);
    assert_ne!(run(&config, &out, &["--format", "xml", "eval"]), 0);
    let bad = write_config(tmp.path(), r#"{ "world": { "d": "eight" } }"#);
    assert_eq!(run(&bad, &out, &["world"]), 1);
}

#[test]
fn axis_shift_matches_the_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{ "world": { "d": 8 }, "axis": { "n_fit": 500 } }"#);
    let out = tmp.path().join("out");
    assert_eq!(run(&config, &out, &["world"]), 0);
    assert_eq!(run(&config, &out, &["fit-axis"]), 0);

    let zs = stack_latents(&sample_gaussian_latents::<f64>(5, 8, 3).unwrap()).unwrap();
    let input = tmp.path().join("z.npy");
    npy::write_matrix(&input, zs.view()).unwrap();
    let output = tmp.path().join("shifted.npy");
    let args = [
        "shift", "--input", input.to_str().unwrap(), "--method", "axis", "--features", "male",
        "--multiplier", "2", "--output", output.to_str().unwrap(),
    ];
    assert_eq!(run(&config, &out, &args), 0);

    let axis = FeatureAxis::<f64>::load(&out.join("axes").join("male.json")).unwrap();
    let zs32 = npy::read_matrix::<f64>(&input).unwrap();
    let shifted = npy::read_matrix::<f64>(&output).unwrap();
    assert_eq!(shifted.dim(), (5, 8));
    for (row, base) in shifted.rows().into_iter().zip(zs32.rows()) {
        for ((s, z), a) in row.iter().zip(base.iter()).zip(&axis.direction) {
            assert!((s - (z + 2.0 * a)).abs() < 1e-6);
        }
    }
}
