use std::fs;
use std::path::{Path, PathBuf};

use digipop_cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .canonicalize()
        .unwrap()
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["digipop"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// The shipped demo config with its data paths made absolute, plus `edit`.
fn write_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut cfg: Value =
        serde_json::from_str(&fs::read_to_string(data_dir().join("config.json")).unwrap()).unwrap();
    for key in ["problems", "responses", "profiles", "profile_spec"] {
        let rel = cfg["data"][key].as_str().unwrap().to_string();
        cfg["data"][key] = Value::String(data_dir().join(rel).display().to_string());
    }
    edit(&mut cfg);
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn files_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn missing_config_is_a_usage_error() {
    let (code, _, err) = invoke(&["ingest"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--config"));
}

#[test]
fn unknown_subcommand_or_flag_is_a_usage_error() {
    assert_eq!(invoke(&["--config", "c.json", "frobnicate"]).0, EXIT_USAGE);
    assert_eq!(
        invoke(&["--config", "c.json", "--bogus", "ingest"]).0,
        EXIT_USAGE
    );
    assert_eq!(invoke(&["--config", "c.json"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["--help"]).0, EXIT_OK);
}

#[test]
fn unreadable_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        invoke(&["--config", missing.to_str().unwrap(), "ingest"]).0,
        EXIT_DATA
    );
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"train": {"learning_rate": -1}}"#).unwrap();
    assert_eq!(
        invoke(&["--config", bad.to_str().unwrap(), "ingest"]).0,
        EXIT_DATA
    );
}

#[test]
fn off_scale_response_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let responses = dir.path().join("r.csv");
    fs::write(&responses, "participant_id,problem_id,value\nh000,q01,9\n").unwrap();
    let cfg = write_config(dir.path(), |c| {
        c["data"]["responses"] = Value::String(responses.display().to_string())
    });
    let out = dir.path().join("out");
    let (code, _, err) = invoke(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "ingest",
    ]);
    assert_eq!(code, EXIT_DATA, "{err}");
}

#[test]
fn ingest_summarizes_the_demo_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |_| {});
    let out = dir.path().join("out");
    let (code, stdout, err) = invoke(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "ingest",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["n_problems"], 12);
    assert_eq!(v["n_responses"], 280);
    assert_eq!(v["n_profiles"], 40);
}

#[test]
fn evaluating_the_reference_against_itself_gives_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |c| {
        c["data"]["predicted"] = c["data"]["responses"].clone();
    });
    let out = dir.path().join("out");
    let (code, _, err) = invoke(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "evaluate",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let report = digipop::data::load_report(out.join("reports/report.json")).unwrap();
    for m in report.metrics.values() {
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.avg_wd, 0.0);
    }
}

#[test]
fn full_pipeline_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |_| {});
    let mut trees = Vec::new();
    for run_dir in ["a", "b"] {
        let out = dir.path().join(run_dir);
        for step in [
            "ingest",
            "reference",
            "train",
            "simulate",
            "aggregate",
            "evaluate",
            "report",
        ] {
            let (code, _, err) = invoke(&[
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "11",
                "--out-dir",
                out.to_str().unwrap(),
                step,
            ]);
            assert_eq!(code, EXIT_OK, "{step}: {err}");
        }
        trees.push(files_under(&out));
    }
    assert!(trees[0].len() >= 12);
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn warm_cache_reuses_stored_completions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |_| {});
    let out = dir.path().join("out");
    let args = [
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "reference",
    ];
    assert_eq!(invoke(&args).0, EXIT_OK);
    let journal = fs::read(out.join("cache/responses.jsonl")).unwrap();
    let refs = fs::read(out.join("reports/references.json")).unwrap();
    assert_eq!(invoke(&args).0, EXIT_OK);
    assert_eq!(
        fs::read(out.join("cache/responses.jsonl")).unwrap(),
        journal
    );
    assert_eq!(fs::read(out.join("reports/references.json")).unwrap(), refs);
}

#[test]
fn small_sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"seed": 3, "sweep": {"n_workers": [2, 4], "tasks_per_worker": [3], "sigma_resp": [1],
            "eps_div": [0], "repetitions": 2, "test_virtual_workers": 3,
            "net": {"embed": 4, "hidden": 4, "d_delta": 2},
            "train": {"epochs": 3, "j": 2}, "blender": {"j": 2}, "reference": {"k": 1}}}"#,
    )
    .unwrap();
    let mut trees = Vec::new();
    for run_dir in ["a", "b"] {
        let out = dir.path().join(run_dir);
        let (code, stdout, err) = invoke(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "sweep",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(stdout.contains("\"cells\": 2"));
        trees.push(files_under(&out.join("sweeps")));
    }
    assert_eq!(trees[0].len(), 3);
    assert_eq!(trees[0], trees[1]);
}
