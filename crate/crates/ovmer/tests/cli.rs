use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ovmer(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ovmer"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn result_value<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix("RESULT: ")?.strip_prefix(key)?.strip_prefix(' '))
        .unwrap_or_else(|| panic!("no RESULT line for {key} in {out}"))
}

fn short_config(dir: &Path, extra: &str) {
    let demo = ovmer(&["demo", "--out", "."], dir);
    assert!(demo.status.success(), "{}", stderr(&demo));
    let text = fs::read_to_string(dir.join("config.toml")).unwrap();
    let text = text
        .replace("iterations = 500", "iterations = 30")
        .replace("checkpoint_every = 100", "checkpoint_every = 10");
    fs::write(dir.join("config.toml"), format!("{text}{extra}")).unwrap();
}

#[test]
fn demo_then_train_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    short_config(dir.path(), "");
    let out = ovmer(&["train", "--config", "config.toml"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(result_value(&stdout(&out), "iterations"), "30");
    let run = dir.path().join("run");
    for f in [
        "trace.csv",
        "trace.json",
        "checkpoint_final.json",
        "summary.json",
        "predictions.jsonl",
        "config.resolved.toml",
        "checkpoints/iter_000010.json",
        "checkpoints/iter_000030.json",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let csv = fs::read_to_string(run.join("trace.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "iteration,mean_reward,mean_accuracy,format_rate,mean_kl,loss,grad_norm"
    );
    assert_eq!(csv.lines().count(), 31);
    assert!(!fs::read_dir(&run)
        .unwrap()
        .any(|e| e.unwrap().path().extension().is_some_and(|x| x == "tmp")));
}

#[test]
fn seed_and_out_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    short_config(dir.path(), "");
    for (seed, out) in [("1", "a"), ("1", "b"), ("2", "c")] {
        let o = ovmer(
            &["train", "--config", "config.toml", "--seed", seed, "--out", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let trace = |d: &str| fs::read(dir.path().join(d).join("trace.csv")).unwrap();
    assert_eq!(trace("a"), trace("b"));
    assert_ne!(trace("a"), trace("c"));
    let resolved = fs::read_to_string(dir.path().join("c/config.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 2"), "{resolved}");
}

#[test]
fn group_of_one_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    short_config(dir.path(), "");
    let text = fs::read_to_string(dir.path().join("config.toml"))
        .unwrap()
        .replace("group_size = 8", "group_size = 1");
    fs::write(dir.path().join("config.toml"), text).unwrap();
    let out = ovmer(&["train", "--config", "config.toml"], dir.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(
        err.starts_with("error[validation]:") && err.contains("group_size"),
        "{err}"
    );
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    short_config(dir.path(), "");
    let text = fs::read_to_string(dir.path().join("config.toml"))
        .unwrap()
        .replace("clip_eps", "clip_epsilon");
    fs::write(dir.path().join("config.toml"), text).unwrap();
    let out = ovmer(&["train", "--config", "config.toml"], dir.path());
    assert!(stderr(&out).starts_with("error[config]:"), "{}", stderr(&out));
}

#[test]
fn trained_predictions_score_against_references() {
    let dir = tempfile::tempdir().unwrap();
    short_config(dir.path(), "");
    assert!(ovmer(&["train", "--config", "config.toml"], dir.path())
        .status
        .success());
    let out = ovmer(
        &[
            "eval",
            "--predictions",
            "run/predictions.jsonl",
            "--references",
            "references.jsonl",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let score: f64 = result_value(&stdout(&out), "aggregate_score").parse().unwrap();
    assert!((0.0..=1.0).contains(&score));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_sample"].as_array().unwrap().len(), 4);
}

#[test]
fn eval_identity_swap_and_empty_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("a.jsonl"),
        "{\"id\":\"1\",\"labels\":[\"happy\"]}\n{\"id\":\"2\",\"labels\":[\"sad\",\"angry\"]}\n",
    )
    .unwrap();
    fs::write(
        d.join("b.jsonl"),
        "{\"id\":\"1\",\"labels\":[\"joyful\",\"calm\"]}\n{\"id\":\"2\",\"labels\":[\"grief\"]}\n",
    )
    .unwrap();
    fs::write(
        d.join("empty.jsonl"),
        "{\"id\":\"1\",\"labels\":[]}\n{\"id\":\"2\",\"labels\":[]}\n",
    )
    .unwrap();
    let score = |p: &str, r: &str| {
        let out = ovmer(&["eval", "--predictions", p, "--references", r, "--workers", "2"], d);
        assert!(out.status.success(), "{}", stderr(&out));
        result_value(&stdout(&out), "aggregate_score").to_string()
    };
    assert_eq!(score("a.jsonl", "a.jsonl"), "1.0000");
    assert_eq!(score("a.jsonl", "b.jsonl"), score("b.jsonl", "a.jsonl"));
    assert_eq!(score("a.jsonl", "b.jsonl"), "0.7500");
    assert_eq!(score("empty.jsonl", "a.jsonl"), "0.0000");
}

#[test]
fn eval_reports_missing_samples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("p.jsonl"), "{\"id\":\"1\",\"labels\":[\"happy\"]}\n").unwrap();
    fs::write(
        d.join("r.jsonl"),
        "{\"id\":\"1\",\"labels\":[\"happy\"]}\n{\"id\":\"2\",\"labels\":[\"sad\"]}\n",
    )
    .unwrap();
    let out = ovmer(&["eval", "--predictions", "p.jsonl", "--references", "r.jsonl"], d);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error[alignment]:") && err.contains("`2`"), "{err}");
}

#[test]
fn make_coldstart_emits_well_formed_targets() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(ovmer(&["demo", "--out", "."], d).status.success());
    let out = ovmer(
        &[
            "make-coldstart",
            "--input",
            "descriptions.jsonl",
            "--wheel",
            "wheel.json",
            "--out",
            "targets.jsonl",
        ],
        d,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(result_value(&stdout(&out), "rows"), "4");
    let text = fs::read_to_string(d.join("targets.jsonl")).unwrap();
    for line in text.lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(ovmer_core::check_format(row["target"].as_str().unwrap()).well_formed);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ovmer(&["train", "--config", "nope.toml"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[io]:"), "{}", stderr(&out));
}
