//! End-to-end runs of the `mask-advisor` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mask-advisor"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn summarize_writes_histograms_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("running_example.csv");
    run_ok(dir.path(), &["summarize", "--data", &data, "--label", "Health", "--out", "a.json"]);
    run_ok(dir.path(), &["summarize", "--data", &data, "--label", "Health", "--out", "b.json"]);
    let a = read_json(&dir.path().join("a.json"));
    assert_eq!(a["Age"]["10"], 4);
    assert_eq!(a["Age"]["55"], 30);
    assert_eq!(a["Age"]["80"], 10);
    assert_eq!(a["Health"]["M"], 30);
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
    assert!(dir.path().join("a.manifest.json").exists());
}

#[test]
fn empty_dataset_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "Age,Health\n").unwrap();
    let out = run(dir.path(), &["summarize", "--data", "empty.csv", "--label", "Health", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty dataset"));
    assert!(!dir.path().join("s.json").exists());
}

#[test]
fn provider_and_middleware_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (data, configs) = (fixture("running_example.csv"), fixture("running_configs.json"));
    run_ok(dir.path(), &["summarize", "--data", &data, "--label", "Health", "--out", "summary.json"]);
    let table = run_ok(
        dir.path(),
        &[
            "advise", "--data", &data, "--label", "Health", "--configs", &configs, "--measure", "mi", "--case",
            "with-1d", "--emit-masked-joints", "joints.json", "--out", "provider.json",
        ],
    );
    assert!(table.trim_end().ends_with("selected: identity-all"), "{table}");
    run_ok(
        dir.path(),
        &[
            "advise", "--masked-joints", "joints.json", "--summaries", "summary.json", "--configs", &configs,
            "--measure", "mi", "--case", "with-1d", "--out", "middleware.json",
        ],
    );
    let provider = std::fs::read(dir.path().join("provider.json")).unwrap();
    assert_eq!(provider, std::fs::read(dir.path().join("middleware.json")).unwrap());
    assert_eq!(read_json(&dir.path().join("provider.json"))["selected"], "identity-all");
    assert!(dir.path().join("provider.manifest.json").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (data, configs) = (fixture("running_example.csv"), fixture("running_configs.json"));
    let bad_measure = run(
        dir.path(),
        &["advise", "--data", &data, "--label", "Health", "--configs", &configs, "--measure", "acc", "--out", "r.json"],
    );
    assert_eq!(bad_measure.status.code(), Some(2));
    let no_source = run(dir.path(), &["advise", "--configs", &configs, "--measure", "mi", "--out", "r.json"]);
    assert_eq!(no_source.status.code(), Some(2));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn mask_applies_configuration_row_by_row() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        dir.path(),
        &[
            "mask", "--data", &fixture("excerpt.csv"), "--label", "Health", "--configs", &fixture("excerpt_m2.json"),
            "--out", "masked.csv",
        ],
    );
    let text = std::fs::read_to_string(dir.path().join("masked.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("Age,Weight,Zip,Health"));
    assert_eq!(lines.next(), Some("Young,\"[30,35)\",21162,G"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn identity_mask_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("running_example.csv");
    run_ok(
        dir.path(),
        &[
            "mask", "--data", &data, "--label", "Health", "--configs", &fixture("running_configs.json"),
            "--config-id", "identity-all", "--out", "same.csv",
        ],
    );
    assert_eq!(
        std::fs::read_to_string(dir.path().join("same.csv")).unwrap(),
        std::fs::read_to_string(&data).unwrap()
    );
}

#[test]
fn configuration_missing_an_attribute_is_rejected_before_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("partial.json"),
        r#"[{"id": "p", "assignments": [{"attribute": "Age", "kind": "suppress"}]}]"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["mask", "--data", &fixture("excerpt.csv"), "--label", "Health", "--configs", "partial.json", "--out", "m.csv"],
    );
    assert!(!out.status.success());
    assert!(!dir.path().join("m.csv").exists());
}

#[test]
fn generated_configurations_and_evaluation_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("running_example.csv");
    for out in ["c1.json", "c2.json"] {
        run_ok(
            dir.path(),
            &["gen-configs", "--data", &data, "--label", "Health", "--k", "50", "--seed", "7", "--out", out],
        );
    }
    let c1 = std::fs::read(dir.path().join("c1.json")).unwrap();
    assert_eq!(c1, std::fs::read(dir.path().join("c2.json")).unwrap());
    assert_eq!(read_json(&dir.path().join("c1.json")).as_array().unwrap().len(), 50);

    run_ok(
        dir.path(),
        &[
            "evaluate", "--data", &data, "--label", "Health", "--configs", "c1.json", "--methods",
            "ipf-with-1d,sampling", "--seed", "3", "--out", "records.ndjson", "--csv", "records.csv",
        ],
    );
    let records = std::fs::read_to_string(dir.path().join("records.ndjson")).unwrap();
    // 50 configurations x 3 attributes x 2 methods.
    assert_eq!(records.lines().count(), 300);
    let summary = read_json(&dir.path().join("records.summary.json"));
    let with_1d = summary["ipf-with-1d"]["median-tvd"].as_f64().unwrap();
    let sampling = summary["sampling"]["median-tvd"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&with_1d) && (0.0..=1.0).contains(&sampling));
    assert!(summary.get("ipf-no-1d").is_none());
    assert!(dir.path().join("records.csv").exists());
    assert!(dir.path().join("records.manifest.json").exists());
}
