use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

fn typify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_typify"))
        .args(args)
        .env_remove("TYPIFY_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = typify(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn infer_writes_predictions_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("preds.json");
    ok(&["infer", path(&fixture("trigger_dict")), "--out", path(&out), "--no-retrieval"]);
    let preds: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let seqs = preds
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "seqs")
        .unwrap();
    assert_eq!(seqs["predictions"][0]["type"], "list[list[str]]");
    assert_eq!(seqs["predictions"][0]["confidence"], "high");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("preds.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["module_count"], 1);
    assert_eq!(meta["config"]["retrieval_enabled"], false);
}

#[test]
fn repeated_infer_runs_are_byte_identical() {
    let root = fixture("determinism");
    let a = ok(&["infer", path(&root)]);
    let b = ok(&["infer", path(&root), "--sequential"]);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn graph_prints_the_schedule() {
    let text = ok(&["graph", path(&fixture("scheduling"))]);
    let dump: serde_json::Value = serde_json::from_str(&text).unwrap();
    let schedule: Vec<String> = dump["schedule"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c[0].as_str().unwrap().to_string())
        .collect();
    let pos = |m: &str| schedule.iter().position(|s| s == m).unwrap();
    assert!(pos("math") < pos("utils.mathops"));
    assert!(pos("utils.mathops") < pos("main"));
}

#[test]
fn strip_infer_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let stripped = dir.path().join("stripped");
    let index = dir.path().join("index");
    let preds = dir.path().join("preds.json");
    let report = dir.path().join("report.json");
    let summary = ok(&["strip", path(&fixture("corpus/geometry")), "--out", path(&stripped)]);
    assert!(summary.contains("truth entries"));
    ok(&["index", "build", path(&fixture("corpus/ledger")), "--out", path(&index)]);
    let stats = ok(&["index", "stats", path(&index)]);
    assert!(stats.starts_with("docs: "));
    ok(&["infer", path(&stripped), "--index", path(&index), "--out", path(&preds)]);
    let table = ok(&[
        "eval",
        "--pred",
        path(&preds),
        "--truth",
        path(&stripped.join("truth.json")),
        "--out",
        path(&report),
        "--ks",
        "1,3",
    ]);
    assert!(table.contains("all"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let top1 = &json["tasks"]["all"]["exact"]["top1"];
    assert!(top1["total"].as_u64().unwrap() > 0);
    assert!(json["tasks"]["all"]["exact"]["top5"].is_null());
}

#[test]
fn strict_flag_changes_scoring() {
    let pred = fixture("eval/predictions.json");
    let truth = fixture("eval/truth.json");
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, extra: &[&str]| -> serde_json::Value {
        let out = dir.path().join(name);
        let mut args = vec!["eval", "--pred", path(&pred), "--truth", path(&truth), "--out", path(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap()
    };
    let lenient = read("lenient.json", &[]);
    let strict = read("strict.json", &["--strict-user-types"]);
    assert_eq!(lenient["tasks"]["all"]["exact"]["top1"]["correct"], 4);
    assert_eq!(strict["tasks"]["all"]["exact"]["top1"]["correct"], 3);
}

#[test]
fn missing_root_fails_with_message() {
    let out = typify(&["infer", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("typify: error:"));
}

#[test]
fn bad_log_level_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_typify"))
        .args(["graph", path(&fixture("cycle"))])
        .env("TYPIFY_LOG", "loud")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_honoured_and_unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.py"), "def f(x):\n    return x\n\n\nf(1)\nf(\"s\")\n").unwrap();
    std::fs::write(dir.path().join("typify.toml"), "retrieval = false\ntop_k = 1\n").unwrap();
    let text = ok(&["infer", path(dir.path())]);
    let preds: serde_json::Value = serde_json::from_str(&text).unwrap();
    for p in preds.as_array().unwrap() {
        assert!(p["predictions"].as_array().unwrap().len() <= 1);
    }
    std::fs::write(dir.path().join("typify.toml"), "bogus = 1\n").unwrap();
    assert_eq!(typify(&["infer", path(dir.path())]).status.code(), Some(1));
}
