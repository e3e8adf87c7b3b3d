use std::fs;
use std::path::{Path, PathBuf};

use grand_morrey::cli::run;
use grand_morrey::norms::GridFunction;
use grand_morrey::space::QuasimetricSpace;
use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn gm(out: &Path, args: &[&str]) -> i32 {
    let mut all = vec!["gmorrey".to_string(), "--out".to_string(), out.display().to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    run(all)
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

#[test]
fn space_build_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gm(dir.path(), &["space", "build", "snowflake8:0.5", "--name", "flake"]), 0);
    let space = QuasimetricSpace::load(dir.path().join("flake.space")).unwrap();
    assert_eq!(space.len(), 8);
    let built = dir.path().join("flake.space").display().to_string();
    assert_eq!(gm(dir.path(), &["space", "analyze", &built]), 0);
    let g = json(dir.path().join("flake.geometry.json"));
    let c_t = g.pointer("/constants/c_t").and_then(Value::as_f64).expect("c_t in geometry report");
    assert!(c_t >= 1.0 && c_t <= 2.0, "{c_t}");
}

#[test]
fn norm_eval_matches_direct_sum() {
    let dir = tempfile::tempdir().unwrap();
    let f = data("bump4.fn");
    assert_eq!(gm(dir.path(), &["norm", "eval", "--norm", "lebesgue", "--p", "2", &f, &data("grid4.space")]), 0);
    let v = json(dir.path().join("lebesgue--bump4--grid4.norm.json"));
    let value = v.pointer("/report/value").and_then(Value::as_f64).unwrap();
    let expected = ((1.0 + 0.0 + 4.0 + 0.25) / 4.0f64).sqrt();
    assert!((value - expected).abs() < 1e-14, "{value} vs {expected}");

    assert_eq!(
        gm(dir.path(), &["norm", "eval", "--norm", "grand-morrey", "--p", "2", "--lambda", "0.5", "--phi", "pow:1", "--A", "zero", &f, "grid4"]),
        0
    );
    let g = json(dir.path().join("grand-morrey--bump4--grid4.norm.json"));
    assert!(g.pointer("/report/value").and_then(Value::as_f64).unwrap() > 0.0);
}

#[test]
fn op_apply_writes_function() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gm(dir.path(), &["op", "apply", "--op", "maximal", &data("bump4.fn"), "grid4"]), 0);
    let mf = GridFunction::load(dir.path().join("maximal--bump4--grid4.fn")).unwrap();
    let f = GridFunction::load(data("bump4.fn")).unwrap();
    for (m, v) in mf.values().iter().zip(f.values()) {
        assert!(m >= v);
    }
    assert_eq!(gm(dir.path(), &["op", "apply", "--op", "cz", "--kernel", "hilbert", &data("bump4.fn"), "grid4"]), 0);
    assert!(dir.path().join("cz--bump4--grid4.fn").exists());
}

#[test]
fn certify_exit_codes_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let space = data("grid16.space");
    assert_eq!(gm(dir.path(), &["certify", "run", "--theorem", "prop3.5", &space, "--family", "ball-indicators"]), 0);
    let report = json(dir.path().join("maximal-morrey--grid16.report.json"));
    assert_eq!(report["pass"], Value::Bool(true));
    assert!(dir.path().join("maximal-morrey--grid16.timing.json").exists());

    let tiny = dir.path().join("tiny.json");
    fs::write(&tiny, r#"{"c_0": 0.001}"#).unwrap();
    let code = gm(
        dir.path(),
        &["certify", "run", "--theorem", "maximal-morrey", &space, "--family", "ball-indicators", "--constants", tiny.to_str().unwrap()],
    );
    assert_eq!(code, 2);

    assert_eq!(gm(dir.path(), &["report", "index", dir.path().to_str().unwrap()]), 0);
    let index = json(dir.path().join("index.json"));
    let entries = index.as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["inequality"], "maximal-morrey");
    assert!(dir.path().join("index.csv").exists());
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gm(dir.path(), &["certify", "run", "--theorem", "thm9.9", "grid16"]), 1);
    assert_eq!(gm(dir.path(), &["space", "analyze", "/nonexistent/space.space"]), 1);
    assert_eq!(gm(dir.path(), &["op", "apply", "--op", "riesz-gamma", "--alpha", "2", "--gamma", "1", &data("bump4.fn"), "grid4"]), 1);
    assert_eq!(gm(dir.path(), &["certify", "run", "--theorem", "riesz-morrey", "grid16", "--alpha", "0.9"]), 1);
    assert_eq!(gm(dir.path(), &["norm", "eval", "--norm", "morrey", "--p", "2", &data("bump4.fn"), "grid16"]), 1);
}
