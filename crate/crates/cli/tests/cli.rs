use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("quiverdyn-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(out: &Path, args: &[&str]) -> (i32, Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_quiverdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QUIVERDYN_SEED")
        .output()
        .unwrap();
    let code = status.status.code().unwrap();
    let name = args.iter().find(|a| !a.starts_with('-') && !["exact", "float"].contains(a)).unwrap();
    let report = std::fs::read_to_string(out.join(format!("{name}.json")))
        .map(|s| serde_json::from_str(&s).unwrap())
        .unwrap_or(Value::Null);
    (code, report)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn subq_and_quoq_sizes() {
    let out = scratch("sizes");
    let (code, r) = run(&out, &["subq", path(&fixture("lattice5.net.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["vertex_count"], 5);
    assert_eq!(r["result"]["arrow_count"], 15);
    let (code, r) = run(&out, &["quoq", path(&fixture("quotients.net.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["vertex_count"], 6);
}

#[test]
fn empty_network_is_an_input_error() {
    let out = scratch("empty");
    let file = out.join("empty.net.json");
    std::fs::write(&file, r#"{"schema_version": 1, "nodes": [], "edges": [], "internal_dims": {}}"#).unwrap();
    assert_eq!(run(&out, &["validate", path(&file)]).0, 2);
    std::fs::write(&file, "{\n  \"nodes\": [,\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_quiverdyn")).args(["validate", path(&file)]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at 2:"));
}

#[test]
fn reports_are_byte_identical_on_rerun() {
    let (a, b) = (scratch("rerun-a"), scratch("rerun-b"));
    for out in [&a, &b] {
        let (code, _) = run(out, &["--mode", "float", "check-equivariance", path(&fixture("case1.pvf.json"))]);
        assert_eq!(code, 0);
        assert_eq!(run(out, &["casestudy-s10", "--case", "b=0"]).0, 0);
    }
    for name in ["check-equivariance.json", "casestudy-s10.json", "casestudy-s10.tsv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let r: Value = serde_json::from_slice(&std::fs::read(a.join("check-equivariance.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 0);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_override_changes_the_header() {
    let out = scratch("seed");
    let o = Command::new(env!("CARGO_BIN_EXE_quiverdyn"))
        .args(["--mode", "float", "check-equivariance", path(&fixture("case1.pvf.json")), "--out", path(&out)])
        .env("QUIVERDYN_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&std::fs::read(out.join("check-equivariance.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 17);
}

#[test]
fn admissibility_pass_and_fail() {
    let out = scratch("adm");
    let make = |terms: &str| {
        let file = out.join("field.pvf.json");
        let text = format!(
            r#"{{"schema_version": 1, "quiver": {{"schema_version": 1, "vertices": [{{"id": "v", "dim": 2}}], "arrows": []}},
                "fields": [{{"vertex": "v", "terms": [{terms}]}}]}}"#
        );
        std::fs::write(&file, text).unwrap();
        file
    };
    let net = fixture("feedforward.net.json");
    let good = make(r#"{"output": 0, "exponents": [2, 0], "coeff": "1"}, {"output": 1, "exponents": [1, 1], "coeff": "-3/2"}"#);
    assert_eq!(run(&out, &["check-admissible", path(&net), path(&good)]).0, 0);
    let bad = make(r#"{"output": 0, "exponents": [0, 1], "coeff": "1"}"#);
    let (code, r) = run(&out, &["check-admissible", path(&net), path(&bad)]);
    assert_eq!(code, 1);
    assert_eq!(r["result"]["admissible"], false);
}

#[test]
fn reduction_commands() {
    let out = scratch("reductions");
    let case1 = fixture("case1.pvf.json");
    let (code, r) = run(&out, &["ls-reduce", path(&case1)]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["kernel_dims"], serde_json::json!([2, 1, 0]));
    let (code, r) = run(&out, &["branches", path(&case1), "--vertex", "N1"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["branches"].as_array().unwrap().len(), 4);
    let tsv = std::fs::read_to_string(out.join("branches.tsv")).unwrap();
    assert!(tsv.starts_with("vertex\tbranch\texponent\tcoefficients\tsynchrony\n"));
    assert_eq!(run(&out, &["cm-reduce", path(&fixture("feedforward.pvf.json")), "--degree", "4"]).0, 0);
    assert_eq!(run(&out, &["normal-form", path(&fixture("hopf.pvf.json")), "--grade", "3"]).0, 0);
    assert_eq!(run(&out, &["sn", path(&fixture("hopf.pvf.json"))]).0, 0);
    assert_eq!(run(&out, &["spectrum", path(&case1)]).0, 0);
}

#[test]
fn case_mismatch_is_an_input_error() {
    let out = scratch("mismatch");
    let file = out.join("fg.txt");
    std::fs::write(&file, "f(x,y) = 1*x + 1*y\ng(y,x) = -1*y + 1*x\n").unwrap();
    assert_eq!(run(&out, &["casestudy-s10", "--case", "a=0", "--input", path(&file)]).0, 2);
}
