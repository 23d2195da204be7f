use std::process::Command;

use help_core::cli::run;
use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/data/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run_capture(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("help").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
}

#[test]
fn a5_zc_report() {
    let (code, out) = run_capture(&["zc", &data("a5")]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("orders checked: 2 3 5 6 10 15 30"));
    assert!(out.contains("order 2: 1 (trivial only)"));
    assert!(out.contains("order 5: 2 (trivial only)"));
    assert!(out.contains("order 6: none"));
    assert!(out.trim_end().ends_with("ZC: Proved"));
}

#[test]
fn m11_zc_is_unknown() {
    let (code, out) = run_capture(&["zc", &data("m11")]);
    assert_eq!(code, 2);
    assert!(out.contains("ZC: Unknown (order 4: nontrivial solutions"), "{out}");
}

#[test]
fn m11_order_twelve_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o12.json");
    let (code, out) = run_capture(&["--json-out", path.to_str().unwrap(), "order", "12", &data("m11")]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("order 12: 0 admissible, 3 rejected by Wagner test"), "{out}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["solutions"]["12"].as_array().unwrap().len(), 0);
    let rejected = v["wagner_rejected"]["12"].as_array().unwrap();
    assert_eq!(rejected.len(), 3);
    for t in rejected {
        let e = t["12"]["2a"].as_i64().unwrap();
        assert!(e == 1 || e == -1);
    }
}

#[test]
fn store_round_trip_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.json");
    let s = store.to_str().unwrap();
    let (code, first) = run_capture(&["--store", s, "pq", &data("m11")]);
    assert_eq!(code, 0, "{first}");
    let saved = std::fs::read_to_string(&store).unwrap();
    let (code, second) = run_capture(&["--store", s, "pq", &data("m11")]);
    assert_eq!(code, 0);
    assert_eq!(first, second);
    assert_eq!(saved, std::fs::read_to_string(&store).unwrap());
    // A store for another group is refused.
    let (code, out) = run_capture(&["--store", s, "zc", &data("a5")]);
    assert_eq!(code, 1, "{out}");
}

#[test]
fn wagner_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"6": {"6a": 1}, "3": {"3a": 1}, "2": {"2a": 1}}"#).unwrap();
    let (code, out) = run_capture(&["wagner", "6", "cyclic:6", "--tuple", good.to_str().unwrap()]);
    assert_eq!((code, out.trim()), (0, "Wagner: pass"));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"4": {"2a": 1}, "2": {"2a": 1}}"#).unwrap();
    let (code, out) = run_capture(&["wagner", "4", "cyclic:4", "--tuple", bad.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.starts_with("Wagner: fail (p=2, exponent 1"), "{out}");
}

#[test]
fn dump_systems_writes_text_files() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run_capture(&["--dump-systems", dir.path().to_str().unwrap(), "order", "6", &data("a5")]);
    assert_eq!(code, 0);
    let names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().any(|n| n.starts_with("order6_")), "{names:?}");
    for n in names {
        let text = std::fs::read_to_string(dir.path().join(&n)).unwrap();
        help_core::sysbuild::LinSystem::from_text(&text).unwrap();
    }
}

#[test]
fn binary_finds_bundles_through_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("s3"), dir.path().join("sym3.json")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_help"))
        .args(["info", "sym3"])
        .env("HELP_DATA_DIR", dir.path())
        .current_dir(dir.path().parent().unwrap())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("order: 6"));
    assert!(text.contains("solvable: true"));
    let out = Command::new(env!("CARGO_BIN_EXE_help")).args(["info", "no-such-group"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
