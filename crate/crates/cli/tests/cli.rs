use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn cubemap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubemap"))
        .args(args)
        .env_remove("CUBEMAP_THREADS")
        .output()
        .expect("spawn cubemap")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_three_point_ultrametric() {
    let out = cubemap(&["validate", "--input", path(&data("ultra3.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["metric"], true);
    assert_eq!(v["ultrametric"], true);
}

#[test]
fn validate_rejects_a_broken_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, r#"{"dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}"#).unwrap();
    let out = cubemap(&["validate", "--input", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["metric"], false);
    assert_eq!(v["witness"]["kind"], "triangle");
}

#[test]
fn exact_order_of_the_square() {
    let out = cubemap(&["order", "--input", path(&data("square.json")), "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let c = v["c"].as_f64().unwrap();
    assert!((c - 1.41421356).abs() < 1e-8, "{c}");
    assert_eq!(v["order"].as_array().unwrap().len(), 4);
}

#[test]
fn tree_addresses_match_distances() {
    let out = cubemap(&["tree", "--input", path(&data("ultra3.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["tree"]["diam"].as_f64(), Some(1.0));
    // b and c split below a
    assert_eq!(v["addresses"][1][0], v["addresses"][2][0]);
    assert_ne!(v["addresses"][0][0], v["addresses"][1][0]);
}

#[test]
fn measure_lists_every_node() {
    let out = cubemap(&["measure", "--tree", path(&data("small_tree.json")), "--s", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let masses = v["masses"].as_object().unwrap();
    assert_eq!(masses.len(), 9);
    assert_eq!(masses["/"].as_f64(), v["total"].as_f64());
    assert!((v["total"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(v["frostman_ok"], true);
}

#[test]
fn gmap_on_dyadic_tree_is_the_binary_expansion() {
    let out = cubemap(&["gmap", "--tree", path(&data("dyadic.json")), "--s", "1", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let values: Vec<f64> = v["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["value"].as_f64().unwrap())
        .collect();
    let want: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
    assert_eq!(values, want);
    assert_eq!(v["ok"], true);
}

#[test]
fn curve_point_and_check() {
    let out = cubemap(&["curve", "--k", "2", "--depth", "1", "--t", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["index"], "1");
    assert_eq!(v["cell"], serde_json::json!([0, 1]));
    assert_eq!(v["scale"].as_f64(), Some(0.5));

    let out = cubemap(&["curve", "--k", "3", "--check", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["bijective"], true);
}

#[test]
fn map_on_planar_dust_emits_a_passing_report() {
    let out = cubemap(&[
        "map",
        "--ifs",
        path(&data("cantor4.json")),
        "--k",
        "1",
        "--depth",
        "8",
        "--verify-pairs",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["ok"], true);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["seed"], 7);
    let emp = v["empirical_constant"].as_f64().unwrap();
    let bound = v["predicted_bound"].as_f64().unwrap();
    assert!(emp > 0.0 && emp <= bound);
    assert_eq!(v["coverage_fraction"].as_f64(), Some(1.0));
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let tree = data("uniform16.json");
    let run = |name: &str, threads: Option<&str>| {
        let file = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cubemap"));
        cmd.args([
            "map",
            "--tree",
            path(&tree),
            "--k",
            "2",
            "--depth",
            "4",
            "--verify-pairs",
            "2000",
            "--seed",
            "11",
            "--output",
            file.to_str().unwrap(),
        ]);
        match threads {
            Some(n) => cmd.env("CUBEMAP_THREADS", n),
            None => cmd.env_remove("CUBEMAP_THREADS"),
        };
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        std::fs::read(file).unwrap()
    };
    let first = run("a.json", None);
    assert_eq!(first, run("b.json", None));
    assert_eq!(first, run("c.json", Some("3")));
    assert_eq!(first, run("d.json", Some("1")));
}

#[test]
fn text_format_is_a_key_value_table() {
    let out = cubemap(&[
        "verify",
        "--tree",
        path(&data("dyadic.json")),
        "--k",
        "1",
        "--depth",
        "6",
        "--format",
        "text",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let ok = text.lines().find(|l| l.starts_with("ok ")).unwrap();
    assert!(ok.ends_with("true"));
    assert!(text.lines().any(|l| l.starts_with("predicted_bound")));
}

#[test]
fn zero_mass_source_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("point.json");
    std::fs::write(&file, r#"{"diam": 0}"#).unwrap();
    let out = cubemap(&["map", "--tree", file.to_str().unwrap(), "--k", "1", "--depth", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("total mass is zero"));
}

#[test]
fn dim_of_the_cantor_set() {
    let out = cubemap(&["dim", "--ifs", path(&data("cantor.json")), "--depth", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let sim = v["similarity_dimension"].as_f64().unwrap();
    let est = v["box_counting"]["slope"].as_f64().unwrap();
    assert!((sim - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    assert!((est - 0.6309).abs() < 0.05);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(cubemap(&["--bogus"]).status.code(), Some(64));
    assert_eq!(cubemap(&["order"]).status.code(), Some(64));
    assert_eq!(cubemap(&["map", "--k", "1", "--depth", "2"]).status.code(), Some(64));
    assert_eq!(cubemap(&["--help"]).status.code(), Some(0));
    assert_eq!(cubemap(&["--version"]).status.code(), Some(0));
}

#[test]
fn unreadable_input_exits_1() {
    let out = cubemap(&["validate", "--input", "/nonexistent/space.json"]);
    assert_eq!(out.status.code(), Some(1));
    let bad = Command::new(env!("CARGO_BIN_EXE_cubemap"))
        .args(["validate", "--input", path(&data("ultra3.json"))])
        .env("CUBEMAP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}
