//! End-to-end tests of the diskop binary: worked examples from the scene
//! corpus, exit codes, and the determinism of verification reports
//! (acceptance criterion 11).

use std::path::PathBuf;
use std::process::{Command, Output};

fn diskop() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diskop"))
}

fn scene(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    diskop()
        .args(args)
        .env_remove("DISKOP_NUMERIC_MODE")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn acceptance_11_verify_reports_are_byte_identical() {
    let args = [
        "verify", "--suite", "all", "--seed", "42", "--trials", "25", "--json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(
        first.status.success(),
        "verify failed: {}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert_eq!(
        first.stdout, second.stdout,
        "ACCEPTANCE 11 cli-determinism: FAIL — reports differ"
    );
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).expect("valid JSON");
    assert_eq!(report["seed"], 42);
    let suites = report["suites"].as_array().expect("suite list");
    assert!(!suites.is_empty());
    for suite in suites {
        assert_eq!(suite["failures"], 0, "suite {} failed", suite["name"]);
    }
    println!(
        "ACCEPTANCE 11 cli-determinism: PASS ({} suites, byte-identical reports)",
        suites.len()
    );
}

#[test]
fn validate_star_example_exits_zero() {
    let out = run(&[
        "validate",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--config",
        "x",
        "--level",
        "star",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["valid"], true);
}

#[test]
fn validate_failure_exits_one() {
    // The tight pair is star-valid but not separated.
    let out = run(&[
        "validate",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--config",
        "x",
        "--level",
        "separated",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn worked_division_example() {
    let out = run(&[
        "divide",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--x",
        "x",
        "--y",
        "y",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["divides"], true);
    assert_eq!(v["alpha"], serde_json::json!([1]));
    assert_eq!(v["quotients"][0][0]["scales"][0], "1/3");
    assert_eq!(v["quotients"][1], serde_json::json!([]));
}

#[test]
fn five_disk_partition_matches_figure() {
    let out = run(&[
        "partition",
        "--scene",
        scene("five_disks.json").to_str().unwrap(),
        "--x",
        "x",
        "--y",
        "y",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["pairs"], serde_json::json!([[1, 1], [2, 1], [3, 2]]));
    assert_eq!(v["l1"], serde_json::json!([1, 2]));
    assert_eq!(v["l2"], serde_json::json!([2]));
    assert_eq!(v["r1"], serde_json::json!([3]));
    assert_eq!(v["r2"], serde_json::json!([1]));
}

#[test]
fn entry_time_worked_example() {
    let out = run(&[
        "entry-time",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--config",
        "f",
        "--kind",
        "shrink-left",
        "--inner",
        "Binner",
        "--outer",
        "B",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["t"], "3/13");
}

#[test]
fn tree_eval_and_core_normalize() {
    let out = run(&[
        "tree-eval",
        "--scene",
        scene("product_tree.json").to_str().unwrap(),
        "--tree",
        "t",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["arity"], 2);
    assert_eq!(v["flags"]["core"], true);

    let out = run(&[
        "core-normalize",
        "--scene",
        scene("product_tree.json").to_str().unwrap(),
        "--config",
        "w",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["sigma"], serde_json::json!([1, 2]));
    assert_eq!(v["partitionV"], serde_json::json!([[1], [2]]));
    assert_eq!(v["partitionW"], serde_json::json!([[1, 2]]));
}

#[test]
fn compose_subcommand_runs_a_division_backwards() {
    // x has arity 2; α sends the single result slot into slot 1, so the
    // quotients are (y, empty). Component: x₁ ∘ y₁ = scale 3/100 at
    // (-13/20, 0).
    let out = run(&[
        "compose",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--x",
        "x",
        "--alpha",
        "1",
        "--quotients",
        "y,empty",
        "--json",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["arity"], 1);
    assert_eq!(v["maps"][0]["scales"][0], "3/100");
    assert_eq!(v["maps"][0]["translation"][0], "-13/20");
}

#[test]
fn flow_subcommand_scales_maps() {
    let out = run(&[
        "flow",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--config",
        "f",
        "--kind",
        "shrink-right",
        "--t",
        "1/2",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["maps"][0]["scales"][0], "1/4");
    assert_eq!(v["maps"][0]["translation"][0], "2/5");
}

#[test]
fn render_is_deterministic_and_draws_circles() {
    let five = scene("five_disks.json");
    let args = [
        "render",
        "--scene",
        five.to_str().unwrap(),
        "--configs",
        "x,y",
        "--axes",
        "1,2",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let svg = stdout(&first);
    assert_eq!(svg.matches("<circle").count(), 6, "domain plus five disks");
    let enlarged = run(&[
        "render",
        "--scene",
        scene("separated.json").to_str().unwrap(),
        "--configs",
        "s",
        "--axes",
        "1,2",
        "--enlarge",
    ]);
    let svg = stdout(&enlarged);
    assert_eq!(svg.matches("<circle").count(), 7, "domain, 3 solid, 3 dashed");
    assert!(svg.contains("stroke-dasharray"));
}

#[test]
fn triangles_subcommand_runs_on_singletons() {
    // Build a temporary scene with a separated singleton pair.
    let text = r#"{
        "blockStructure": { "dimension": 2, "coarse": [[1, 2]], "fine": [[1, 2]] },
        "numericMode": "exact",
        "group": { "elements": ["e"], "table": [[0]], "identity": 0,
                   "matrices": [[["1","0"],["0","1"]]] },
        "domains": { "B": { "blocks": [{ "center": ["0","0"], "radius": "1" }] } },
        "configs": {
            "x": { "domain": "B", "maps": [
                { "ortho": [["1","0"],["0","1"]], "scales": ["1/10"], "translation": ["0","0"] } ] },
            "y": { "domain": "B", "maps": [
                { "ortho": [["1","0"],["0","1"]], "scales": ["1/20"], "translation": ["1/10","0"] } ] }
        }
    }"#;
    let dir = std::env::temp_dir().join("diskop-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("triangle.json");
    std::fs::write(&path, text).unwrap();
    let out = run(&[
        "triangles",
        "--scene",
        path.to_str().unwrap(),
        "--x",
        "x",
        "--y",
        "y",
        "--json",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["right"][0]["scales"][0], "1/2");
    assert_eq!(v["down"][0]["scales"][0], "1/20");
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["verify", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let out = run(&[
        "divide",
        "--scene",
        scene("division.json").to_str().unwrap(),
        "--x",
        "missing",
        "--y",
        "y",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["verify", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numeric_mode_env_var_converts_the_scene() {
    let out = diskop()
        .args([
            "divide",
            "--scene",
            scene("division.json").to_str().unwrap(),
            "--x",
            "x",
            "--y",
            "y",
            "--json",
        ])
        .env("DISKOP_NUMERIC_MODE", "float")
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["divides"], true);
    // Float mode serializes scalars as numbers.
    assert!(v["quotients"][0][0]["scales"][0].is_number());
}
