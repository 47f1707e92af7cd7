use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn treeword(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeword")).args(args).current_dir(root()).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn assert_schema(json: &str, schema: &str) {
    let schema: Value = serde_json::from_str(&fs::read_to_string(root().join("schema").join(schema)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let value: Value = serde_json::from_str(json).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:?}\n{json}");
}

#[test]
fn enumerate_homs_lists_five_maps_on_the_three_node_path() {
    let out = treeword(&["enumerate-homs", "--tree", "[0,1]", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["count"], 5);
    assert_schema(&stdout(&out), "homs.schema.json");
    let text = treeword(&["enumerate-homs", "--tree", "0 1"]);
    assert!(stdout(&text).starts_with("5 regressive homomorphisms"));
    assert_eq!(code(&treeword(&["enumerate-homs", "--tree", "[0,5]"])), 1);
}

#[test]
fn every_verb_emits_schema_valid_json() {
    let cases: [(&[&str], &str, i32); 8] = [
        (&["search", "instances/hindman.tw"], "witness.schema.json", 0),
        (&["search", "instances/hindman.tw", "--bound", "3"], "witness.schema.json", 2),
        (&["threshold", "instances/hales_jewett.tw"], "witness.schema.json", 0),
        (&["threshold", "instances/hindman_pairs_threshold.tw", "--bound", "3"], "witness.schema.json", 2),
        (&["delta-scan", "instances/quadratic_delta.tw"], "witness.schema.json", 0),
        (&["verify", "instances/golden/hindman.witness.json"], "verify-report.schema.json", 0),
        (&["semigroup-verify", "--bound", "2"], "semigroup-report.schema.json", 0),
        (&["enumerate-homs", "--tree", "[0,0,1]"], "homs.schema.json", 0),
    ];
    for (args, schema, expected) in cases {
        let mut argv = args.to_vec();
        argv.extend(["--format", "json"]);
        let out = treeword(&argv);
        assert_eq!(code(&out), expected, "{args:?}: {}", stderr(&out));
        assert_schema(&stdout(&out), schema);
    }
}

#[test]
fn golden_witness_verifies_and_regenerates_byte_for_byte() {
    let golden = fs::read_to_string(root().join("instances/golden/hindman.witness.json")).unwrap();
    let out = treeword(&["verify", "instances/golden/hindman.witness.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("verified"));
    let again = treeword(&["search", "instances/hindman.tw", "--format", "json"]);
    assert_eq!(stdout(&again), golden);
}

#[test]
fn mutated_golden_witness_fails_with_the_combination_printed() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fs::read_to_string(root().join("instances/golden/hindman.witness.json")).unwrap();
    assert!(golden.contains("\"[2:$1]\""));
    let mutated = dir.path().join("mutated.json");
    fs::write(&mutated, golden.replace("\"[2:$1]\"", "\"[3:$1]\"")).unwrap();
    let out = treeword(&["verify", mutated.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAILED"));
    assert!(stderr(&out).contains("violating combination"), "{}", stderr(&out));
    assert!(stderr(&out).contains("[3:$1]"), "{}", stderr(&out));
    let json = treeword(&["verify", mutated.to_str().unwrap(), "--format", "json"]);
    assert_schema(&stdout(&json), "verify-report.schema.json");
    let v: Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(v["violation"].as_array().unwrap().len(), 2);
}

#[test]
fn outputs_reverify_in_a_fresh_process_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 5] = [
        &["search", "instances/gowers.tw"],
        &["search", "instances/two_factor.tw"],
        &["threshold", "instances/hindman_pairs_threshold.tw"],
        &["delta-scan", "instances/quadratic_delta.tw"],
        &["delta-scan", "instances/points_delta.tw"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (j, jobs) in ["1", "4"].iter().enumerate() {
            let path = dir.path().join(format!("w{i}-{j}.json"));
            let mut argv = args.to_vec();
            argv.extend(["--seed", "11", "--jobs", jobs, "--format", "json", "--out", path.to_str().unwrap()]);
            let out = treeword(&argv);
            assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
            assert!(out.stdout.is_empty());
            outputs.push(fs::read(&path).unwrap());
            let check = treeword(&["verify", path.to_str().unwrap()]);
            assert_eq!(code(&check), 0, "{args:?}: {}", stdout(&check));
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn overrides_change_the_recorded_instance() {
    let out = treeword(&["search", "instances/hindman.tw", "--blocks", "2", "--colors", "3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let instance = v["instance"].as_str().unwrap();
    assert!(instance.contains("blocks = 2\n") && instance.contains("colors = 3\n"));
    assert_eq!(v["seed"], 0);
}

#[test]
fn input_errors_exit_one_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tw");
    fs::write(&bad, "[instance]\nblocks = 2\nbound = 4\nmystery = 1\n").unwrap();
    let out = treeword(&["search", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 4, column 1"), "{}", stderr(&out));
    assert_eq!(code(&treeword(&["search", "no/such/file.tw"])), 1);
    assert_eq!(code(&treeword(&["frobnicate"])), 1);
    assert_eq!(code(&treeword(&["search"])), 1);
    assert_eq!(code(&treeword(&["--help"])), 0);
    let not_json = dir.path().join("w.json");
    fs::write(&not_json, "{}").unwrap();
    assert_eq!(code(&treeword(&["verify", not_json.to_str().unwrap()])), 1);
}

#[test]
fn semigroup_verify_scans_tables() {
    let out = treeword(&["semigroup-verify", "--bound", "2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["associative_tables"], 9);
    assert_eq!(v["verified"], true);
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("z3.txt");
    fs::write(&table, "0 1 2\n1 2 0\n2 0 1\n").unwrap();
    let out = treeword(&["semigroup-verify", "--table", table.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_schema(&stdout(&out), "semigroup-report.schema.json");
    fs::write(&table, "[[0, 0], [1, 0]]").unwrap();
    let out = treeword(&["semigroup-verify", "--table", table.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("associative"), "{}", stderr(&out));
}

#[test]
fn delta_scan_writes_the_density_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = treeword(&["delta-scan", "instances/quadratic_delta.tw", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 152);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",2/5,0.400000")));
}
