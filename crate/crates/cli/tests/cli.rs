use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use ocdm::discovery::MiningConfig;
use ocdm_cli::run_cli;
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("ocdm").chain(args.iter().copied()))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn without_duration(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).unwrap();
    v.as_object_mut().unwrap().remove("duration_seconds");
    v
}

#[test]
fn generate_then_mine_writes_the_full_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("L");
    let out = tmp.path().join("R");
    assert_eq!(run(&["generate", "publication", "--books", "100", "--seed", "42", "--out", log.to_str().unwrap()]), 0);
    let parsed = ocdm::docel::parse_docel(&log).unwrap();
    assert_eq!(parsed.events().len(), 800);
    assert!(log.join("run_manifest.json").exists());

    assert_eq!(run(&["mine", "--log", log.to_str().unwrap(), "--min-corr", "0.1", "--out", out.to_str().unwrap()]), 0);
    let names: Vec<String> = files(&out).into_keys().collect();
    for (prefix, ext) in [("drd_", ".json"), ("drd_", ".dot"), ("tree_", ".dot"), ("rules_", ".json")] {
        assert!(names.iter().any(|n| n.starts_with(prefix) && n.ends_with(ext)), "{prefix}*{ext} in {names:?}");
    }
    assert!(names.contains(&"manifest.json".to_string()));
    assert!(names.contains(&"drd_Publication_Status_shift-1_Decide_on_publication_Books.json".to_string()));
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["log_fingerprint"], ocdm::docel::log_fingerprint(&parsed));
    assert_eq!(manifest["config"]["min_corr"], 0.1);
    let listed: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(listed.len() + 1, names.len());
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn flag_defaults_match_the_mining_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("L");
    let out = tmp.path().join("R");
    assert_eq!(run(&["generate", "shipping", "--orders", "30", "--out", log.to_str().unwrap()]), 0);
    assert_eq!(run(&["mine", "--log", log.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let expected: Value = serde_json::from_str(&ocdm::export::to_canonical_json(&MiningConfig::default())).unwrap();
    assert_eq!(manifest["config"], expected);
}

#[test]
fn same_argv_gives_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("L");
    let out = tmp.path().join("R");
    let mine = ["mine", "--log", log.to_str().unwrap(), "--min-corr", "0.1", "--out", out.to_str().unwrap()];
    assert_eq!(run(&["generate", "shipping", "--seed", "3", "--out", log.to_str().unwrap()]), 0);
    assert_eq!(run(&mine), 0);
    let first = files(&out);
    fs::remove_dir_all(&out).unwrap();
    assert_eq!(run(&mine), 0);
    let second = files(&out);
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (name, bytes) in &first {
        if name == "manifest.json" {
            assert_eq!(without_duration(bytes), without_duration(&second[name]));
        } else {
            assert_eq!(bytes, &second[name], "{name}");
        }
    }
}

#[test]
fn export_reproduces_the_mined_renderings() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("L");
    let out = tmp.path().join("R");
    let again = tmp.path().join("E");
    assert_eq!(run(&["generate", "shipping", "--out", log.to_str().unwrap()]), 0);
    assert_eq!(run(&["mine", "--log", log.to_str().unwrap(), "--min-corr", "0.05", "--out", out.to_str().unwrap()]), 0);
    let stem = "drd_Shipping_Method_shift-1_Determine_shipping_method_Orders";
    let drd = out.join(format!("{stem}.json"));
    assert_eq!(run(&["export", "--drd", drd.to_str().unwrap(), "--out", again.to_str().unwrap()]), 0);
    let mined = files(&out);
    for (name, bytes) in files(&again) {
        if name != "manifest.json" {
            assert_eq!(Some(&bytes), mined.get(&name), "{name}");
        }
    }
    assert!(again.join(format!("{stem}.dot")).exists());
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ocdm")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn missing_log_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    let (code, err) = binary(&["mine", "--log", missing.to_str().unwrap(), "--out", tmp.path().join("R").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("MissingFile: "), "{err}");
}

#[test]
fn bad_flags_and_values_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = binary(&["mine", "--bogus"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("UsageError: "), "{err}");
    let (code, err) = binary(&["mine", "--log", "x", "--out", "y", "--min-corr", "1.5"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("InvalidConfig: "), "{err}");
    let (code, err) = binary(&["generate", "shipping", "--product-value", "0", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("InvalidParams: "), "{err}");
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{}").unwrap();
    let (code, err) = binary(&["export", "--drd", bad.to_str().unwrap(), "--out", tmp.path().join("E").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("Malformed: "), "{err}");
}

#[test]
fn invalid_log_reports_its_issue_code() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("L");
    assert_eq!(run(&["generate", "publication", "--books", "3", "--authors", "3", "--publishers", "3", "--out", log.to_str().unwrap()]), 0);
    let events = fs::read_to_string(log.join("events.csv")).unwrap();
    fs::write(log.join("events.csv"), events.replacen(",b1,", ",b999,", 1)).unwrap();
    let (code, err) = binary(&["mine", "--log", log.to_str().unwrap(), "--out", tmp.path().join("R").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("DanglingForeignKey: "), "{err}");
}

#[test]
fn help_exits_zero() {
    assert_eq!(binary(&["--help"]).0, 0);
    assert_eq!(binary(&["mine", "--help"]).0, 0);
}
