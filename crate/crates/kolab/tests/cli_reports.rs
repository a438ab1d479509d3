//! CLI-level checks: exit codes, report schema, cache files, config handling.
//!
//! The golden file freezes the byte-stable projection (everything except
//! `wall_time`) of one reduce report. Re-bless with
//! `UPDATE_GOLDEN=1 cargo test -p kolab --test cli_reports`.

use std::path::PathBuf;

use kolab::cli::{normalize_report, run_captured};

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kolab-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn reduce_report_matches_golden() {
    let dir = temp_dir("golden");
    let json_path = dir.join("reduce.json");
    let (code, out, err) = run_captured(&[
        "reduce",
        "--x",
        "000",
        "--m",
        "5",
        "--seed",
        "3",
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(out.starts_with("LOOPS"), "{out}");

    let actual = normalize_report(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let golden_path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden/reduce_x000_m5_seed3.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden_path, actual.clone() + "\n").unwrap();
    }
    let golden = std::fs::read_to_string(&golden_path).unwrap();
    assert_eq!(actual.trim_end(), golden.trim_end(), "golden report drifted");
}

#[test]
fn report_envelope_has_the_contract_fields() {
    let dir = temp_dir("envelope");
    let json_path = dir.join("halting.json");
    let (code, _, _) = run_captured(&[
        "halting",
        "--x",
        "0000000",
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    for key in ["schema_version", "command", "config", "config_hash", "seed", "costs", "wall_time"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "halting");
    assert_eq!(report["halts"], true);
}

#[test]
fn complexity_command_caches_and_reloads() {
    let dir = temp_dir("cache");
    let cache = dir.join("cache");
    let args = [
        "complexity",
        "--machine",
        "v",
        "--x",
        "0110",
        "--bound",
        "10",
        "--cache_dir",
        cache.to_str().unwrap(),
    ];
    let (code, out1, err) = run_captured(&args);
    assert_eq!(code, 0, "{err}");
    let files: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(files.len(), 1, "expected one cache file");

    // second run answers from the cache file, byte-identically
    let (code, out2, _) = run_captured(&args);
    assert_eq!(code, 0);
    assert_eq!(out1, out2);

    // a budget change must not reuse the stale cache
    let mut args_changed: Vec<&str> = args.to_vec();
    args_changed.extend_from_slice(&["--exec_budget", "512"]);
    let (code, out3, _) = run_captured(&args_changed);
    assert_eq!(code, 0);
    assert_eq!(out1, out3, "value itself unchanged at this scale");
    assert_eq!(
        std::fs::read_dir(&cache).unwrap().count(),
        2,
        "changed params get their own cache file"
    );
}

#[test]
fn config_file_applies_and_flags_override() {
    let dir = temp_dir("config");
    let config_path = dir.join("run.conf");
    std::fs::write(&config_path, "seed=77\npad=3\nslack=3\n").unwrap();
    let json_path = dir.join("reduce.json");
    let (code, _, err) = run_captured(&[
        "reduce",
        "--x",
        "000",
        "--m",
        "4",
        "--config",
        config_path.to_str().unwrap(),
        "--seed",
        "99",
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["seed"], 99, "flag overrides config file");

    std::fs::write(&config_path, "seed=77\nbogus=1\n").unwrap();
    let (code, _, err) = run_captured(&[
        "reduce",
        "--x",
        "000",
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "unknown config keys are usage errors: {err}");
}

#[test]
fn hex_bit_literals_accepted_everywhere() {
    let (code_bin, out_bin, _) = run_captured(&["halting", "--x", "0000000"]);
    let (code_hex, out_hex, _) = run_captured(&["halting", "--x", "00:7"]);
    assert_eq!(code_bin, 0);
    assert_eq!(code_hex, 0);
    assert_eq!(out_bin, out_hex);
}

#[test]
fn calibrate_emits_json_report() {
    let dir = temp_dir("calibrate");
    let json_path = dir.join("cal.json");
    let (code, out, err) = run_captured(&[
        "calibrate",
        "--max-len",
        "5",
        "--pad",
        "1",
        "--bound",
        "10",
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("gap_star="), "{out}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["command"], "calibrate");
    assert!(report.get("gap_star").is_some());
    assert!(report.get("params_hash").is_some());
}

#[test]
fn cache_dir_env_override() {
    let dir = temp_dir("env");
    // set_var is process-global; this is the only test touching it
    std::env::set_var("KOLAB_CACHE_DIR", dir.join("from-env").to_str().unwrap());
    let (code, _, err) = run_captured(&[
        "complexity",
        "--machine",
        "vopt",
        "--x",
        "1",
        "--bound",
        "6",
    ]);
    std::env::remove_var("KOLAB_CACHE_DIR");
    assert_eq!(code, 0, "{err}");
    assert!(dir.join("from-env").exists());
}
