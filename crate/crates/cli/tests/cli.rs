use std::fs;

use hh_cli::parse_and_dispatch;

#[test]
fn help_and_usage_errors() {
    assert_eq!(parse_and_dispatch(["hh", "--help"]), 0);
    assert_eq!(parse_and_dispatch(["hh"]), 2);
    assert_eq!(parse_and_dispatch(["hh", "bogus"]), 2);
    assert_eq!(parse_and_dispatch(["hh", "cn", "--set", "nope=1", "--print-defaults"]), 2);
    assert_eq!(parse_and_dispatch(["hh", "cn", "--set", "q"]), 2);
}

#[test]
fn print_defaults_and_config_file() {
    assert_eq!(parse_and_dispatch(["hh", "all", "--print-defaults"]), 0);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "q = 1.3\n[decay]\npoints_per_ray = 9\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(parse_and_dispatch(["hh", "decay", "--config", cfg, "--print-defaults"]), 0);
    fs::write(dir.path().join("bad.toml"), "unknown_key = 3\n").unwrap();
    assert_eq!(parse_and_dispatch(["hh", "decay", "--config", dir.path().join("bad.toml").to_str().unwrap()]), 2);
}

#[test]
fn cn_writes_report_and_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(parse_and_dispatch(["hh", "cn", "--n", "1", "--quick", "--out", out, "--threads", "1", "--seed", "3"]), 0);
    let report = fs::read_to_string(dir.path().join("cn/report.json")).unwrap();
    assert!(report.contains("\"experiment\": \"cn\"") && report.contains("\"seed\": 3"));
    assert!(!report.contains("runtime"));
    let secs: f64 = fs::read_to_string(dir.path().join("cn/runtime.txt")).unwrap().trim().parse().unwrap();
    assert!(secs >= 0.0);
}
