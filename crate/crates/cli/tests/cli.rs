use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn lerchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lerchlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lerchlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const PAIR: &[&str] = &[
    "--lambdas",
    "1/3, 2/3",
    "--centers",
    "0.75+0.1i, 0.75-0.1i",
    "--targets",
    "1.1; 0.9",
    "--tau-max",
    "20",
];

#[test]
fn help_and_usage_errors_have_the_documented_codes() {
    assert_eq!(lerchlab(&["--help"]).status.code(), Some(0));
    assert_eq!(lerchlab(&["scan", "--help"]).status.code(), Some(0));
    assert_eq!(lerchlab(&[]).status.code(), Some(2));
    assert_eq!(lerchlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lerchlab(&["eval"]).status.code(), Some(2));
    assert_eq!(
        lerchlab(&["eval", "--sigma", "0.7", "--method", "magic"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lerchlab(&["eval", "--sigma", "0.7", "--threads", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lerchlab(&["eval", "--config", "/nonexistent/lerchlab.conf"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn duplicate_lambdas_exit_2_and_name_the_pair() {
    let out = lerchlab(&[
        "scan",
        "--lambdas",
        "0.5, 1/2",
        "--centers",
        "0.75, 0.75",
        "--targets",
        "1; 1",
        "--tau-max",
        "5",
        "--epsilon",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0.5"), "{err}");
}

#[test]
fn empty_bergman_window_exits_1() {
    let out = lerchlab(&["bergman", "--lambdas", "1/3, 2/3", "--g", "1; 1", "--x", "5"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn huge_epsilon_gives_full_density() {
    let mut args = vec!["scan", "--epsilon", "1e9", "--threads", "2"];
    args.extend_from_slice(PAIR);
    let doc = stdout_json(&lerchlab(&args));
    assert_eq!(doc["result"]["density"], 1.0);
    assert_eq!(doc["config"]["epsilon"], "1e9");
    assert!(doc["config"].get("threads").is_none());
}

#[test]
fn trace_flag_emits_every_grid_point() {
    let mut args = vec!["scan", "--epsilon", "0.8", "--trace", "--format", "csv"];
    args.extend_from_slice(PAIR);
    let out = lerchlab(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("#= trace = true"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "tau,distance");
    assert_eq!(data.len(), 1 + 401);
    let tau: f64 = data[2].split(',').next().unwrap().parse().unwrap();
    assert_eq!(tau, 0.05);
}

#[test]
fn phi_over_a_full_period_vanishes() {
    let doc = stdout_json(&lerchlab(&["phi", "--theta", "0.25", "--t", "3"]));
    let v = doc["result"]["value"].as_array().unwrap();
    assert!(v.iter().all(|x| x.as_f64().unwrap().abs() < 1e-15), "{v:?}");
}

#[test]
fn zero_bergman_element_gives_zero_rows() {
    let doc = stdout_json(&lerchlab(&[
        "bergman",
        "--lambdas",
        "1/3, 2/3",
        "--g",
        "0; 0",
        "--x",
        "8, 10",
        "--window-exponent",
        "1",
    ]));
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        for key in ["s", "s1", "s2_abs", "cum_sum"] {
            assert_eq!(row[key], 0.0, "{row}");
        }
    }
}

#[test]
fn random_model_is_deterministic_per_seed() {
    let args = [
        "random",
        "--seed",
        "7",
        "--samples",
        "3",
        "--n",
        "500",
        "--format",
        "csv",
    ];
    let a = lerchlab(&args);
    let b = lerchlab(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = lerchlab(&[
        "random",
        "--seed",
        "8",
        "--samples",
        "1",
        "--n",
        "500",
        "--format",
        "csv",
    ]);
    let row = |o: &Output, i: usize| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .nth(i)
            .map(str::to_owned)
    };
    assert_eq!(row(&a, 2), row(&c, 1));
}

#[test]
fn outputs_rerun_from_their_own_headers() {
    for format in ["json", "csv"] {
        let first = scratch(&format!("first.{format}"));
        let second = scratch(&format!("second.{format}"));
        let mut args = vec![
            "scan",
            "--epsilon",
            "0.8",
            "--format",
            format,
            "--output",
            first.to_str().unwrap(),
        ];
        args.extend_from_slice(PAIR);
        assert!(lerchlab(&args).status.success());
        let rerun = lerchlab(&[
            "scan",
            "--config",
            first.to_str().unwrap(),
            "--threads",
            "1",
            "--output",
            second.to_str().unwrap(),
        ]);
        assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }
}

#[test]
fn flags_override_config_files() {
    let conf = scratch("eval.conf");
    std::fs::write(&conf, "# zeta at 2\nsigma = 2\nalpha = 1\nlambda = 1\nt = 0\n").unwrap();
    let doc = stdout_json(&lerchlab(&["eval", "--config", conf.to_str().unwrap()]));
    let re = doc["result"]["value"][0].as_f64().unwrap();
    assert!((re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-10);
    let doc = stdout_json(&lerchlab(&["eval", "--config", conf.to_str().unwrap(), "--sigma", "4"]));
    let re = doc["result"]["value"][0].as_f64().unwrap();
    assert!((re - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-10);
    assert_eq!(doc["config"]["sigma"], "4");
}
