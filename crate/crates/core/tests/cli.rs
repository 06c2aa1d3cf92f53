//! The `llm-energy` binary: subcommands, formats, exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llm-energy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let o = bin(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn predict_with_reference_file() {
    let o = bin(&[
        "predict",
        "--coeffs",
        &data("reference.coeffs"),
        "-s",
        "1000",
        "-g",
        "100",
        "--format",
        "delimited",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let total: f64 = out
        .lines()
        .find(|l| l.starts_with("total_energy,"))
        .and_then(|l| l.split(',').nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!((total - 0.3025).abs() < 1e-4, "{total}");
}

#[test]
fn predict_analytic_with_bundled_model() {
    let o = bin(&[
        "predict",
        "--model",
        "llama-3.1-8b",
        "-s",
        "1000",
        "-g",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("analytic-roofline"));
    assert_eq!(
        bin(&["predict", "--model", "no-such-model", "-s", "1", "-g", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bin(&[
            "predict",
            "--model",
            "llama-3.1-8b",
            "--coeffs",
            &data("reference.coeffs"),
            "-s",
            "1",
            "-g",
            "1"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn trace_commands_on_fixture() {
    let f = data("thank_you_fixture.csv");
    for cmd in [
        vec!["stats", "--trace", &f],
        vec!["stats", "--trace", &f, "--phase", "decode"],
        vec!["decompose", "--trace", &f],
        vec!["hist", "--trace", &f, "--bins", "10"],
        vec!["hist", "--trace", &f, "--edges", "0,0.1,0.2,0.3,0.6"],
        vec!["fit", "--trace", &f],
    ] {
        let o = bin(&cmd);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{cmd:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = bin(&[
        "hist",
        "--trace",
        &f,
        "--bins",
        "4",
        "--format",
        "delimited",
    ]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("bin_left_edge,count"));
    let n: usize = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(n, 300);
    assert_eq!(
        bin(&["hist", "--trace", &f, "--phase", "sideways"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn malformed_trace_lines_are_reported_not_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(
        &p,
        "prompt_id,run_kind,input_tokens,output_tokens,latency_s,gpu_wh,cpu_wh,ram_wh,model_id,precision,batch\n\
         a,full,10,5,0.5,0.3,0,0,m,fp32,1\n\
         a,full,ten,5,0.5,0.3,0,0,m,fp32,1\n",
    )
    .unwrap();
    let o = bin(&[
        "stats",
        "--trace",
        p.to_str().unwrap(),
        "--format",
        "delimited",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    std::fs::write(&p, "").unwrap();
    assert_eq!(
        bin(&["stats", "--trace", p.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn compare_and_extrapolate() {
    let o = bin(&["compare", "-s", "600", "-g", "90", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let wh: Vec<f64> = v["models"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["mean_total_wh"].as_f64().unwrap())
        .collect();
    assert_eq!(wh.len(), 5);
    assert!(wh.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(v["grid"].as_array().unwrap().len(), 25);

    let o = bin(&[
        "extrapolate",
        "-s",
        "1000",
        "-g",
        "100",
        "--per-day",
        "1000",
        "--format",
        "delimited",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("daily,0.30249"));
    assert_eq!(
        bin(&["extrapolate", "--wh", "1e300", "--per-day", "1e300"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = bin(&[
            "synth",
            "--out",
            p.to_str().unwrap(),
            "--noise",
            "0.02",
            "--seed",
            "9",
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for fmt in ["table", "json", "delimited"] {
        let args = ["fit", "--trace", a.to_str().unwrap(), "--format", fmt];
        assert_eq!(bin(&args).stdout, bin(&args).stdout);
    }
}

#[test]
fn synth_fit_predict_pipeline_with_noise() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    let w = dir.path().join("w.workload");
    let c = dir.path().join("c.coeffs");
    let ts = t.to_str().unwrap();
    assert!(bin(&[
        "synth",
        "--out",
        ts,
        "--workload-out",
        w.to_str().unwrap(),
        "--noise",
        "0.01",
        "--runs",
        "10"
    ])
    .status
    .success());
    assert!(bin(&["fit", "--trace", ts, "--out", c.to_str().unwrap()])
        .status
        .success());
    let o = bin(&[
        "predict",
        "--coeffs",
        c.to_str().unwrap(),
        "--workload",
        w.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["entries"].as_array().unwrap().len() == 30);
}
