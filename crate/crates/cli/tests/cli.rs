use std::path::Path;
use std::process::{Command, Output};

fn apnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = apnn(args);
    assert!(
        out.status.success(),
        "apnn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn wta_rows(csv: &str) -> Vec<(usize, f64)> {
    let mut lines = csv.lines().skip_while(|l| !l.starts_with("class,"));
    assert_eq!(lines.next(), Some("class,mean_v_V,wta_V"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn unknown_method_is_rejected() {
    let out = apnn(&["cv", "--method", "bogus"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn cv_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let run = || {
        stdout(&[
            "cv",
            "--method",
            "apnn-fixed",
            "--out",
            path.to_str().unwrap(),
        ]);
        std::fs::read(&path).unwrap()
    };
    let ra = run();
    assert_eq!(ra, run());
    let v: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(v["method"], "apnn-fixed");
    assert_eq!(v["folds"].as_array().unwrap().len(), 5);
    assert_eq!(v["config"]["seed"], 42);
    assert_eq!(v["config"]["k"], 5);
}

#[test]
fn cv_reads_data_and_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    let mut rows = String::from("a,b,label\n");
    for i in 0..10 {
        let t = i as f64 * 0.01;
        rows.push_str(&format!("{},{},x\n{},{},y\n", 1.0, t, t, 1.0));
    }
    std::fs::write(&data, rows).unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "method = \"pnn\"\nk = 2\nseed = 3\n").unwrap();

    let v = json(&[
        "cv",
        "--config",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(v["method"], "pnn");
    assert_eq!(v["k"], 2);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["mean_accuracy"], 1.0);
}

#[test]
fn missing_data_file_names_the_stage() {
    let out = apnn(&["cv", "--data", "/nonexistent/data.csv"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("loading dataset"), "{err}");
}

#[test]
fn cost_scales_with_classes() {
    let three = json(&["cost", "--classes", "3"]);
    let mw = three["total_power_mw"].as_f64().unwrap();
    assert!((mw - 123.76).abs() <= 0.01, "{mw}");

    let zero = json(&["cost", "--classes", "0"]);
    assert_eq!(zero["total_power_w"].as_f64().unwrap(), 47.34e-12);
    assert_eq!(zero["total_area_um2"].as_f64().unwrap(), 1.555);

    let six = json(&["cost", "--classes", "6"]);
    for key in ["per_class_power_w", "per_class_area_um2"] {
        assert_eq!(
            six[key].as_f64().unwrap(),
            2.0 * three[key].as_f64().unwrap(),
            "{key}"
        );
    }
    let wta = |v: &serde_json::Value| v["components"].as_array().unwrap()[4].clone();
    assert_eq!(wta(&six), wta(&three));
    assert_eq!(wta(&six)["instances"], 1);
}

#[test]
fn cost_overrides() {
    let v = json(&[
        "cost",
        "--classes",
        "1",
        "--set",
        "ivc.power=0",
        "--set",
        "wta.area=0",
    ]);
    let p = v["total_power_w"].as_f64().unwrap();
    assert!((p - (5e-6 + 149e-6 + 17e-9 + 47.34e-12)).abs() < 1e-15);
    assert!(!apnn(&["cost", "--set", "opamp.power=1"]).status.success());
}

#[test]
fn trace_layout() {
    let csv = stdout(&["trace"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,class,column,current_A,v_ivc_V,comp_bit");
    assert_eq!(lines.len(), 1 + 30 + 1 + 3);
    for (i, l) in lines[1..31].iter().enumerate() {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 6);
        assert_eq!(f[0].parse::<usize>().unwrap(), i);
        let current: f64 = f[3].parse().unwrap();
        let v: f64 = f[4].parse().unwrap();
        assert!((v - current * 200_000.0).abs() <= 1e-8 * v.abs().max(1e-12));
        assert!(f[5] == "0" || f[5] == "1");
    }
    assert_eq!(wta_rows(&csv).len(), 3);
}

#[test]
fn class_two_probe_wins_its_crossbar() {
    let csv = stdout(&["trace", "--sample", "120", "--theta", "0.005"]);
    assert_eq!(wta_rows(&csv), vec![(0, 0.0), (1, 0.0), (2, 1.0)]);
}

#[test]
fn orthogonal_probe_raises_no_line() {
    for input in ["0,0,0,0", "1,-1,1,-1"] {
        let csv = stdout(&["trace", "--input", input]);
        assert!(wta_rows(&csv).iter().all(|&(_, v)| v == 0.0), "{input}");
    }
}

#[test]
fn trace_file_gets_config_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    stdout(&["trace", "--sample", "7", "--out", out.to_str().unwrap()]);
    assert!(out.exists());
    let sidecar = Path::new(&format!("{}.config.json", out.display())).to_path_buf();
    let cfg: serde_json::Value = serde_json::from_slice(&std::fs::read(sidecar).unwrap()).unwrap();
    assert_eq!(cfg["trace"]["sample"], 7);
}

#[test]
fn theta_sweep_bottoms_out_at_chance() {
    let csv = stdout(&[
        "sweep",
        "--param",
        "theta",
        "--method",
        "apnn-fixed",
        "--values",
        "0.01,1.0",
    ]);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][1] > 0.9);
    assert!((rows[1][1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn fine_quantization_matches_unquantized() {
    let csv = stdout(&[
        "sweep",
        "--param",
        "n_levels",
        "--method",
        "apnn-fixed-q",
        "--values",
        "256",
    ]);
    let acc: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let plain = json(&["cv", "--method", "apnn-fixed"])["mean_accuracy"]
        .as_f64()
        .unwrap();
    assert!((acc - plain).abs() <= 0.01, "{acc} vs {plain}");
}

#[test]
fn zero_variation_row_equals_cv() {
    let csv = stdout(&[
        "sweep",
        "--param",
        "variation_sigma",
        "--values",
        "0",
        "--seeds",
        "3",
    ]);
    let acc: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let plain = json(&["cv"])["mean_accuracy"].as_f64().unwrap();
    assert_eq!(acc.to_bits(), plain.to_bits());
}

#[test]
fn sweep_requires_parameter() {
    let out = apnn(&["sweep"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep parameter"));
}
