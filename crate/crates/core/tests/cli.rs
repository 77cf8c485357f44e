use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gyroloop::experiments::{
    DRIFT_HEADER, FASTSLOW_HEADER, FIELDS_HEADER, GC_HEADER, LOOP_HEADER, NOETHER_HEADER, ORBIT_HEADER,
    RESIDUAL_HEADER, STICK_HEADER,
};
use tempfile::TempDir;

fn gyroloop(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gyroloop"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("GYROLOOP_THREADS", t);
    }
    cmd.output().unwrap()
}

fn run_config(dir: &Path, sub: &str, config: &str) -> (Output, String) {
    let cfg = dir.join(format!("{sub}.toml"));
    let out = dir.join(format!("{sub}.csv"));
    fs::write(&cfg, config).unwrap();
    let output = gyroloop(
        &[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        None,
    );
    let csv = fs::read_to_string(&out).unwrap_or_default();
    (output, csv)
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(|c| c.parse::<f64>().unwrap()).collect())
        .collect()
}

fn header(csv: &str) -> Vec<String> {
    csv.lines().next().unwrap_or("").split(',').map(String::from).collect()
}

const SLOW: &str = "[slow]\nxbar = [0.1, 0.2, 0.0]\nubar = 0.4\nw = [0.6, -0.3]\n";

#[test]
fn every_experiment_writes_its_schema() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, String, &[&str]); 9] = [
        (
            "orbit",
            "epsilon = 0.01\n[field]\nmodel = \"linear-gradient\"\n[integrator]\ndt = 1e-3\nt_final = 0.05\n".into(),
            &ORBIT_HEADER,
        ),
        (
            "loop",
            format!("epsilon = 0.01\n[field]\nmodel = \"screw-pinch\"\n{SLOW}[integrator]\nstepper = \"rk4\"\nt_final = 0.01\n"),
            &LOOP_HEADER,
        ),
        (
            "gc",
            format!("order = 0\n[field]\nmodel = \"screw-pinch\"\n{SLOW}[integrator]\ndt = 1e-2\nt_final = 0.1\n"),
            &GC_HEADER,
        ),
        (
            "residual-scan",
            format!("epsilons = [1e-2, 1e-3]\n[field]\nmodel = \"screw-pinch\"\n{SLOW}"),
            &RESIDUAL_HEADER,
        ),
        (
            "compare-drift",
            "epsilons = [1e-2]\n[field]\nmodel = \"linear-gradient\"\n[integrator]\nperiods = 4\nsamples_per_period = 32\n".into(),
            &DRIFT_HEADER,
        ),
        (
            "noether-scan",
            format!("epsilons = [1e-2]\n[field]\nmodel = \"screw-pinch\"\n{SLOW}"),
            &NOETHER_HEADER,
        ),
        (
            "stick",
            format!("epsilons = [1e-2]\n[field]\nmodel = \"linear-gradient\"\n{SLOW}[integrator]\nt_final = 0.01\n"),
            &STICK_HEADER,
        ),
        ("fastslow-check", "samples = 5\n[field]\nmodel = \"screw-pinch\"\n".into(), &FASTSLOW_HEADER),
        ("fields-check", "samples = 5\n[field]\nmodel = \"screw-pinch\"\n".into(), &FIELDS_HEADER),
    ];
    for (sub, config, expected) in cases {
        let (output, csv) = run_config(dir.path(), sub, &config);
        assert_eq!(
            output.status.code(),
            Some(0),
            "{sub}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert_eq!(header(&csv), expected, "{sub}");
        let data = rows(&csv);
        assert!(!data.is_empty(), "{sub}");
        assert!(
            data.iter()
                .all(|r| r.len() == expected.len() && r.iter().all(|v| v.is_finite())),
            "{sub}"
        );
    }
}

#[test]
fn residual_scan_reports_second_order_slope() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "kind = \"residual-scan\"\nepsilons = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]\norders = [1]\n[field]\nmodel = \"gradb\"\n{SLOW}"
    );
    let (output, csv) = run_config(dir.path(), "residual-scan", &config);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(rows(&csv).len(), 5);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("fit order 1: slope 2.00"), "{stderr}");
    assert!(stderr.contains("PASS order 1 slope"), "{stderr}");
}

#[test]
fn tolerance_failure_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let config =
        format!("epsilons = [1e-3, 1e-2, 1e-1]\n[field]\nmodel = \"screw-pinch\"\n{SLOW}[tolerance]\nslope = 5.0\n");
    let (output, csv) = run_config(dir.path(), "noether-scan", &config);
    assert_eq!(output.status.code(), Some(1));
    assert_eq!(rows(&csv).len(), 3);
    assert!(String::from_utf8_lossy(&output.stderr).contains("FAIL abs_diff slope"));
}

#[test]
fn config_errors_exit_with_two_and_point_at_the_line() {
    let dir = TempDir::new().unwrap();
    let (output, _) = run_config(
        dir.path(),
        "orbit",
        "[field]\nmodel = \"uniform\"\n\n[integrator]\nt_final = \"long\"\n",
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 5") && stderr.contains("t_final"), "{stderr}");

    let (output, _) = run_config(dir.path(), "loop", "kind = \"orbit\"\n[field]\nmodel = \"uniform\"\n");
    assert_eq!(output.status.code(), Some(2));

    let missing = gyroloop(&["orbit", "--config", "/nonexistent/config.toml"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn csv_goes_to_stdout_without_an_output_path() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "samples = 3\n[field]\nmodel = \"uniform\"\n").unwrap();
    let output = gyroloop(&["fields-check", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(header(&stdout), FIELDS_HEADER);
    assert_eq!(rows(&stdout).len(), 3);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("scan.toml");
    fs::write(
        &cfg,
        format!("epsilons = [1e-1, 1e-2, 1e-3]\n[field]\nmodel = \"screw-pinch\"\n{SLOW}"),
    )
    .unwrap();
    let render = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = gyroloop(
            &[
                "residual-scan",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            Some(threads),
        );
        assert_eq!(o.status.code(), Some(0));
        fs::read(out).unwrap()
    };
    let a = render("1", "a.csv");
    assert_eq!(a, render("1", "b.csv"));
    assert_eq!(a, render("4", "c.csv"));
}
