use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pricing-lab")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_writes_trace_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let text = stdout(&cli(&[
        "run", "--algo", "oracle", "--noise", "cliff", "--horizon", "600",
        "--out", out_dir.to_str().unwrap(),
    ]));
    assert!(text.contains("R_T=0.0000"), "{text}");
    assert!(out_dir.join("trace.csv").exists());
    assert!(out_dir.join("meta.json").exists());
}

#[test]
fn sweep_fit_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_dir = dir.path().join("sweep");
    let sweep_str = sweep_dir.to_str().unwrap();
    let text = stdout(&cli(&[
        "sweep", "--algo", "cmrup", "--horizons", "500,1000,2000", "--seeds", "2",
        "--out", sweep_str, "--workers", "1",
    ]));
    assert!(text.contains("executed 6 runs"), "{text}");
    let again = stdout(&cli(&[
        "sweep", "--algo", "cmrup", "--horizons", "500,1000,2000", "--seeds", "2",
        "--out", sweep_str, "--workers", "1",
    ]));
    assert!(again.contains("executed 0 runs, reused 6"), "{again}");

    let csv = sweep_dir.join("regret.csv");
    let fit = stdout(&cli(&["fit", "--input", csv.to_str().unwrap()]));
    assert!(fit.contains("alpha="), "{fit}");

    let report_dir = dir.path().join("report");
    stdout(&cli(&["report", "--input", csv.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]));
    assert!(report_dir.join("figure_input.csv").exists());
}

#[test]
fn config_file_is_honoured_and_bad_configs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.toml");
    fs::write(
        &good,
        r#"
algorithm = "fixed_price"
horizon = 100
fixed_price = 1.0

[instance]
theta_star = [2.0, 0.125, 0.125, 0.125, 0.125]
price_cap = 4.0
noise_radius = 1.0

[instance.context]
kind = "intercept_uniform"
d = 5
lo = 0.0
hi = 1.0

[instance.noise]
label = "uniform"
components = [{ kind = "uniform", lo = -1.0, hi = 1.0, weight = 1.0 }]
"#,
    )
    .unwrap();
    let text = stdout(&cli(&["run", "--config", good.to_str().unwrap(), "--horizon", "300"]));
    assert!(text.starts_with("fixed_price noise=uniform T=300"), "{text}");

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "algorithm = \"cmrup\"\nhorizon = 10\nsurprise = true\n").unwrap();
    assert!(!cli(&["run", "--config", bad.to_str().unwrap()]).status.success());
    assert!(!cli(&["fit", "--input", Path::new("/nonexistent.csv").to_str().unwrap()]).status.success());
}
