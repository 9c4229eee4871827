//! Scenario runs, their artifacts and the `qlh` front end.

use std::path::Path;
use std::process::Command;

use quantum_lighthill::scenario::{
    bundled, emit_plot_data, evaluate_scenario, run_scenario, FieldFile, ScenarioConfig,
};

const FAILING_PRINTED: &str = r#"
name = "printed_only"

[grid]
dim = 1
extent = 40.0
points = 128

[initial]
preset = "gaussian"
sigma = 1.0
boost = [1.0]

[run]
t_end = 0.01

[[checks]]
kind = "lighthill"
convention = "printed"
tolerance = 1e-5
"#;

fn qlh(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qlh"))
        .args(args)
        .output()
        .expect("qlh runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn column_max(csv: &str, column: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let c = header.iter().position(|h| *h == column).unwrap();
    lines
        .map(|l| l.split(',').nth(c).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_free_passes_every_check() {
    let result = evaluate_scenario(&bundled("gaussian_free").unwrap()).unwrap();
    let s = &result.summary;
    assert_eq!(s.status, "pass", "{}", s.lines());
    assert!(s.checks.len() >= 5);
    assert!(s.checks.iter().all(|c| c.passed && !c.expect_failure));
}

#[test]
fn printed_convention_fails_as_expected_beside_the_audited_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = bundled("paper_convention_comparison").unwrap();
    let (result, out) = run_scenario(&config, Some(dir.path())).unwrap();
    let checks = &result.summary.checks;
    let audited = checks
        .iter()
        .find(|c| c.label == "lighthill[audited]")
        .unwrap();
    let printed = checks
        .iter()
        .find(|c| c.label == "lighthill[printed]")
        .unwrap();
    assert!(audited.passed && !audited.expect_failure);
    assert!(!printed.passed && printed.expect_failure);
    assert!(printed.value > 0.1, "printed residual {}", printed.value);
    assert_eq!(result.summary.exit_code(), 0);
    for c in [audited, printed] {
        assert!(out.join(&c.report).is_file(), "{} missing", c.report);
    }
    assert!(out.join("summary.toml").is_file());
}

/// Every residual verdict follows from the CSV it names.
fn assert_verdicts_recomputable(dir: &Path) {
    let summary: toml::Value =
        toml::from_str(&std::fs::read_to_string(dir.join("summary.toml")).unwrap()).unwrap();
    for c in summary["checks"].as_array().unwrap() {
        let metric = c["metric"].as_str().unwrap();
        let value = c["value"].as_float().unwrap();
        let tol = c["tolerance"].as_float().unwrap();
        assert_eq!(c["passed"].as_bool().unwrap(), value <= tol);
        if let Some(column) = metric.strip_prefix("max ") {
            let csv = std::fs::read_to_string(dir.join(c["report"].as_str().unwrap())).unwrap();
            if csv.starts_with("t,L2_abs") {
                assert_eq!(column_max(&csv, column), value, "{metric}");
            }
        }
    }
}

#[test]
fn verdicts_follow_from_the_reports() {
    for name in ["gaussian_free", "paper_convention_comparison"] {
        let dir = tempfile::tempdir().unwrap();
        run_scenario(&bundled(name).unwrap(), Some(dir.path())).unwrap();
        assert_verdicts_recomputable(dir.path());
    }
}

#[test]
fn runs_are_bit_identical() {
    let config = bundled("plane_wave").unwrap();
    let a = evaluate_scenario(&config).unwrap();
    let b = evaluate_scenario(&config).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.fields, b.fields);
}

#[test]
fn stored_fields_reload() {
    let dir = tempfile::tempdir().unwrap();
    let (result, out) = run_scenario(&bundled("gaussian_free").unwrap(), Some(dir.path())).unwrap();
    assert!(!result.fields.is_empty());
    for (name, field) in &result.fields {
        assert_eq!(&FieldFile::load(&out.join(name)).unwrap(), field);
    }
}

#[test]
fn plot_data_from_a_run() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&bundled("gaussian_free").unwrap(), Some(dir.path())).unwrap();
    let written = emit_plot_data(dir.path()).unwrap();
    assert!(written.iter().any(|p| p.ends_with("plot.gp")));
    let dats: Vec<_> = written
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "dat"))
        .collect();
    assert!(!dats.is_empty());
    let script = std::fs::read_to_string(dir.path().join("plots/plot.gp")).unwrap();
    for d in dats {
        assert!(script.contains(d.file_name().unwrap().to_str().unwrap()));
    }
}

#[test]
fn scenario_files_round_trip_through_toml() {
    let config = bundled("vortex2d").unwrap();
    let text = toml::to_string(&config).unwrap();
    let back: ScenarioConfig = toml::from_str(&text).unwrap();
    assert_eq!(back, config);
}

#[test]
fn cli_validate_and_configuration_errors() {
    let (code, out, _) = qlh(&["validate", "--scenario", "vortex2d"]);
    assert_eq!(code, 0);
    assert!(out.contains("valid"));

    let (code, _, err) = qlh(&["validate", "--scenario", "no_such_scenario"]);
    assert_eq!(code, 2);
    assert!(err.contains("gaussian_free"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let odd = dir.path().join("odd.toml");
    std::fs::write(
        &odd,
        FAILING_PRINTED.replace("points = 128", "points = 127"),
    )
    .unwrap();
    let (code, _, err) = qlh(&["validate", "--config", odd.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("grid"), "{err}");

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, FAILING_PRINTED.replace("sigma", "sigmaa")).unwrap();
    let (code, _, err) = qlh(&["validate", "--config", typo.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("sigmaa"), "{err}");

    let (code, _, _) = qlh(&[
        "converge",
        "--scenario",
        "plane_wave",
        "--ladder",
        "64,32,128",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn cli_run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let (code, stdout, _) = qlh(&[
        "run",
        "--scenario",
        "paper_convention_comparison",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("PASS (expected failure)"), "{stdout}");

    let cfg = dir.path().join("printed.toml");
    std::fs::write(&cfg, FAILING_PRINTED).unwrap();
    let out = dir.path().join("printed");
    let (code, stdout, _) = qlh(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert!(out.join("summary.toml").is_file());

    let (code, stdout, _) = qlh(&["plot-data", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("plot.gp"));
}

#[test]
fn cli_converge_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv");
    let (code, stdout, _) = qlh(&[
        "converge",
        "--scenario",
        "bright_soliton",
        "--out",
        out.to_str().unwrap(),
        "--ladder",
        "64,128,256",
    ]);
    assert_eq!(code, 0, "{stdout}");
    let fits = std::fs::read_to_string(out.join("reports/convergence_fits.csv")).unwrap();
    assert!(fits.starts_with("check,order_h,order_dt,label"));
    assert!(out.join("reports/convergence.csv").is_file());

    let audit = dir.path().join("audit");
    let (code, stdout, _) = qlh(&["audit-signs", "--out", audit.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(audit.join("reports/sign_audit.csv").is_file());
    let note = std::fs::read_to_string(audit.join("sign_audit.txt")).unwrap();
    assert_eq!(note, stdout);
}
