//! Behavior of the `qprobe` binary: record contents, exit codes, determinism.

use std::process::{Command, Output};

fn qprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qprobe"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn config_path(name: &str) -> String {
    format!("{}/tests/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Pull `key = value` out of a run record.
fn record_value(record: &str, key: &str) -> f64 {
    let line = record
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("record has no `{key}`:\n{record}"));
    line.split(" = ").nth(1).unwrap().parse().unwrap()
}

#[test]
fn run_decoupled_tls_is_trivial() {
    let out = qprobe(&["run", &config_path("decoupled_tls.cfg")]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let record = stdout(&out);
    assert_eq!(record_value(&record, "beta_eff"), 1.0);
    assert_eq!(record_value(&record, "fidelity"), 1.0);
    assert_eq!(record_value(&record, "xi.0"), 1.0);
    assert!(record_value(&record, "delta_u").abs() <= 1e-12);
}

#[test]
fn run_reports_missing_beta_with_exit_2() {
    let dir = std::env::temp_dir().join("qprobe_missing_beta");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("no_beta.cfg");
    let text = std::fs::read_to_string(config_path("decoupled_tls.cfg"))
        .unwrap()
        .replace("beta = 1.0\n", "");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`beta`"), "stderr: {}", stderr(&out));
}

#[test]
fn run_rejects_unknown_key_with_exit_2() {
    let dir = std::env::temp_dir().join("qprobe_unknown_key");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("typo.cfg");
    let mut text = std::fs::read_to_string(config_path("decoupled_tls.cfg")).unwrap();
    text.push_str("system.delta_typo = 2.0\n");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("system.delta_typo"));
}

#[test]
fn run_dephasing_oscillator_fidelity_matches_closed_form() {
    let out = qprobe(&["run", &config_path("dephasing_osc.cfg")]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let record = stdout(&out);
    let fidelity = record_value(&record, "fidelity");

    // closed form at the level shift equal to the bath self-energy
    let eps = 0.1f64 * 0.1 / 1.0;
    let closed = qprobe::thermo::fidelity_oscillator_closed_form(1.0, 1.0, eps).unwrap();
    assert!(
        (fidelity - closed).abs() <= 1e-9,
        "fidelity {fidelity} vs closed form {closed}"
    );
}

#[test]
fn tls_record_carries_cooling_shift() {
    let out = qprobe(&["run", &config_path("tls_cavity.cfg")]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout(&out);
    assert!((record_value(&record, "beta_eff") - (1.0 + 1.0 / 36.0)).abs() <= 1e-12);
    assert!((record_value(&record, "delta_t") - 1.0 / 37.0).abs() <= 1e-12);
    assert!(record_value(&record, "delta_u") < 0.0);
}

#[test]
fn literal_energy_difference_behind_flag() {
    let dir = std::env::temp_dir().join("qprobe_literal_du");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("literal.cfg");
    let mut text = std::fs::read_to_string(config_path("tls_cavity.cfg")).unwrap();
    text.push_str("options.literal_delta_u = true\n");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout(&out);
    // the unnormalized route differs from the physical witness in general
    let literal = record_value(&record, "delta_u_unnormalized");
    let physical = record_value(&record, "delta_u");
    assert!(literal != physical);

    // and the default record omits the literal line
    let out = qprobe(&["run", &config_path("tls_cavity.cfg")]);
    assert!(!stdout(&out).contains("delta_u_unnormalized"));
}

#[test]
fn small_detuning_warning_goes_to_stderr() {
    let dir = std::env::temp_dir().join("qprobe_detuning");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("close.cfg");
    let text = std::fs::read_to_string(config_path("tls_cavity.cfg"))
        .unwrap()
        .replace("apparatus.cavity.omega_b = 10.0", "apparatus.cavity.omega_b = 5.0");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("dispersive expansion is doubtful"));
    assert!(!stdout(&out).contains("doubtful"), "warnings must stay out of the data stream");
}

#[test]
fn sweep_without_grid_exits_2() {
    let out = qprobe(&["sweep", &config_path("decoupled_tls.cfg"), "--axis", "g"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep.g"));
}

#[test]
fn sweep_empty_grid_exits_2() {
    let dir = std::env::temp_dir().join("qprobe_empty_grid");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("empty_grid.cfg");
    let mut text = std::fs::read_to_string(config_path("fig3.cfg")).unwrap();
    text = text.replace("sweep.lambda = 0:0.9:100", "sweep.lambda = 0:0.9:0");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["sweep", cfg.to_str().unwrap(), "--axis", "lambda"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep.lambda"));
}

#[test]
fn sweep_unknown_axis_exits_2() {
    let out = qprobe(&["sweep", &config_path("fig3.cfg"), "--axis", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_3() {
    // a level-shift grid reaching omega makes the shifted oscillator unstable
    let dir = std::env::temp_dir().join("qprobe_domain");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("lambda_too_large.cfg");
    let text = std::fs::read_to_string(config_path("fig3.cfg"))
        .unwrap()
        .replace("sweep.lambda = 0:0.9:100", "sweep.lambda = 0:1.5:4");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["sweep", cfg.to_str().unwrap(), "--axis", "lambda"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn dimension_cap_exits_4() {
    let dir = std::env::temp_dir().join("qprobe_cap");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("capped.cfg");
    let mut text = std::fs::read_to_string(config_path("dephasing_osc.cfg")).unwrap();
    text.push_str("options.dim_cap = 8\n");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
}

#[test]
fn check_suites_and_unknown_suite() {
    for suite in ["fn", "fidelity", "jc"] {
        let out = qprobe(&["check", suite]);
        assert_eq!(out.status.code(), Some(0), "suite {suite}: {}", stderr(&out));
        assert!(stdout(&out).contains(&format!("check {suite}: PASS")));
    }
    let out = qprobe(&["check", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    for args in [&[][..], &["frobnicate"][..], &["sweep", "x.cfg"][..]] {
        let out = qprobe(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn sweep_writes_lf_only_with_header_and_no_trailing_whitespace() {
    let out = qprobe(&["sweep", &config_path("fig3.cfg"), "--axis", "lambda", "--out", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("axis_value,fidelity_closed,fidelity_series,abs_err\n"));
    assert!(!text.contains('\r'));
    for line in text.lines() {
        assert_eq!(line, line.trim_end(), "trailing whitespace in {line:?}");
    }
    assert!(text.ends_with('\n'));
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let a = qprobe(&["sweep", &config_path("tls_cavity.cfg"), "--axis", "g"]);
    let b = qprobe(&["sweep", &config_path("tls_cavity.cfg"), "--axis", "g"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn beta_axis_sweep_runs_full_pipeline_per_point() {
    let dir = std::env::temp_dir().join("qprobe_beta_axis");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("beta_axis.cfg");
    let mut text = std::fs::read_to_string(config_path("tls_cavity.cfg")).unwrap();
    text.push_str("sweep.beta = 0.5:2:4\n");
    std::fs::write(&cfg, text).unwrap();

    let out = qprobe(&["sweep", cfg.to_str().unwrap(), "--axis", "beta"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    // cooling at every bath temperature: beta_eff > beta
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[1] > cols[0], "beta_eff {} vs beta {}", cols[1], cols[0]);
    }
}
