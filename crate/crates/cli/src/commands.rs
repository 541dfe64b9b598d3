//! The three subcommands: `run`, `sweep`, `check`.
//!
//! Data goes to stdout (or `--out`), run metadata to stderr. Numeric output
//! is always 17 significant digits with `.` as the decimal separator, so
//! identical configs give byte-identical files.

use std::fmt::Write as _;
use std::io::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qprobe::models::{ApparatusSpec, SystemSpec};
use qprobe::operator::{eig_hermitian, Operator, ProductSpace};
use qprobe::oracle::{dispersive_jc_diagnostic, scaling_exponent};
use qprobe::scenario::{analyze, Scenario, ScenarioRun};
use qprobe::schrieffer_wolff::{default_degeneracy_tol, effective_hamiltonian, solve_generator};
use qprobe::thermo::{fidelity_oscillator_closed_form, fidelity_oscillator_series, temperature_shift_oscillator};
use rand::{RngExt, SeedableRng};

use crate::config::{fmt_f64, parse_scenario};
use crate::CliError;

fn load_scenario(path: &str) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config `{path}`: {e}")))?;
    parse_scenario(&text).map_err(|e| CliError::config(e.to_string()))
}

fn log_diagnostics(run: &ScenarioRun) {
    let d = &run.diagnostics;
    if let Some(r) = d.generator_residual {
        eprintln!("# generator_residual = {}", fmt_f64(r));
    }
    if let Some(l) = d.leakage {
        eprintln!("# leakage = {}", fmt_f64(l));
    }
    if let Some(n) = d.nondemolition {
        eprintln!("# nondemolition = {}", fmt_f64(n));
    }
    if let Some(g) = &d.truncation_gate {
        eprintln!(
            "# truncation_gate_change = {} ({})",
            fmt_f64(g.max_change),
            if g.pass { "pass" } else { "fail" }
        );
    }
    if let Some(r) = &d.density {
        eprintln!(
            "# density_ratio = {} at band {} vs threshold {} ({}{})",
            fmt_f64(r.ratio),
            r.band,
            fmt_f64(r.threshold),
            if r.pass { "pass" } else { "fail" },
            if r.degenerate { ", degenerate system spectrum" } else { "" }
        );
    }
    if d.dispersive_ok == Some(false) {
        eprintln!("# warning: omega_b < 10 delta, dispersive expansion is doubtful");
    }
}

/// `run <config>`: one witness record as `key = value` lines.
pub fn run(config_path: &str) -> Result<(), CliError> {
    let scenario = load_scenario(config_path)?;
    let run = analyze(&scenario)?;
    log_diagnostics(&run);

    let a = &run.analysis;
    let mut out = String::new();
    writeln!(out, "beta = {}", fmt_f64(a.beta)).unwrap();
    for (n, x) in a.xi.iter().enumerate() {
        writeln!(out, "xi.{n} = {}", fmt_f64(*x)).unwrap();
    }
    for (n, b) in a.beta_profile.iter().enumerate() {
        writeln!(out, "beta_profile.{n} = {}", fmt_f64(*b)).unwrap();
    }
    match a.beta_eff {
        Some(b) => writeln!(out, "beta_eff = {}", fmt_f64(b)).unwrap(),
        None => writeln!(out, "beta_eff = undefined").unwrap(),
    }
    for (n, s) in a.level_shifts.iter().enumerate() {
        writeln!(out, "level_shift.{n} = {}", fmt_f64(*s)).unwrap();
    }
    writeln!(out, "delta_u = {}", fmt_f64(a.delta_u)).unwrap();
    if let Some(lit) = run.diagnostics.literal_delta_u {
        writeln!(out, "delta_u_unnormalized = {}", fmt_f64(lit)).unwrap();
    }
    if let Some(dt) = a.delta_t {
        writeln!(out, "delta_t = {}", fmt_f64(dt)).unwrap();
    }
    writeln!(out, "fidelity = {}", fmt_f64(a.fidelity)).unwrap();

    print!("{out}");
    Ok(())
}

/// `sweep <config> --axis <name> [--out <path>]`.
pub fn sweep(config_path: &str, axis: &str, out_path: Option<&str>) -> Result<(), CliError> {
    let scenario = load_scenario(config_path)?;
    let csv = match axis {
        "lambda" => sweep_lambda(&scenario)?,
        "delta_T" => sweep_delta_t(&scenario)?,
        "g" => sweep_scenario_axis(&scenario, Axis::CouplingScale)?,
        "beta" => sweep_scenario_axis(&scenario, Axis::Beta)?,
        other => {
            return Err(CliError::usage(format!(
                "unknown axis `{other}`; expected lambda, delta_T, g or beta"
            )))
        }
    };
    match out_path {
        None | Some("-") => {
            print!("{csv}");
        }
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| CliError::config(format!("cannot write `{path}`: {e}")))?;
            f.write_all(csv.as_bytes())
                .map_err(|e| CliError::config(format!("cannot write `{path}`: {e}")))?;
        }
    }
    Ok(())
}

/// Oscillator frequency of the scenario, required by the closed-form sweeps.
fn oscillator_omega(scenario: &Scenario) -> Result<f64, CliError> {
    match scenario.system {
        SystemSpec::TruncatedOscillator { omega, .. } => Ok(omega),
        SystemSpec::TwoLevel { .. } => Err(CliError::config(
            "axis requires a truncated_oscillator system (it sweeps the oscillator level shift)"
                .to_string(),
        )),
    }
}

/// Fidelity against level shift: closed form, series route, and their gap.
fn sweep_lambda(scenario: &Scenario) -> Result<String, CliError> {
    let omega = oscillator_omega(scenario)?;
    let grid = scenario
        .sweeps
        .lambda
        .as_ref()
        .ok_or_else(|| CliError::config("missing sweep grid `sweep.lambda`".to_string()))?;
    let mut csv = String::from("axis_value,fidelity_closed,fidelity_series,abs_err\n");
    for lambda in grid.points() {
        let closed = fidelity_oscillator_closed_form(scenario.beta, omega, lambda)?;
        let series = fidelity_oscillator_series(scenario.beta, omega, lambda)?;
        writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(lambda),
            fmt_f64(closed),
            fmt_f64(series),
            fmt_f64((closed - series).abs())
        )
        .unwrap();
    }
    Ok(csv)
}

/// Fidelity against the temperature shift `ΔT = [β(ω/λ - 1)]⁻¹`,
/// parameterized by the level-shift grid.
fn sweep_delta_t(scenario: &Scenario) -> Result<String, CliError> {
    let omega = oscillator_omega(scenario)?;
    let grid = scenario
        .sweeps
        .delta_t
        .as_ref()
        .ok_or_else(|| CliError::config("missing sweep grid `sweep.delta_t`".to_string()))?;
    let mut csv = String::from("delta_T,fidelity\n");
    for lambda in grid.points() {
        let delta_t = temperature_shift_oscillator(scenario.beta, omega, lambda)?;
        let fidelity = fidelity_oscillator_closed_form(scenario.beta, omega, lambda)?;
        writeln!(csv, "{},{}", fmt_f64(delta_t), fmt_f64(fidelity)).unwrap();
    }
    Ok(csv)
}

enum Axis {
    /// Multiplies every configured coupling amplitude.
    CouplingScale,
    /// Replaces the bath inverse temperature.
    Beta,
}

/// Full pipeline per grid point; scalar witnesses per row.
fn sweep_scenario_axis(scenario: &Scenario, axis: Axis) -> Result<String, CliError> {
    let grid = match axis {
        Axis::CouplingScale => scenario
            .sweeps
            .g
            .as_ref()
            .ok_or_else(|| CliError::config("missing sweep grid `sweep.g`".to_string()))?,
        Axis::Beta => scenario
            .sweeps
            .beta
            .as_ref()
            .ok_or_else(|| CliError::config("missing sweep grid `sweep.beta`".to_string()))?,
    };
    let mut csv = String::from("axis_value,beta_eff,delta_u,fidelity\n");
    for value in grid.points() {
        let mut point = scenario.clone();
        match axis {
            Axis::CouplingScale => scale_couplings(&mut point.apparatus, value),
            Axis::Beta => point.beta = value,
        }
        let run = analyze(&point)?;
        let beta_eff = match run.analysis.beta_eff {
            Some(b) => fmt_f64(b),
            None => String::new(),
        };
        writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(value),
            beta_eff,
            fmt_f64(run.analysis.delta_u),
            fmt_f64(run.analysis.fidelity)
        )
        .unwrap();
    }
    Ok(csv)
}

fn scale_couplings(app: &mut ApparatusSpec, factor: f64) {
    match app {
        ApparatusSpec::BosonBath { modes } => {
            for m in modes {
                m.g *= Complex64::new(factor, 0.0);
            }
        }
        ApparatusSpec::SingleCavity { g, .. } => {
            *g *= Complex64::new(factor, 0.0);
        }
    }
}

/// `check <suite>`: self-contained verification suites.
pub fn check(suite: &str) -> Result<(), CliError> {
    let outcome = match suite {
        "fn" => check_fn(),
        "fidelity" => check_fidelity(),
        "jc" => check_jc(),
        "all" => {
            let mut ok = check_fn();
            ok &= check_fidelity();
            ok &= check_jc();
            ok
        }
        other => return Err(CliError::usage(format!("unknown check suite `{other}`"))),
    };
    if outcome {
        println!("check {suite}: PASS");
        Ok(())
    } else {
        println!("check {suite}: FAIL");
        Err(CliError::domain(format!("check suite `{suite}` failed")))
    }
}

/// A random non-degenerate Hermitian `H0` and a Hermitian coupling direction
/// with no diagonal part in its eigenbasis.
pub fn transform_test_pair(dim: usize, instance: u64) -> (Operator, Operator) {
    let space = ProductSpace::system_only(dim);
    let mut seed = 1000 + instance;
    let h0 = loop {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let m = DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = (&m + m.adjoint()).scale(0.5);
        let op = Operator::new(h, space.clone()).unwrap();
        let sd = eig_hermitian(&op).unwrap();
        let min_gap = sd
            .eigenvalues()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if min_gap > 0.05 * sd.spectral_range() {
            break op;
        }
        seed += 777;
    };
    let sd = eig_hermitian(&h0).unwrap();
    let u = sd.eigenvectors();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5000 + instance);
    let mut v_eig = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let adj = v_eig.adjoint();
    v_eig = (v_eig + adj).scale(0.5);
    for a in 0..dim {
        v_eig[(a, a)] = Complex64::new(0.0, 0.0);
    }
    let v = Operator::new(u * v_eig * u.adjoint(), space).unwrap().symmetrized();
    (h0, v)
}

/// Generator residuals and the eigenvalue-error scaling exponent over random
/// instances.
fn check_fn() -> bool {
    let dim = 6;
    let instances = 20;
    let norms = [0.1, 0.05, 0.025];
    let mut mean_errors = vec![0.0; norms.len()];
    let mut worst_residual_ratio: f64 = 0.0;

    for inst in 0..instances {
        let (h0, v_dir) = transform_test_pair(dim, inst);
        let range = eig_hermitian(&h0).unwrap().spectral_range();
        for (k, &s) in norms.iter().enumerate() {
            let v = v_dir.scale_re(s * range / v_dir.frobenius_norm());
            let tol = default_degeneracy_tol(&h0).unwrap();
            let sol = solve_generator(&h0, &v, tol).unwrap();
            worst_residual_ratio = worst_residual_ratio.max(sol.residual / v.frobenius_norm());
            let h_eff = effective_hamiltonian(&h0, &v, &sol).unwrap();
            let e_eff = eig_hermitian(&h_eff).unwrap();
            let e_exact = eig_hermitian(&(&h0 + &v)).unwrap();
            let err = e_eff
                .eigenvalues()
                .iter()
                .zip(e_exact.eigenvalues())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            mean_errors[k] += err / instances as f64;
        }
    }

    let report = scaling_exponent(&norms, &mean_errors, 1e-13).unwrap();
    let residual_ok = worst_residual_ratio <= 1e-10;
    let exponent_ok = report.fitted_exponent >= 2.7;
    println!(
        "fn: worst residual / |V| = {} over {instances} instances x {} coupling norms ({})",
        fmt_f64(worst_residual_ratio),
        norms.len(),
        if residual_ok { "pass" } else { "fail" }
    );
    println!(
        "fn: eigenvalue-error exponent = {} (r^2 = {}) vs floor 2.7 ({})",
        fmt_f64(report.fitted_exponent),
        fmt_f64(report.r_squared),
        if exponent_ok { "pass" } else { "fail" }
    );
    residual_ok && exponent_ok
}

/// Series route vs closed form over the level-shift grid.
fn check_fidelity() -> bool {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let lambda = 0.1 * i as f64;
        let closed = fidelity_oscillator_closed_form(1.0, 1.0, lambda).unwrap();
        let series = fidelity_oscillator_series(1.0, 1.0, lambda).unwrap();
        worst = worst.max((closed - series).abs());
    }
    let at_zero = (fidelity_oscillator_closed_form(1.0, 1.0, 0.0).unwrap() - 1.0).abs();
    let grid_ok = worst <= 1e-9;
    let zero_ok = at_zero <= 1e-12;
    println!(
        "fidelity: max |closed - series| = {} over lambda in 0..0.9 ({})",
        fmt_f64(worst),
        if grid_ok { "pass" } else { "fail" }
    );
    println!(
        "fidelity: |F(0) - 1| = {} ({})",
        fmt_f64(at_zero),
        if zero_ok { "pass" } else { "fail" }
    );
    grid_ok && zero_ok
}

/// Dispersive sums vs the exact cavity spectrum; informational, never fails.
fn check_jc() -> bool {
    let d = dispersive_jc_diagnostic(10.0, Complex64::new(0.5, 0.0), 1.0, 1.0, 400).unwrap();
    println!("jc: xi_g series {} geometric {}", fmt_f64(d.xi_printed.0), fmt_f64(d.xi_geometric.0));
    println!("jc: xi_e series {} geometric {}", fmt_f64(d.xi_printed.1), fmt_f64(d.xi_geometric.1));
    println!(
        "jc: series vs geometric rel = {}",
        fmt_f64(d.series_vs_geometric_rel)
    );
    println!(
        "jc: exact-branch xi_g {} xi_e {}",
        fmt_f64(d.xi_exact.0),
        fmt_f64(d.xi_exact.1)
    );
    println!(
        "jc: beta_eff dispersive {} vs exact-branch {} (informational)",
        fmt_f64(d.beta_eff_printed),
        fmt_f64(d.beta_eff_exact)
    );
    println!(
        "jc: printed-vs-exact rel deviation (xi_g, xi_e) = ({}, {})",
        fmt_f64(d.printed_vs_exact_rel.0),
        fmt_f64(d.printed_vs_exact_rel.1)
    );
    true
}
