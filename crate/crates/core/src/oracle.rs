//! Independent brute-force references: exact diagonalization of the
//! untransformed total Hamiltonian, error-scaling fits, and the dispersive
//! cavity comparison. Nothing here reuses the perturbative pipeline it checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{
    eig_hermitian, func_of_hermitian, partial_trace_system, Operator,
};
use crate::thermo::beta_profile_from_populations;

/// Default ceiling on the total dimension accepted by [`exact_reference_state`].
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Exact thermal reference computed from the untransformed `H_S + H_A + V_AS`.
#[derive(Clone, Debug)]
pub struct ExactReference {
    /// Reduced system state from full diagonalization, normalized.
    pub rho_s: Operator,
    /// `β(n) = ln(P_n/P_{n+1}) / Δ_n` from the exact populations.
    pub beta_profile: Vec<f64>,
    /// System level energies read off the diagonal of `H_S`.
    pub system_energies: Vec<f64>,
}

/// Diagonalize `H = H_S + H_A + V_AS` exactly and extract the reduced state
/// and its population-based inverse-temperature profile.
///
/// `h_s` must be diagonal in the system basis (the model builders guarantee
/// this); its level energies are read from the diagonal.
pub fn exact_reference_state(
    h_s: &Operator,
    h_a: &Operator,
    v_as: &Operator,
    beta: f64,
    dim_cap: usize,
) -> Result<ExactReference> {
    if beta <= 0.0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let dim = h_s.dim();
    if dim > dim_cap {
        return Err(Error::CapExceeded { dim, cap: dim_cap });
    }
    if h_s.space() != h_a.space() || h_s.space() != v_as.space() {
        return Err(Error::DimensionMismatch(
            "H_S, H_A and V_AS must live on the same full space".into(),
        ));
    }

    let space = h_s.space().clone();
    let da = space.app_dim();
    let ds = space.sys_dim();

    // system energies from the diagonal of H_S = diag(E) ⊗ 1
    let mut offdiag: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                offdiag = offdiag.max(h_s.matrix()[(i, j)].norm());
            }
        }
    }
    if offdiag > 1e-12 * h_s.max_abs().max(1.0) {
        return Err(Error::InvalidModel(
            "H_S must be diagonal in the system basis for the exact reference".into(),
        ));
    }
    let system_energies: Vec<f64> = (0..ds).map(|n| h_s.matrix()[(n * da, n * da)].re).collect();

    let h = &(h_s + h_a) + v_as;
    let sd = eig_hermitian(&h)?;
    let e_min = sd.min_eigenvalue();
    let weight = func_of_hermitian(&sd, |l| (-beta * (l - e_min)).exp())?;
    let reduced = partial_trace_system(&weight);
    let z = reduced.trace().re;
    let rho_s = reduced.scale_re(1.0 / z);

    let populations: Vec<f64> = (0..ds).map(|n| rho_s.matrix()[(n, n)].re).collect();
    let beta_profile = beta_profile_from_populations(&populations, &system_energies)?;

    Ok(ExactReference { rho_s, beta_profile, system_energies })
}

/// Log-log least-squares fit of error against a control parameter.
#[derive(Clone, Debug)]
pub struct ScalingReport {
    /// Parameter values kept for the fit, strictly decreasing.
    pub parameters: Vec<f64>,
    /// Errors kept for the fit, matching `parameters`.
    pub errors: Vec<f64>,
    /// Slope of `log(error)` vs `log(parameter)`; `+∞` when agreement was too
    /// exact to fit (errors at the noise floor).
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// Points discarded as numerically exact (error at or below the floor).
    pub dropped: usize,
}

/// Fit the scaling exponent of `errors` against `parameters`.
///
/// Points whose error is at or below `noise_floor` are treated as exact
/// agreement and dropped; if fewer than two points survive, the exponent is
/// reported as the `+∞` sentinel rather than fitted.
pub fn scaling_exponent(
    parameters: &[f64],
    errors: &[f64],
    noise_floor: f64,
) -> Result<ScalingReport> {
    if parameters.len() != errors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters vs {} errors",
            parameters.len(),
            errors.len()
        )));
    }
    if parameters.len() < 3 {
        return Err(Error::Domain("scaling fit needs at least 3 points".into()));
    }
    if parameters.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Domain("parameter values must be strictly decreasing".into()));
    }
    if parameters.iter().any(|&p| p <= 0.0) {
        return Err(Error::Domain("parameter values must be positive".into()));
    }
    if errors.iter().any(|&e| e < 0.0) {
        return Err(Error::Domain("errors must be nonnegative".into()));
    }
    let span = parameters[0] / parameters[parameters.len() - 1];
    if span < 4.0 {
        return Err(Error::Domain(format!(
            "parameter range must span at least 4x, got {span:.2}x"
        )));
    }

    let kept: Vec<(f64, f64)> = parameters
        .iter()
        .zip(errors)
        .filter(|&(_, &e)| e > noise_floor)
        .map(|(&p, &e)| (p, e))
        .collect();
    let dropped = parameters.len() - kept.len();

    if kept.len() < 2 {
        return Ok(ScalingReport {
            parameters: kept.iter().map(|&(p, _)| p).collect(),
            errors: kept.iter().map(|&(_, e)| e).collect(),
            fitted_exponent: f64::INFINITY,
            r_squared: 1.0,
            dropped,
        });
    }

    let xs: Vec<f64> = kept.iter().map(|&(p, _)| p.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };

    Ok(ScalingReport {
        parameters: kept.iter().map(|&(p, _)| p).collect(),
        errors: kept.iter().map(|&(_, e)| e).collect(),
        fitted_exponent: slope,
        r_squared,
        dropped,
    })
}

/// Three routes to the dispersive branch sums, reported side by side.
#[derive(Clone, Debug)]
pub struct JcDiagnostic {
    /// Term-by-term sums of the dispersive branch energies `ω_b n + χ n` /
    /// `ω_b n + χ(n+1)` (both branches shifted upward by χ).
    pub xi_printed: (f64, f64),
    /// The same sums in closed geometric form.
    pub xi_geometric: (f64, f64),
    /// Sums over the exact two-state cavity branch spectra, where the two
    /// branches shift in opposite directions (`+χn` ground, `-χ(n+1)` excited
    /// at leading order).
    pub xi_exact: (f64, f64),
    pub beta_eff_printed: f64,
    pub beta_eff_exact: f64,
    /// |printed - geometric| / geometric, should be at roundoff.
    pub series_vs_geometric_rel: f64,
    /// |printed - exact| / exact for (ξ_g, ξ_e): the dispersive-sign gap.
    pub printed_vs_exact_rel: (f64, f64),
}

/// Compare the dispersive branch sums against the exact cavity spectrum.
///
/// Ordering inside each pair is `(ξ_g, ξ_e)`. Informational: callers report
/// the deviations, they do not gate on them.
pub fn dispersive_jc_diagnostic(
    omega_b: f64,
    g: Complex64,
    delta: f64,
    beta: f64,
    n_trunc: usize,
) -> Result<JcDiagnostic> {
    if omega_b == delta {
        return Err(Error::Domain(
            "cavity on resonance (omega_b = delta): dispersive shift diverges".into(),
        ));
    }
    if beta <= 0.0 || delta <= 0.0 || omega_b <= 0.0 || n_trunc < 2 {
        return Err(Error::Domain(
            "need beta > 0, delta > 0, omega_b > 0 and n_trunc >= 2".into(),
        ));
    }
    let chi = g.norm_sqr() / (omega_b - delta);

    // route 1: term-by-term dispersive sums
    let mut xi_g_series = 0.0;
    let mut xi_e_series = 0.0;
    for n in 0..n_trunc {
        let n = n as f64;
        xi_g_series += (-beta * (omega_b * n + chi * n)).exp();
        xi_e_series += (-beta * (omega_b * n + chi * (n + 1.0))).exp();
    }

    // route 2: geometric closed form (infinite sum)
    let q = (-beta * (omega_b + chi)).exp();
    if q >= 1.0 {
        return Err(Error::Domain(format!(
            "branch sums do not converge: e^(-beta (omega_b + chi)) = {q} >= 1"
        )));
    }
    let xi_g_geom = 1.0 / (1.0 - q);
    let xi_e_geom = (-beta * chi).exp() * xi_g_geom;

    // route 3: exact spectrum. Excitation sector N >= 1 mixes |g,N⟩ and
    // |e,N-1⟩; its 2x2 block has eigenvalues mean ± sqrt((δ/2)² + N|g|²)
    // with δ = ω_b - Δ. The root adiabatically connected to |g,N⟩ is the one
    // approached as g → 0.
    let detuning = omega_b - delta;
    let mut xi_g_exact = 1.0; // |g,0⟩ at energy 0
    let mut xi_e_exact = 0.0;
    for cap in 1..=n_trunc {
        let n_exc = cap as f64;
        let e_g_bare = omega_b * n_exc;
        let e_e_bare = delta + omega_b * (n_exc - 1.0);
        let mean = 0.5 * (e_g_bare + e_e_bare);
        let root = (0.25 * detuning * detuning + n_exc * g.norm_sqr()).sqrt();
        let (e_ground_branch, e_excited_branch) = if detuning > 0.0 {
            (mean + root, mean - root)
        } else {
            (mean - root, mean + root)
        };
        if cap < n_trunc {
            // |g,N⟩ exists for N = 1..n_trunc-1 within the photon cutoff
            xi_g_exact += (-beta * e_ground_branch).exp();
        }
        // |e,N-1⟩ exists for N = 1..n_trunc; the branch sum removes E_e = Δ
        xi_e_exact += (-beta * (e_excited_branch - delta)).exp();
    }

    let beta_eff = |xi_g: f64, xi_e: f64| beta + (xi_g.ln() - xi_e.ln()) / delta;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();

    Ok(JcDiagnostic {
        xi_printed: (xi_g_series, xi_e_series),
        xi_geometric: (xi_g_geom, xi_e_geom),
        xi_exact: (xi_g_exact, xi_e_exact),
        beta_eff_printed: beta_eff(xi_g_series, xi_e_series),
        beta_eff_exact: beta_eff(xi_g_exact, xi_e_exact),
        series_vs_geometric_rel: rel(xi_g_series, xi_g_geom).max(rel(xi_e_series, xi_e_geom)),
        printed_vs_exact_rel: (rel(xi_g_series, xi_g_exact), rel(xi_e_series, xi_e_exact)),
    })
}
