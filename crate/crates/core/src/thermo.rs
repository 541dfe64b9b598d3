//! Thermodynamic witnesses: thermal reduced states, branch partition
//! functions, generalized and effective inverse temperatures, level shifts,
//! inner-energy change, dispersive two-level cooling, and thermal-state
//! fidelities.
//!
//! Every Boltzmann sum here shifts energies by their extremum before
//! exponentiation; all the exposed quantities are invariant under a global
//! energy shift, so the guard never changes a result.

use crate::error::{Error, Result};
use crate::operator::{
    eig_hermitian, func_of_hermitian, partial_trace_system, Operator,
};
use crate::schrieffer_wolff::{branch_decompose, BranchDecomposition};
use num_complex::Complex64;

/// Default relative flatness tolerance deciding whether an effective inverse
/// temperature exists.
pub const BETA_EFF_REL_TOL: f64 = 1e-8;

/// Default ceiling on the off-block leakage accepted by [`formal_factors`].
pub const LEAKAGE_TOL: f64 = 1e-8;

/// Relative tail bound for the adaptive dispersive sums in [`tls_analysis`].
pub const GEOMETRIC_TAIL_TOL: f64 = 1e-14;

/// The full witness bundle for one scenario.
#[derive(Clone, Debug)]
pub struct ThermalAnalysis {
    /// Bath inverse temperature (k_B = 1).
    pub beta: f64,
    /// Branch partition functions ξ(n), one per system level.
    pub xi: Vec<f64>,
    /// Generalized inverse temperature β(n) per adjacent level pair.
    pub beta_profile: Vec<f64>,
    /// Present iff the profile is flat within tolerance.
    pub beta_eff: Option<f64>,
    /// Level shifts ΔE_n = -ln ξ(n) / β.
    pub level_shifts: Vec<f64>,
    /// Tr[H_S ρ_S] - Tr[H_S ρ_can(β)], both states normalized.
    pub delta_u: f64,
    /// Dispersive two-level cooling shift; set only for that scenario kind.
    pub delta_t: Option<f64>,
    /// Fidelity between ρ_S and the unprobed canonical state.
    pub fidelity: f64,
}

/// log(Σ exp(x_i)) guarded against overflow by the max shift.
fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ρ_S = Tr_A e^{-β H} / Tr e^{-β H}` for a Hermitian full-space Hamiltonian.
///
/// The spectrum is shifted by its minimum before exponentiation, so extreme β
/// cannot overflow; the shift cancels in the normalization.
pub fn reduced_system_state(h_total: &Operator, beta: f64) -> Result<Operator> {
    if beta <= 0.0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let sd = eig_hermitian(h_total)?;
    let e_min = sd.min_eigenvalue();
    let weight = func_of_hermitian(&sd, |l| (-beta * (l - e_min)).exp())?;
    let reduced = partial_trace_system(&weight);
    let z = reduced.trace().re;
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Domain(format!(
            "partition function is not positive (Tr = {z}); spectrum spans [{}, {}]",
            e_min,
            sd.max_eigenvalue()
        )));
    }
    Ok(reduced.scale_re(1.0 / z))
}

/// Natural logs of the branch partition functions:
/// `ln ξ(n) = ln Tr e^{-β (H_A + H(n))}` per system level `n`.
pub fn log_formal_factors(
    h_a_app: &Operator,
    branches: &BranchDecomposition,
    beta: f64,
) -> Result<Vec<f64>> {
    if beta <= 0.0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if branches.branches().iter().any(|b| b.space() != h_a_app.space()) {
        return Err(Error::DimensionMismatch(
            "branch Hamiltonians and H_A must live on the same apparatus space".into(),
        ));
    }
    let mut out = Vec::with_capacity(branches.len());
    for n in 0..branches.len() {
        let branch_h = h_a_app + branches.branch(n);
        let sd = eig_hermitian(&branch_h)?;
        out.push(log_sum_exp(sd.eigenvalues().iter().map(move |&l| -beta * l)));
    }
    Ok(out)
}

/// Branch partition functions `ξ(n) = Tr_A ⟨n| e^{-β (H_A + V_eff)} |n⟩`,
/// evaluated per branch as `Tr e^{-β (H_A + H(n))}`.
///
/// `v_eff` must be block-diagonal in the system index; leakage above
/// `leakage_tol` means the coupling was not transformed first and is rejected.
pub fn formal_factors(
    h_a_app: &Operator,
    v_eff: &Operator,
    beta: f64,
    leakage_tol: f64,
) -> Result<Vec<f64>> {
    let branches = branch_decompose(v_eff);
    if branches.offdiag_leakage > leakage_tol {
        return Err(Error::LeakageTooLarge {
            leakage: branches.offdiag_leakage,
            tolerance: leakage_tol,
        });
    }
    let logs = log_formal_factors(h_a_app, &branches, beta)?;
    Ok(logs.into_iter().map(f64::exp).collect())
}

/// `β(n) = β + ln(ξ(n)/ξ(n+1)) / (E_{n+1} - E_n)`, one entry per adjacent pair.
pub fn generalized_beta_profile(xi: &[f64], energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    if xi.len() != energies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} formal factors vs {} energies",
            xi.len(),
            energies.len()
        )));
    }
    if let Some(bad) = xi.iter().position(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::Domain(format!("xi({bad}) = {} is not positive", xi[bad])));
    }
    let mut profile = Vec::with_capacity(energies.len().saturating_sub(1));
    for n in 0..energies.len().saturating_sub(1) {
        let gap = energies[n + 1] - energies[n];
        if gap == 0.0 {
            return Err(Error::ZeroGap { lower: n, upper: n + 1 });
        }
        profile.push(beta + (xi[n].ln() - xi[n + 1].ln()) / gap);
    }
    Ok(profile)
}

/// `β(n) = ln(P_n / P_{n+1}) / (E_{n+1} - E_n)` from state populations.
pub fn beta_profile_from_populations(populations: &[f64], energies: &[f64]) -> Result<Vec<f64>> {
    if populations.len() != energies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} populations vs {} energies",
            populations.len(),
            energies.len()
        )));
    }
    if let Some(bad) = populations.iter().position(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::Domain(format!(
            "population {bad} = {} is not positive",
            populations[bad]
        )));
    }
    let mut profile = Vec::with_capacity(energies.len().saturating_sub(1));
    for n in 0..energies.len().saturating_sub(1) {
        let gap = energies[n + 1] - energies[n];
        if gap == 0.0 {
            return Err(Error::ZeroGap { lower: n, upper: n + 1 });
        }
        profile.push((populations[n].ln() - populations[n + 1].ln()) / gap);
    }
    Ok(profile)
}

/// Mean of the profile if it is flat to `rel_tol` (relative to its mean),
/// otherwise `None`. Flatness of the profile is the log form of the ratio
/// condition `[ξ(n+1)/ξ(n+2)]^{Δ_n} = [ξ(n)/ξ(n+1)]^{Δ_{n+1}}`.
pub fn effective_beta(beta_profile: &[f64], rel_tol: f64) -> Option<f64> {
    if beta_profile.is_empty() {
        return None;
    }
    let mean = beta_profile.iter().sum::<f64>() / beta_profile.len() as f64;
    let scale = mean.abs().max(f64::MIN_POSITIVE);
    let max_dev = beta_profile.iter().map(|b| (b - mean).abs()).fold(0.0, f64::max);
    (max_dev <= rel_tol * scale).then_some(mean)
}

/// Closed-form dephasing profile
/// `β(n) = β (1 - (λ_{n+1}² - λ_n²) / (E_{n+1} - E_n) · ε)`.
pub fn dephasing_beta_closed_form(
    lambdas: &[f64],
    energies: &[f64],
    eps: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    if lambdas.len() != energies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} lambdas vs {} energies",
            lambdas.len(),
            energies.len()
        )));
    }
    let mut profile = Vec::with_capacity(energies.len().saturating_sub(1));
    for n in 0..energies.len().saturating_sub(1) {
        let gap = energies[n + 1] - energies[n];
        if gap == 0.0 {
            return Err(Error::ZeroGap { lower: n, upper: n + 1 });
        }
        let dl2 = lambdas[n + 1] * lambdas[n + 1] - lambdas[n] * lambdas[n];
        profile.push(beta * (1.0 - dl2 / gap * eps));
    }
    Ok(profile)
}

/// Level shifts of the fixed-temperature reading: `ΔE_n = -ln ξ(n) / β`.
///
/// Precondition: every `ξ(n) > 0` (guaranteed by [`formal_factors`]).
pub fn level_shifts_from_xi(xi: &[f64], beta: f64) -> Vec<f64> {
    assert!(beta > 0.0, "beta must be positive");
    xi.iter()
        .map(|&x| {
            assert!(x > 0.0, "formal factors must be positive");
            -x.ln() / beta
        })
        .collect()
}

/// `ΔU = Tr[H_S ρ_S] - Tr[H_S ρ_can(β)]` with `ρ_can = e^{-β H_S}/Z_S`.
///
/// Both states are normalized, so the result is invariant under a constant
/// shift of `H_S`.
pub fn inner_energy_change(rho_s: &Operator, beta: f64, h_s_sys: &Operator) -> Result<f64> {
    if rho_s.space() != h_s_sys.space() {
        return Err(Error::DimensionMismatch(
            "rho_S and H_S must live on the system space".into(),
        ));
    }
    let tr = rho_s.trace().re;
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized((tr - 1.0).abs()));
    }
    let sd = eig_hermitian(h_s_sys)?;
    let e_min = sd.min_eigenvalue();
    let gibbs = func_of_hermitian(&sd, |l| (-beta * (l - e_min)).exp())?;
    let z = gibbs.trace().re;
    let rho_can = gibbs.scale_re(1.0 / z);

    let probed = (h_s_sys * rho_s).trace().re;
    let unprobed = (h_s_sys * &rho_can).trace().re;
    Ok(probed - unprobed)
}

/// The literal unnormalized difference `Σ_n E_n [e^{-β_eff E_n} - e^{-β E_n}]`.
///
/// Kept for side-by-side comparison with the normalized [`inner_energy_change`];
/// only the normalized form is a physical energy difference.
pub fn inner_energy_change_unnormalized(energies: &[f64], beta_eff: f64, beta: f64) -> f64 {
    energies
        .iter()
        .map(|&e| e * ((-beta_eff * e).exp() - (-beta * e).exp()))
        .sum()
}

/// Dispersive two-level results: branch partition functions, effective inverse
/// temperature, and the probing-induced temperature decrease.
#[derive(Clone, Debug)]
pub struct TlsAnalysis {
    pub xi_g: f64,
    pub xi_e: f64,
    /// `β_eff = β + ln(ξ_g/ξ_e)/Δ`; in the large-detuning regime `ω_b > Δ`
    /// this exceeds β (cooling) whenever g ≠ 0.
    pub beta_eff: f64,
    /// Temperature decrease `ΔT = [X/(β+X)]·T`, `X = ln(ξ_g/ξ_e)/Δ`, `T = 1/β`.
    pub delta_t: f64,
    /// Dispersive level shift per photon `χ = |g|²/(ω_b - Δ)`.
    pub chi: f64,
    /// Cleared when `ω_b < 10 Δ`, where the dispersive expansion is doubtful.
    pub dispersive_ok: bool,
    /// Photon terms summed before the geometric tail fell below tolerance.
    pub terms_used: usize,
}

/// Branch sums for a two-level system dispersively coupled to one cavity mode:
/// `ξ_e = Σ_n e^{-β[ω_b n + χ(n+1)]}`, `ξ_g = Σ_n e^{-β[ω_b n + χ n]}`.
///
/// Sums run adaptively until the geometric tail bound drops below
/// [`GEOMETRIC_TAIL_TOL`] relative, capped at `n_max` terms.
pub fn tls_analysis(
    omega_b: f64,
    g: Complex64,
    delta: f64,
    beta: f64,
    n_max: usize,
) -> Result<TlsAnalysis> {
    if beta <= 0.0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if delta <= 0.0 {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if omega_b == delta {
        return Err(Error::Domain(
            "cavity on resonance (omega_b = delta): dispersive shift diverges".into(),
        ));
    }
    let chi = g.norm_sqr() / (omega_b - delta);
    let rate = beta * (omega_b + chi);
    if rate <= 0.0 {
        return Err(Error::Domain(format!(
            "branch sums do not converge: beta (omega_b + chi) = {rate} <= 0"
        )));
    }

    // Both branches share the ratio q = e^{-β(ω_b+χ)}; ξ_e = e^{-βχ} ξ_g term
    // by term, so one adaptive sum serves both.
    let q = (-rate).exp();
    let mut xi_g = 0.0;
    let mut term = 1.0;
    let mut terms_used = 0;
    for n in 0..n_max.max(1) {
        xi_g += term;
        terms_used = n + 1;
        // remaining tail is term * q / (1 - q)
        if term * q / (1.0 - q) < GEOMETRIC_TAIL_TOL * xi_g {
            break;
        }
        term *= q;
    }
    let xi_e = (-beta * chi).exp() * xi_g;

    let x = (xi_g.ln() - xi_e.ln()) / delta; // = beta*chi/delta
    let beta_eff = beta + x;
    let temperature = 1.0 / beta;
    let delta_t = x / (beta + x) * temperature;

    Ok(TlsAnalysis {
        xi_g,
        xi_e,
        beta_eff,
        delta_t,
        chi,
        dispersive_ok: omega_b >= 10.0 * delta,
        terms_used,
    })
}

/// Fidelity between the unprobed thermal state and the reweighted one:
/// `F = Σ e^{-βE_n} √ξ(n) / [(Σ e^{-βE_n})^{1/2} (Σ e^{-βE_n} ξ(n))^{1/2}]`.
///
/// Equal to the Bhattacharyya coefficient `Σ √(p_n q_n)` of the two diagonal
/// thermal distributions. Evaluated in log space, so it is invariant under a
/// constant shift of the energies and under a common rescaling of ξ.
pub fn fidelity_general(beta: f64, energies: &[f64], xi: &[f64]) -> Result<f64> {
    if xi.len() != energies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} formal factors vs {} energies",
            xi.len(),
            energies.len()
        )));
    }
    if energies.is_empty() {
        return Err(Error::Domain("fidelity of an empty spectrum".into()));
    }
    if let Some(bad) = xi.iter().position(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::Domain(format!("xi({bad}) = {} is not positive", xi[bad])));
    }
    let log_xi: Vec<f64> = xi.iter().map(|&x| x.ln()).collect();
    Ok(fidelity_from_logs(beta, energies, &log_xi))
}

/// Log-space core of [`fidelity_general`]; also used where ξ would overflow.
pub fn fidelity_from_logs(beta: f64, energies: &[f64], log_xi: &[f64]) -> f64 {
    let num = log_sum_exp(
        energies
            .iter()
            .zip(log_xi)
            .map(|(&e, &lx)| -beta * e + 0.5 * lx),
    );
    let den_p = log_sum_exp(energies.iter().map(|&e| -beta * e));
    let den_q = log_sum_exp(energies.iter().zip(log_xi).map(|(&e, &lx)| -beta * e + lx));
    (num - 0.5 * den_p - 0.5 * den_q).exp()
}

/// Closed-form oscillator fidelity for the uniform level shift `ξ(n) = e^{βλn}`:
/// `F = sqrt(sinh(βω/2) sinh(β(ω-λ)/2)) / sinh(β(ω-λ/2)/2)`.
///
/// Requires `0 ≤ λ < ω` (the shifted oscillator must keep a positive frequency).
pub fn fidelity_oscillator_closed_form(beta: f64, omega: f64, lambda: f64) -> Result<f64> {
    if beta <= 0.0 || omega <= 0.0 {
        return Err(Error::Domain(format!(
            "beta and omega must be positive, got beta = {beta}, omega = {omega}"
        )));
    }
    if !(0.0..omega).contains(&lambda) {
        return Err(Error::Domain(format!(
            "level shift lambda = {lambda} must lie in [0, omega = {omega})"
        )));
    }
    let num = ((beta * omega / 2.0).sinh() * (beta * (omega - lambda) / 2.0).sinh()).sqrt();
    let den = (beta * (omega - lambda / 2.0) / 2.0).sinh();
    Ok(num / den)
}

/// Series route to the oscillator fidelity: [`fidelity_general`] over
/// `ξ(n) = e^{βλn}` with the level count chosen so the neglected tail is
/// below machine noise. The independent check of the closed form.
pub fn fidelity_oscillator_series(beta: f64, omega: f64, lambda: f64) -> Result<f64> {
    if beta <= 0.0 || omega <= 0.0 {
        return Err(Error::Domain(format!(
            "beta and omega must be positive, got beta = {beta}, omega = {omega}"
        )));
    }
    if !(0.0..omega).contains(&lambda) {
        return Err(Error::Domain(format!(
            "level shift lambda = {lambda} must lie in [0, omega = {omega})"
        )));
    }
    // slowest-decaying term in any of the three sums decays like e^{-β(ω-λ)n}
    let decay = beta * (omega - lambda);
    let n_levels = ((40.0 / decay).ceil() as usize).clamp(8, 2_000_000);
    let energies: Vec<f64> = (0..n_levels).map(|n| (n as f64 + 0.5) * omega).collect();
    let log_xi: Vec<f64> = (0..n_levels).map(|n| beta * lambda * n as f64).collect();
    Ok(fidelity_from_logs(beta, &energies, &log_xi))
}

/// Temperature shift of the shifted-oscillator reading:
/// `ΔT = 1/β_eff - 1/β = [β(ω/λ - 1)]^{-1}` with `β_eff = β(1 - λ/ω)`.
pub fn temperature_shift_oscillator(beta: f64, omega: f64, lambda: f64) -> Result<f64> {
    if beta <= 0.0 || omega <= 0.0 {
        return Err(Error::Domain(format!(
            "beta and omega must be positive, got beta = {beta}, omega = {omega}"
        )));
    }
    if !(0.0..omega).contains(&lambda) {
        return Err(Error::Domain(format!(
            "level shift lambda = {lambda} must lie in [0, omega = {omega})"
        )));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (beta * (omega / lambda - 1.0)))
}
