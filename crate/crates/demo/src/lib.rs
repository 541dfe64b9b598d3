//! Browser bindings for the witness computations.
//!
//! Three interactive views, each returning flat arrays ready for plotting
//! (`[x0, y0, x1, y1, ...]` or labelled triples where noted):
//! fidelity against the level or temperature shift, the pure-dephasing
//! decoherence factor against time, and the dispersive cooling shift against
//! the coupling strength.
//!
//! Build with `wasm-pack build crates/demo --target web` and open
//! `crates/demo/static/index.html` from a local server.

use nalgebra::DVector;
use num_complex::Complex64;
use qprobe::models::{build_total_hamiltonian, ApparatusSpec, BathMode, CouplingSpec, LambdaRule, SystemSpec};
use qprobe::probe::{decoherence_matrix, BranchEvolution};
use qprobe::schrieffer_wolff::branch_decompose;
use qprobe::thermo::{
    fidelity_oscillator_closed_form, temperature_shift_oscillator, tls_analysis,
};
use wasm_bindgen::prelude::*;

/// `[lambda, F]` pairs for the oscillator fidelity against the level shift,
/// swept over `lambda in [0, 0.95 omega]`.
#[wasm_bindgen]
pub fn fidelity_vs_level_shift(beta: f64, omega: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let points = points.clamp(2, 5000);
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let lambda = 0.95 * omega * i as f64 / (points - 1) as f64;
        let f = fidelity_oscillator_closed_form(beta, omega, lambda)
            .map_err(|e| JsError::new(&e.to_string()))?;
        out.push(lambda);
        out.push(f);
    }
    Ok(out)
}

/// `[delta_T, F]` pairs for the oscillator fidelity against the temperature
/// shift `delta_T = [beta (omega/lambda - 1)]^{-1}`, same sweep as above.
#[wasm_bindgen]
pub fn fidelity_vs_temperature_shift(
    beta: f64,
    omega: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let points = points.clamp(2, 5000);
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let lambda = 0.95 * omega * i as f64 / (points - 1) as f64;
        let dt = temperature_shift_oscillator(beta, omega, lambda)
            .map_err(|e| JsError::new(&e.to_string()))?;
        let f = fidelity_oscillator_closed_form(beta, omega, lambda)
            .map_err(|e| JsError::new(&e.to_string()))?;
        out.push(dt);
        out.push(f);
    }
    Ok(out)
}

/// `[t, overlap, closed_form]` triples for the two-branch pure-dephasing
/// decoherence factor of a single bath mode, evolved from the vacuum.
///
/// The `overlap` column comes from exact branch evolution on a truncated
/// Fock space; `closed_form` is `exp[-(g/omega)^2 (1 - cos omega t)]`.
#[wasm_bindgen]
pub fn decoherence_overlap(
    omega: f64,
    g: f64,
    n_trunc: usize,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    if omega <= 0.0 || t_max <= 0.0 {
        return Err(JsError::new("omega and t_max must be positive"));
    }
    let points = points.clamp(2, 2000);
    let n_trunc = n_trunc.clamp(2, 64);

    let ops = build_total_hamiltonian(
        &SystemSpec::TruncatedOscillator { omega: 1.0, n_sys: 2 },
        &ApparatusSpec::BosonBath {
            modes: vec![BathMode { omega, g: Complex64::new(g, 0.0), n_trunc }],
        },
        &CouplingSpec::Dephasing { lambda: LambdaRule::Explicit(vec![0.0, 1.0]) },
        1 << 16,
    )
    .map_err(|e| JsError::new(&e.to_string()))?;
    let branches = branch_decompose(&ops.v_as);

    let mut vacuum = DVector::zeros(n_trunc);
    vacuum[0] = Complex64::new(1.0, 0.0);
    let times: Vec<f64> = (0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect();
    let record = decoherence_matrix(
        &branches,
        &ops.h_a_app,
        &vacuum,
        &times,
        BranchEvolution::FullBranch,
    )
    .map_err(|e| JsError::new(&e.to_string()))?;
    let overlaps = record.overlap(0, 1).expect("pair (0,1) exists");

    let mut out = Vec::with_capacity(3 * points);
    for (&t, &v) in times.iter().zip(overlaps) {
        let closed = (-(g / omega).powi(2) * (1.0 - (omega * t).cos())).exp();
        out.push(t);
        out.push(v);
        out.push(closed);
    }
    Ok(out)
}

/// Witnesses of the dispersive two-level probe at one parameter point.
#[wasm_bindgen]
pub struct TlsCooling {
    beta_eff: f64,
    delta_t: f64,
    chi: f64,
    xi_g: f64,
    xi_e: f64,
    dispersive_ok: bool,
}

#[wasm_bindgen]
impl TlsCooling {
    #[wasm_bindgen(getter)]
    pub fn beta_eff(&self) -> f64 {
        self.beta_eff
    }

    #[wasm_bindgen(getter)]
    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    #[wasm_bindgen(getter)]
    pub fn chi(&self) -> f64 {
        self.chi
    }

    #[wasm_bindgen(getter)]
    pub fn xi_g(&self) -> f64 {
        self.xi_g
    }

    #[wasm_bindgen(getter)]
    pub fn xi_e(&self) -> f64 {
        self.xi_e
    }

    #[wasm_bindgen(getter)]
    pub fn dispersive_ok(&self) -> bool {
        self.dispersive_ok
    }
}

/// Single-point dispersive cooling report.
#[wasm_bindgen]
pub fn tls_cooling(omega_b: f64, g: f64, delta: f64, beta: f64) -> Result<TlsCooling, JsError> {
    let r = tls_analysis(omega_b, Complex64::new(g, 0.0), delta, beta, 100_000)
        .map_err(|e| JsError::new(&e.to_string()))?;
    Ok(TlsCooling {
        beta_eff: r.beta_eff,
        delta_t: r.delta_t,
        chi: r.chi,
        xi_g: r.xi_g,
        xi_e: r.xi_e,
        dispersive_ok: r.dispersive_ok,
    })
}

/// `[g, delta_T]` pairs for the cooling shift against the coupling strength.
#[wasm_bindgen]
pub fn cooling_vs_coupling(
    omega_b: f64,
    delta: f64,
    beta: f64,
    g_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    if g_max <= 0.0 {
        return Err(JsError::new("g_max must be positive"));
    }
    let points = points.clamp(2, 5000);
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let g = g_max * i as f64 / (points - 1) as f64;
        let r = tls_analysis(omega_b, Complex64::new(g, 0.0), delta, beta, 100_000)
            .map_err(|e| JsError::new(&e.to_string()))?;
        out.push(g);
        out.push(r.delta_t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fidelity_curve_shape() {
        let data = fidelity_vs_level_shift(1.0, 1.0, 50).unwrap();
        assert_eq!(data.len(), 100);
        assert_relative_eq!(data[1], 1.0, epsilon = 1e-12);
        for w in data.chunks(2).collect::<Vec<_>>().windows(2) {
            assert!(w[1][1] < w[0][1], "fidelity must decrease with the shift");
        }
    }

    #[test]
    fn temperature_shift_curve_monotone() {
        let data = fidelity_vs_temperature_shift(1.0, 1.0, 40).unwrap();
        for w in data.chunks(2).collect::<Vec<_>>().windows(2) {
            assert!(w[1][0] > w[0][0]);
            assert!(w[1][1] < w[0][1]);
        }
    }

    #[test]
    fn decoherence_overlay_matches_closed_form() {
        let data = decoherence_overlap(1.0, 0.5, 30, std::f64::consts::TAU, 60).unwrap();
        assert_eq!(data.len(), 180);
        for row in data.chunks(3) {
            assert!((row[1] - row[2]).abs() <= 1e-7, "t = {}: {} vs {}", row[0], row[1], row[2]);
        }
    }

    #[test]
    fn cooling_report_worked_example() {
        let r = tls_cooling(10.0, 0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(r.beta_eff(), 1.0 + 1.0 / 36.0, epsilon = 1e-12);
        assert_relative_eq!(r.delta_t(), 1.0 / 37.0, epsilon = 1e-12);
        assert!(r.dispersive_ok());

        let curve = cooling_vs_coupling(10.0, 1.0, 1.0, 1.0, 20).unwrap();
        for w in curve.chunks(2).collect::<Vec<_>>().windows(2) {
            assert!(w[1][1] >= w[0][1], "cooling grows with coupling");
        }
    }
}
