//! Declarative scenarios and the end-to-end witness pipeline.
//!
//! A [`Scenario`] aggregates the model specs, the bath inverse temperature,
//! analysis options and sweep grids; [`analyze`] turns one into a
//! [`ThermalAnalysis`] plus the diagnostics a caller may want to log.

use crate::error::{Error, Result};
use crate::models::{
    self, build_total_hamiltonian, ApparatusSpec, CouplingSpec, SystemSpec,
};
use crate::operator::Operator;
use crate::schrieffer_wolff::{
    branch_decompose, effective_coupling, effective_hamiltonian,
    nondemolition_residual, solve_generator,
};
use crate::thermo::{
    self, effective_beta, fidelity_general, formal_factors, generalized_beta_profile,
    inner_energy_change, level_shifts_from_xi, reduced_system_state, tls_analysis,
    ThermalAnalysis,
};

/// Inclusive grid of `count` points from `start` to `end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidModel("sweep grid must be nonempty".into()));
        }
        if start.is_nan() || end.is_nan() || start >= end {
            return Err(Error::InvalidModel(format!(
                "sweep grid needs min < max, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, end, count })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

/// Optional per-axis sweep grids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepGrids {
    /// Level-shift grid; also parameterizes the temperature-shift sweep.
    pub lambda: Option<Grid>,
    pub delta_t: Option<Grid>,
    /// Multiplier applied to every configured coupling amplitude.
    pub g: Option<Grid>,
    pub beta: Option<Grid>,
}

/// Tolerances, truncations and switches for the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// Ceiling on the total Hilbert-space dimension.
    pub dim_cap: usize,
    /// Degeneracy guard for the generator solve, relative to the spectral range.
    pub degeneracy_tol_rel: f64,
    /// Flatness tolerance deciding whether `beta_eff` exists.
    pub beta_eff_rel_tol: f64,
    /// Ceiling on the off-block leakage accepted when taking branch traces.
    pub leakage_tol: f64,
    /// Term cap for the adaptive dispersive sums.
    pub tls_n_max: usize,
    /// Also evaluate the literal unnormalized energy difference.
    pub literal_delta_u: bool,
    /// Run the spectral-density comparison with `(band M, ratio threshold r)`
    /// and report it in the diagnostics.
    pub density_check: Option<(usize, f64)>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            dim_cap: crate::oracle::DEFAULT_DIM_CAP,
            degeneracy_tol_rel: crate::schrieffer_wolff::DEGENERACY_TOL_REL,
            beta_eff_rel_tol: thermo::BETA_EFF_REL_TOL,
            leakage_tol: thermo::LEAKAGE_TOL,
            tls_n_max: 100_000,
            literal_delta_u: false,
            density_check: None,
        }
    }
}

/// A complete witness computation request.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub system: SystemSpec,
    pub apparatus: ApparatusSpec,
    pub coupling: CouplingSpec,
    /// Bath inverse temperature (k_B = 1).
    pub beta: f64,
    pub options: AnalysisOptions,
    pub sweeps: SweepGrids,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.apparatus.validate()?;
        if self.beta <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Numbers worth logging but not part of the witness record.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    /// `‖V + [H0, S]‖_F` of the generator solve.
    pub generator_residual: Option<f64>,
    /// Off-block leakage of the transformed coupling.
    pub leakage: Option<f64>,
    /// `‖[H_S, V_eff]‖_F`.
    pub nondemolition: Option<f64>,
    /// Truncation convergence of the apparatus partition function.
    pub truncation_gate: Option<models::GateReport>,
    /// Spectral-density comparison, when requested.
    pub density: Option<models::DensityReport>,
    /// Cleared when the dispersive expansion is doubtful (`ω_b < 10 Δ`).
    pub dispersive_ok: Option<bool>,
    /// Literal unnormalized energy difference, when requested.
    pub literal_delta_u: Option<f64>,
}

/// A witness bundle together with its diagnostics.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub analysis: ThermalAnalysis,
    pub diagnostics: Diagnostics,
}

/// Run the full witness pipeline for one scenario.
///
/// Dephasing couplings go through the transform: solve the generator, take the
/// second-order effective coupling, trace per branch. The dispersive two-level
/// scenario uses its closed branch sums. Full-Rabi dipole coupling is a
/// diagnostic configuration and is rejected here.
pub fn analyze(scenario: &Scenario) -> Result<ScenarioRun> {
    scenario.validate()?;
    let beta = scenario.beta;

    match &scenario.coupling {
        CouplingSpec::Dipole { rotating_wave } => {
            if !rotating_wave {
                return Err(Error::InvalidModel(
                    "full Rabi coupling is diagnostic-only; run the dispersive comparison instead"
                        .into(),
                ));
            }
            let SystemSpec::TwoLevel { delta } = scenario.system else {
                return Err(Error::InvalidModel(
                    "dipole coupling requires a two_level system".into(),
                ));
            };
            let ApparatusSpec::SingleCavity { omega_b, g, .. } = scenario.apparatus else {
                return Err(Error::InvalidModel(
                    "dipole coupling requires a single_cavity apparatus".into(),
                ));
            };
            let tls = tls_analysis(omega_b, g, delta, beta, scenario.options.tls_n_max)?;
            let energies = [0.0, delta];
            let xi = vec![tls.xi_g, tls.xi_e];
            let beta_profile = generalized_beta_profile(&xi, &energies, beta)?;
            let beta_eff = effective_beta(&beta_profile, scenario.options.beta_eff_rel_tol);
            let level_shifts = level_shifts_from_xi(&xi, beta);
            let fidelity = fidelity_general(beta, &energies, &xi)?;

            // reduced state of the dispersive reading: P_n ∝ e^{-βE_n} ξ(n)
            let weights: Vec<f64> = energies
                .iter()
                .zip(&xi)
                .map(|(&e, &x)| (-beta * e).exp() * x)
                .collect();
            let z: f64 = weights.iter().sum();
            let populations: Vec<f64> = weights.iter().map(|w| w / z).collect();
            let sys_space = crate::operator::ProductSpace::system_only(2);
            let rho_s = Operator::from_real_diagonal(sys_space.clone(), &populations)?;
            let h_s_sys = Operator::from_real_diagonal(sys_space, &energies)?;
            let delta_u = inner_energy_change(&rho_s, beta, &h_s_sys)?;

            let literal = scenario.options.literal_delta_u.then(|| {
                thermo::inner_energy_change_unnormalized(
                    &energies,
                    beta_eff.unwrap_or(beta),
                    beta,
                )
            });
            let density = match scenario.options.density_check {
                Some((band, ratio)) => {
                    let ops = build_total_hamiltonian(
                        &scenario.system,
                        &scenario.apparatus,
                        &scenario.coupling,
                        scenario.options.dim_cap,
                    )?;
                    Some(models::spectral_density_check(&ops.h_s_sys, &ops.h_a_app, band, ratio)?)
                }
                None => None,
            };

            Ok(ScenarioRun {
                analysis: ThermalAnalysis {
                    beta,
                    xi,
                    beta_profile,
                    beta_eff,
                    level_shifts,
                    delta_u,
                    delta_t: Some(tls.delta_t),
                    fidelity,
                },
                diagnostics: Diagnostics {
                    truncation_gate: Some(models::truncation_gate(&scenario.apparatus, beta)?),
                    density,
                    dispersive_ok: Some(tls.dispersive_ok),
                    literal_delta_u: literal,
                    ..Diagnostics::default()
                },
            })
        }

        CouplingSpec::Dephasing { .. } => {
            let ops = build_total_hamiltonian(
                &scenario.system,
                &scenario.apparatus,
                &scenario.coupling,
                scenario.options.dim_cap,
            )?;

            let h0 = ops.uncoupled();
            let tol = scenario.options.degeneracy_tol_rel
                * crate::operator::eig_hermitian(&h0)?.spectral_range();
            let sol = solve_generator(&h0, &ops.v_as, tol)?;
            let v_eff = effective_coupling(&ops.v_as, &sol)?;
            let h_eff = effective_hamiltonian(&h0, &ops.v_as, &sol)?;
            let branches = branch_decompose(&v_eff);
            let nd = nondemolition_residual(&ops.h_s_sys, &v_eff)?;

            let xi = formal_factors(&ops.h_a_app, &v_eff, beta, scenario.options.leakage_tol)?;
            let beta_profile = generalized_beta_profile(&xi, &ops.system_energies, beta)?;
            let beta_eff = effective_beta(&beta_profile, scenario.options.beta_eff_rel_tol);
            let level_shifts = level_shifts_from_xi(&xi, beta);
            let fidelity = fidelity_general(beta, &ops.system_energies, &xi)?;

            let rho_s = reduced_system_state(&h_eff, beta)?;
            let delta_u = inner_energy_change(&rho_s, beta, &ops.h_s_sys)?;

            let literal = scenario.options.literal_delta_u.then(|| {
                thermo::inner_energy_change_unnormalized(
                    &ops.system_energies,
                    beta_eff.unwrap_or(beta),
                    beta,
                )
            });
            let density = match scenario.options.density_check {
                Some((band, ratio)) => Some(models::spectral_density_check(
                    &ops.h_s_sys,
                    &ops.h_a_app,
                    band,
                    ratio,
                )?),
                None => None,
            };

            Ok(ScenarioRun {
                analysis: ThermalAnalysis {
                    beta,
                    xi,
                    beta_profile,
                    beta_eff,
                    level_shifts,
                    delta_u,
                    delta_t: None,
                    fidelity,
                },
                diagnostics: Diagnostics {
                    generator_residual: Some(sol.residual),
                    leakage: Some(branches.offdiag_leakage),
                    nondemolition: Some(nd),
                    truncation_gate: Some(models::truncation_gate(&scenario.apparatus, beta)?),
                    density,
                    dispersive_ok: None,
                    literal_delta_u: literal,
                },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BathMode, LambdaRule};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn mode(omega: f64, g: f64, n_trunc: usize) -> BathMode {
        BathMode { omega, g: Complex64::new(g, 0.0), n_trunc }
    }

    fn apparatus_spec_bath(modes: Vec<BathMode>) -> ApparatusSpec {
        ApparatusSpec::BosonBath { modes }
    }

    #[test]
    fn grid_points_and_validation() {
        let g = Grid::new(0.0, 0.9, 10).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 10);
        assert_relative_eq!(pts[0], 0.0);
        assert_relative_eq!(pts[9], 0.9);
        assert!(Grid::new(1.0, 0.5, 3).is_err());
        assert!(Grid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn decoupled_two_level_run() {
        let scenario = Scenario {
            system: SystemSpec::TwoLevel { delta: 1.0 },
            apparatus: ApparatusSpec::BosonBath { modes: vec![] },
            coupling: CouplingSpec::Dephasing { lambda: LambdaRule::Explicit(vec![0.0, 1.0]) },
            beta: 1.0,
            options: AnalysisOptions::default(),
            sweeps: SweepGrids::default(),
        };
        let run = analyze(&scenario).unwrap();
        let a = &run.analysis;
        assert_eq!(a.beta_eff, Some(1.0));
        assert_relative_eq!(a.fidelity, 1.0, epsilon = 1e-12);
        assert!(a.delta_u.abs() <= 1e-12);
        for x in &a.xi {
            assert_relative_eq!(*x, 1.0, epsilon = 1e-12);
        }
        assert_eq!(a.delta_t, None);
    }

    #[test]
    fn dephasing_oscillator_run_matches_closed_forms() {
        // the cutoff must be thermally converged for the profile to flatten
        // within the default tolerance (see the truncation gate)
        let modes = vec![mode(1.0, 0.1, 22)];
        let app = apparatus_spec_bath(modes);
        let eps = crate::models::self_energy(&app);
        let scenario = Scenario {
            system: SystemSpec::TruncatedOscillator { omega: 1.0, n_sys: 5 },
            apparatus: app,
            coupling: CouplingSpec::Dephasing { lambda: LambdaRule::SqrtN },
            beta: 1.0,
            options: AnalysisOptions::default(),
            sweeps: SweepGrids::default(),
        };
        let run = analyze(&scenario).unwrap();
        let a = &run.analysis;

        // β_eff exists and sits at β(1 - ε/ω) up to truncation noise
        let beta_eff = a.beta_eff.expect("sqrt-n oscillator has a flat profile");
        assert_relative_eq!(beta_eff, 1.0 - eps, epsilon = 1e-9);
        // heated: ΔU > 0
        assert!(a.delta_u > 0.0);
        // diagnostics certify the structure
        let d = &run.diagnostics;
        assert!(d.nondemolition.unwrap() <= 1e-10);
        assert!(d.leakage.unwrap() <= 1e-8);
        assert!(d.generator_residual.unwrap() <= 1e-10 * 1.0f64.max(1.0));
    }

    #[test]
    fn tls_cavity_run() {
        let scenario = Scenario {
            system: SystemSpec::TwoLevel { delta: 1.0 },
            apparatus: ApparatusSpec::SingleCavity {
                omega_b: 10.0,
                g: Complex64::new(0.5, 0.0),
                n_trunc: 12,
            },
            coupling: CouplingSpec::Dipole { rotating_wave: true },
            beta: 1.0,
            options: AnalysisOptions::default(),
            sweeps: SweepGrids::default(),
        };
        let run = analyze(&scenario).unwrap();
        let a = &run.analysis;
        assert_relative_eq!(a.beta_eff.unwrap(), 1.0 + 1.0 / 36.0, epsilon = 1e-12);
        assert_relative_eq!(a.delta_t.unwrap(), 1.0 / 37.0, epsilon = 1e-12);
        // cooled: ΔU < 0, fidelity strictly below 1
        assert!(a.delta_u < 0.0);
        assert!(a.fidelity < 1.0);
        assert!(a.xi[0] > a.xi[1]);
    }

    #[test]
    fn full_rabi_is_rejected_by_pipeline() {
        let scenario = Scenario {
            system: SystemSpec::TwoLevel { delta: 1.0 },
            apparatus: ApparatusSpec::SingleCavity {
                omega_b: 10.0,
                g: Complex64::new(0.5, 0.0),
                n_trunc: 8,
            },
            coupling: CouplingSpec::Dipole { rotating_wave: false },
            beta: 1.0,
            options: AnalysisOptions::default(),
            sweeps: SweepGrids::default(),
        };
        assert!(matches!(analyze(&scenario), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn witnesses_invariant_under_system_energy_shift() {
        // shifting every system level by a constant moves nothing observable:
        // ξ, β(n), F and ΔU all stay put (ρ_S and the canonical state shift
        // together)
        let base = Scenario {
            system: SystemSpec::TruncatedOscillator { omega: 1.0, n_sys: 4 },
            apparatus: ApparatusSpec::BosonBath { modes: vec![mode(1.3, 0.15, 8)] },
            coupling: CouplingSpec::Dephasing { lambda: LambdaRule::SqrtN },
            beta: 1.0,
            options: AnalysisOptions::default(),
            sweeps: SweepGrids::default(),
        };
        let run = analyze(&base).unwrap();

        // same pipeline, but every operator-level energy shifted by hand
        let ops = build_total_hamiltonian(
            &base.system,
            &base.apparatus,
            &base.coupling,
            base.options.dim_cap,
        )
        .unwrap();
        let shift = 17.25;
        let shifted_energies: Vec<f64> =
            ops.system_energies.iter().map(|e| e + shift).collect();
        let h_s_sys =
            Operator::from_real_diagonal(ops.space.system_factor(), &shifted_energies).unwrap();
        let id_app = Operator::identity(ops.space.apparatus_factor());
        let h_s = crate::operator::tensor(&h_s_sys, &id_app).unwrap();
        let h0 = &h_s + &ops.h_a;
        let tol = base.options.degeneracy_tol_rel
            * crate::operator::eig_hermitian(&h0).unwrap().spectral_range();
        let sol = solve_generator(&h0, &ops.v_as, tol).unwrap();
        let v_eff = effective_coupling(&ops.v_as, &sol).unwrap();
        let h_eff = effective_hamiltonian(&h0, &ops.v_as, &sol).unwrap();

        let xi = formal_factors(&ops.h_a_app, &v_eff, base.beta, base.options.leakage_tol).unwrap();
        for (a, b) in xi.iter().zip(&run.analysis.xi) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
        let profile = generalized_beta_profile(&xi, &shifted_energies, base.beta).unwrap();
        for (a, b) in profile.iter().zip(&run.analysis.beta_profile) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
        let fidelity = fidelity_general(base.beta, &shifted_energies, &xi).unwrap();
        assert_relative_eq!(fidelity, run.analysis.fidelity, epsilon = 1e-12);

        let rho_s = reduced_system_state(&h_eff, base.beta).unwrap();
        let delta_u = inner_energy_change(&rho_s, base.beta, &h_s_sys).unwrap();
        assert_relative_eq!(delta_u, run.analysis.delta_u, epsilon = 1e-11);
    }
}
