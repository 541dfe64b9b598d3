//! Declarative model specifications and the operators they generate.
//!
//! Two system kinds (two-level, truncated oscillator), two apparatus kinds
//! (multimode boson bath, single cavity), and two coupling kinds (dephasing,
//! dipole). The builders return the factor-space and full-space Hamiltonians
//! together with the bookkeeping the witness pipeline needs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{tensor, CMatrix, Operator, ProductSpace, C64};

/// One bath mode: frequency, coupling amplitude, Fock-space cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: Complex64,
    pub n_trunc: usize,
}

/// The probed system.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemSpec {
    /// Two levels split by `delta` (ground at 0, excited at `delta`).
    TwoLevel { delta: f64 },
    /// Harmonic oscillator with `E_n = (n + 1/2) omega`, truncated to `n_sys` levels.
    TruncatedOscillator { omega: f64, n_sys: usize },
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::TwoLevel { delta } => {
                if *delta <= 0.0 {
                    return Err(Error::InvalidModel("system.delta must be positive".into()));
                }
            }
            SystemSpec::TruncatedOscillator { omega, n_sys } => {
                if *omega <= 0.0 {
                    return Err(Error::InvalidModel("system.omega must be positive".into()));
                }
                if *n_sys < 2 {
                    return Err(Error::InvalidModel("system.n_sys must be at least 2".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::TwoLevel { .. } => 2,
            SystemSpec::TruncatedOscillator { n_sys, .. } => *n_sys,
        }
    }

    /// Level energies in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        match self {
            SystemSpec::TwoLevel { delta } => vec![0.0, *delta],
            SystemSpec::TruncatedOscillator { omega, n_sys } => {
                (0..*n_sys).map(|n| (n as f64 + 0.5) * omega).collect()
            }
        }
    }
}

/// The probing apparatus.
#[derive(Clone, Debug, PartialEq)]
pub enum ApparatusSpec {
    /// A collection of harmonic modes, possibly empty (decoupled limit).
    BosonBath { modes: Vec<BathMode> },
    /// One cavity mode; the dispersive two-level results apply to this kind.
    SingleCavity { omega_b: f64, g: Complex64, n_trunc: usize },
}

impl ApparatusSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.modes().iter().enumerate() {
            if m.omega <= 0.0 {
                return Err(Error::InvalidModel(format!("apparatus mode {} has omega <= 0", i + 1)));
            }
            if m.n_trunc < 2 {
                return Err(Error::InvalidModel(format!(
                    "apparatus mode {} has n_trunc < 2",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Uniform mode view; a single cavity is a one-mode bath for building purposes.
    pub fn modes(&self) -> Vec<BathMode> {
        match self {
            ApparatusSpec::BosonBath { modes } => modes.clone(),
            ApparatusSpec::SingleCavity { omega_b, g, n_trunc } => {
                vec![BathMode { omega: *omega_b, g: *g, n_trunc: *n_trunc }]
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.modes().iter().map(|m| m.n_trunc).product()
    }
}

/// Rule assigning the dephasing amplitude `lambda_n` to each system level.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaRule {
    /// `lambda_n = sqrt(n)`.
    SqrtN,
    /// Explicit per-level table (must cover every system level).
    Explicit(Vec<f64>),
}

impl LambdaRule {
    pub fn resolve(&self, levels: usize) -> Result<Vec<f64>> {
        match self {
            LambdaRule::SqrtN => Ok((0..levels).map(|n| (n as f64).sqrt()).collect()),
            LambdaRule::Explicit(v) => {
                if v.len() != levels {
                    return Err(Error::InvalidModel(format!(
                        "coupling.lambda table has {} entries but the system has {} levels",
                        v.len(),
                        levels
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// System-apparatus coupling.
#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSpec {
    /// `V = Σ_n lambda_n |n⟩⟨n| ⊗ Σ_k (g_k b_k^† + g_k^* b_k)`.
    /// Diagonal in the system basis, so it commutes with `H_S` by construction.
    Dephasing { lambda: LambdaRule },
    /// `V = g σ_+ b + g^* σ_- b^†` (rotating-wave) for a two-level system in a
    /// single cavity. `rotating_wave: false` builds the full Rabi form
    /// `(σ_+ + σ_-) ⊗ (g b^† + g^* b)` for diagnostics.
    Dipole { rotating_wave: bool },
}

/// Everything `build_total_hamiltonian` produces: the full-space pieces of
/// `H = H_S + H_A + V_AS`, their factor-space versions, and resolved parameters.
#[derive(Clone, Debug)]
pub struct ModelOperators {
    pub space: ProductSpace,
    /// `H_S ⊗ 1_A` on the full space.
    pub h_s: Operator,
    /// `1_S ⊗ H_A` on the full space.
    pub h_a: Operator,
    /// The coupling on the full space.
    pub v_as: Operator,
    /// `H_S` on the system factor alone.
    pub h_s_sys: Operator,
    /// `H_A` on the apparatus factor alone.
    pub h_a_app: Operator,
    /// System level energies, ascending.
    pub system_energies: Vec<f64>,
    /// Resolved `lambda_n` for dephasing couplings.
    pub lambdas: Option<Vec<f64>>,
}

impl ModelOperators {
    /// `H_S + H_A + V_AS` on the full space.
    pub fn total(&self) -> Operator {
        &(&self.h_s + &self.h_a) + &self.v_as
    }

    /// `H_S + H_A` on the full space (the uncoupled part).
    pub fn uncoupled(&self) -> Operator {
        &self.h_s + &self.h_a
    }
}

/// Annihilation operator on a `dim`-dimensional Fock space.
fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Embed a single-mode operator at position `which` of the mode list.
fn embed_mode(op: &CMatrix, modes: &[BathMode], which: usize) -> Operator {
    let mut acc = CMatrix::identity(1, 1);
    for (k, m) in modes.iter().enumerate() {
        let factor = if k == which {
            op.clone()
        } else {
            CMatrix::identity(m.n_trunc, m.n_trunc)
        };
        acc = acc.kronecker(&factor);
    }
    let space = ProductSpace::apparatus_only(modes.iter().map(|m| m.n_trunc).collect());
    Operator::new(acc, space).expect("embedding preserves dimensions")
}

/// `H_A = Σ_k omega_k b_k^† b_k` on the apparatus factor.
pub fn apparatus_hamiltonian(app: &ApparatusSpec) -> Result<Operator> {
    app.validate()?;
    let modes = app.modes();
    let space = ProductSpace::apparatus_only(modes.iter().map(|m| m.n_trunc).collect());
    let mut h = Operator::zeros(space);
    for (k, m) in modes.iter().enumerate() {
        let a = annihilation(m.n_trunc);
        let num = a.adjoint() * &a;
        h = &h + &embed_mode(&num, &modes, k).scale_re(m.omega);
    }
    Ok(h)
}

/// `Σ_k (g_k b_k^† + g_k^* b_k)` on the apparatus factor.
fn bath_field(modes: &[BathMode]) -> Operator {
    let space = ProductSpace::apparatus_only(modes.iter().map(|m| m.n_trunc).collect());
    let mut f = Operator::zeros(space);
    for (k, m) in modes.iter().enumerate() {
        let a = annihilation(m.n_trunc);
        let term = a.adjoint().map(|c| c * m.g) + a.map(|c| c * m.g.conj());
        f = &f + &embed_mode(&term, modes, k);
    }
    f
}

/// Assemble `(H_S, H_A, V_AS)` on the product space for a model specification.
///
/// Dipole coupling requires a two-level system in a single cavity; anything
/// else is rejected. The total dimension is checked against `dim_cap`.
pub fn build_total_hamiltonian(
    sys: &SystemSpec,
    app: &ApparatusSpec,
    cpl: &CouplingSpec,
    dim_cap: usize,
) -> Result<ModelOperators> {
    sys.validate()?;
    app.validate()?;

    let ds = sys.dim();
    let modes = app.modes();
    let app_dims: Vec<usize> = modes.iter().map(|m| m.n_trunc).collect();
    let space = ProductSpace::new(ds, app_dims)?;
    if space.total_dim() > dim_cap {
        return Err(Error::CapExceeded { dim: space.total_dim(), cap: dim_cap });
    }

    let energies = sys.energies();
    let h_s_sys = Operator::from_real_diagonal(space.system_factor(), &energies)?;
    let h_a_app = apparatus_hamiltonian(app)?;

    let id_sys = Operator::identity(space.system_factor());
    let id_app = Operator::identity(space.apparatus_factor());
    let h_s = tensor(&h_s_sys, &id_app)?;
    let h_a = tensor(&id_sys, &h_a_app)?;

    let (v_as, lambdas) = match cpl {
        CouplingSpec::Dephasing { lambda } => {
            let lam = lambda.resolve(ds)?;
            let lam_op = Operator::from_real_diagonal(space.system_factor(), &lam)?;
            let field = bath_field(&modes);
            (tensor(&lam_op, &field)?, Some(lam))
        }
        CouplingSpec::Dipole { rotating_wave } => {
            let is_tls = matches!(sys, SystemSpec::TwoLevel { .. });
            let is_cavity = matches!(app, ApparatusSpec::SingleCavity { .. });
            if !is_tls || !is_cavity {
                return Err(Error::InvalidModel(
                    "dipole coupling requires a two_level system and a single_cavity apparatus"
                        .into(),
                ));
            }
            let m = &modes[0];
            let b = annihilation(m.n_trunc);
            let b_space = space.apparatus_factor();
            // ground at index 0, excited at index 1
            let mut raise = CMatrix::zeros(2, 2);
            raise[(1, 0)] = C64::new(1.0, 0.0);
            let sigma_plus = Operator::new(raise, space.system_factor())?;
            let sigma_minus = sigma_plus.adjoint();
            let v = if *rotating_wave {
                let b_op = Operator::new(b.map(|c| c * m.g), b_space.clone())?;
                let term = tensor(&sigma_plus, &b_op)?;
                &term + &term.adjoint()
            } else {
                let field = Operator::new(
                    b.adjoint().map(|c| c * m.g) + b.map(|c| c * m.g.conj()),
                    b_space,
                )?;
                let sx = &sigma_plus + &sigma_minus;
                tensor(&sx, &field)?
            };
            (v, None)
        }
    };

    Ok(ModelOperators {
        space,
        h_s,
        h_a,
        v_as,
        h_s_sys,
        h_a_app,
        system_energies: energies,
        lambdas,
    })
}

/// Self-energy `ε = Σ_k |g_k|² / omega_k` of the apparatus.
pub fn self_energy(app: &ApparatusSpec) -> f64 {
    app.modes().iter().map(|m| m.g.norm_sqr() / m.omega).sum()
}

/// Outcome of the spectral-density comparison between system and apparatus.
#[derive(Clone, Debug)]
pub struct DensityReport {
    /// `min_n |E_n - E_{n+M}|` over the system spectrum.
    pub min_system_gap: f64,
    /// `max_k |eps_k - eps_{k+1}|` over the apparatus spectrum.
    pub max_apparatus_gap: f64,
    /// `min_system_gap / max_apparatus_gap` (infinite for a gapless apparatus).
    pub ratio: f64,
    pub band: usize,
    pub threshold: f64,
    pub pass: bool,
    /// Set when the system M-gap collapses to zero (degenerate spectrum).
    pub degenerate: bool,
}

/// Compare the system's M-level gaps against the apparatus level spacing.
///
/// Takes the factor-space Hamiltonians. A degenerate system spectrum is
/// reported as a failure with `degenerate` set rather than an error.
pub fn spectral_density_check(
    h_s_sys: &Operator,
    h_a_app: &Operator,
    band: usize,
    threshold: f64,
) -> Result<DensityReport> {
    let sys = crate::operator::eig_hermitian(h_s_sys)?;
    let app = crate::operator::eig_hermitian(h_a_app)?;
    let sys_levels = sys.eigenvalues();
    if band == 0 || band >= sys_levels.len() {
        return Err(Error::InvalidModel(format!(
            "band width M = {band} must satisfy 0 < M < system dimension {}",
            sys_levels.len()
        )));
    }

    let min_system_gap = sys_levels
        .windows(band + 1)
        .map(|w| (w[band] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    let max_apparatus_gap = app
        .eigenvalues()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);

    let scale = sys.spectral_range().max(1e-300);
    let degenerate = min_system_gap <= 1e-12 * scale;
    let ratio = if max_apparatus_gap == 0.0 {
        f64::INFINITY
    } else {
        min_system_gap / max_apparatus_gap
    };
    let pass = !degenerate && ratio >= threshold;

    Ok(DensityReport {
        min_system_gap,
        max_apparatus_gap,
        ratio,
        band,
        threshold,
        pass,
        degenerate,
    })
}

/// Truncation convergence report: how much `Tr e^{-β H_A}` moves when any one
/// mode's cutoff is doubled.
#[derive(Clone, Debug)]
pub struct GateReport {
    /// Largest absolute change over single-mode doublings.
    pub max_change: f64,
    pub pass: bool,
}

/// Convergence threshold for [`truncation_gate`].
pub const TRUNCATION_GATE_TOL: f64 = 1e-8;

/// Check that every per-mode Fock cutoff is thermally converged at `beta`.
///
/// `H_A` is a sum of independent mode terms, so `Tr e^{-β H_A}` is a product
/// of geometric sums and the gate costs nothing to evaluate.
pub fn truncation_gate(app: &ApparatusSpec, beta: f64) -> Result<GateReport> {
    app.validate()?;
    if beta <= 0.0 {
        return Err(Error::Domain("beta must be positive".into()));
    }
    let modes = app.modes();
    let z_mode = |omega: f64, k: usize| -> f64 {
        (0..k).map(|j| (-beta * omega * j as f64).exp()).sum()
    };
    let mut max_change: f64 = 0.0;
    for which in 0..modes.len() {
        let z_now: f64 = modes
            .iter()
            .map(|m| z_mode(m.omega, m.n_trunc))
            .product();
        let z_doubled: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, m)| z_mode(m.omega, if k == which { 2 * m.n_trunc } else { m.n_trunc }))
            .product();
        max_change = max_change.max((z_doubled - z_now).abs());
    }
    Ok(GateReport { max_change, pass: max_change < TRUNCATION_GATE_TOL })
}
