//! Second-order Schrieffer-Wolff (Frohlich-Nakajima) transformation.
//!
//! Solves the generator condition `V + [H0, S] = 0` in the eigenbasis of
//! `H0`, builds the effective Hamiltonian `H_eff = H0 + [V, S]/2`, splits
//! block-diagonal couplings into per-system-level branch Hamiltonians, and
//! certifies the non-demolition structure `[H_S, V_eff] = 0`.

use crate::error::{Error, Result};
use crate::operator::{
    commutator, commutator_norm, eig_hermitian, tensor, CMatrix, Operator, C64,
};

/// Relative factor for the default quasi-degeneracy guard:
/// pairs closer than `tol = DEGENERACY_TOL_REL * spectral_range` are skipped.
pub const DEGENERACY_TOL_REL: f64 = 1e-9;

/// Anti-Hermitian generator solving `V + [H0, S] = 0`, with the residual norm
/// and any eigenpairs skipped because their gap fell inside the degeneracy guard.
#[derive(Clone, Debug)]
pub struct GeneratorSolution {
    /// The generator, anti-Hermitian (`S^† = -S`).
    pub s: Operator,
    /// `‖V + [H0, S]‖_F`; zero up to roundoff unless pairs were zeroed.
    pub residual: f64,
    /// Eigenbasis index pairs `(a, b)`, `a ≤ b`, skipped as (near-)degenerate.
    /// Diagonal pairs `(a, a)` appear when `V` carries a diagonal part in the
    /// `H0` eigenbasis, which no generator can cancel.
    pub zeroed_pairs: Vec<(usize, usize)>,
}

/// Solve `V + [H0, S] = 0` with `S_ab = V_ab / (E_b - E_a)` in the `H0`
/// eigenbasis, zeroing matrix elements across gaps at or below `degeneracy_tol`.
///
/// Matrix elements of `V` sitting on a zeroed gap are reported in
/// `zeroed_pairs` (ignoring entries below roundoff relative to `‖V‖_F`) and
/// show up in the residual; everything else is cancelled exactly.
pub fn solve_generator(h0: &Operator, v: &Operator, degeneracy_tol: f64) -> Result<GeneratorSolution> {
    if h0.space() != v.space() {
        return Err(Error::DimensionMismatch(
            "H0 and V must live on the same product space".into(),
        ));
    }
    let v_dev = v.hermiticity_deviation();
    if v_dev > crate::operator::HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            deviation: v_dev,
            tolerance: crate::operator::HERMITICITY_TOL,
        });
    }
    let sd = eig_hermitian(h0)?;
    let d = h0.dim();
    let u = sd.eigenvectors();
    let v_eig = u.adjoint() * v.matrix() * u;
    let pair_floor = 1e-12 * v.frobenius_norm();

    let mut s_eig = CMatrix::zeros(d, d);
    let mut zeroed_pairs = Vec::new();
    for a in 0..d {
        for b in 0..d {
            let gap = sd.eigenvalues()[b] - sd.eigenvalues()[a];
            if a != b && gap.abs() > degeneracy_tol {
                s_eig[(a, b)] = v_eig[(a, b)] / C64::new(gap, 0.0);
            } else if a <= b && v_eig[(a, b)].norm() > pair_floor {
                zeroed_pairs.push((a, b));
            }
        }
    }

    let s = Operator::new(u * s_eig * u.adjoint(), h0.space().clone())?;
    let residual = (&commutator(h0, &s)? + v).frobenius_norm();
    Ok(GeneratorSolution { s, residual, zeroed_pairs })
}

/// Degeneracy tolerance scaled to `H0`'s spectrum: `1e-9 × (λ_max - λ_min)`.
pub fn default_degeneracy_tol(h0: &Operator) -> Result<f64> {
    let sd = eig_hermitian(h0)?;
    Ok(DEGENERACY_TOL_REL * sd.spectral_range())
}

/// `V_eff = [V, S]/2`, the second-order piece of the transformed Hamiltonian.
/// Hermitian by construction; symmetrized to remove roundoff.
pub fn effective_coupling(v: &Operator, sol: &GeneratorSolution) -> Result<Operator> {
    let half = commutator(v, &sol.s)?.scale(C64::new(0.5, 0.0));
    Ok(half.symmetrized())
}

/// `H_eff = H0 + [V, S]/2`.
pub fn effective_hamiltonian(h0: &Operator, v: &Operator, sol: &GeneratorSolution) -> Result<Operator> {
    Ok(h0 + &effective_coupling(v, sol)?)
}

/// A full-space operator split into apparatus-space blocks conditioned on the
/// system level, plus the norm of whatever did not fit that form.
#[derive(Clone, Debug)]
pub struct BranchDecomposition {
    /// `H(n) = ⟨n|·|n⟩`, one apparatus-space operator per system level.
    branches: Vec<Operator>,
    /// Frobenius norm of all `n ≠ m` blocks.
    pub offdiag_leakage: f64,
}

impl BranchDecomposition {
    pub fn branches(&self) -> &[Operator] {
        &self.branches
    }

    pub fn branch(&self, n: usize) -> &Operator {
        &self.branches[n]
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Reassemble `Σ_n |n⟩⟨n| ⊗ H(n)` (the block-diagonal part only).
    pub fn block_diagonal(&self, space: &crate::operator::ProductSpace) -> Result<Operator> {
        let ds = space.sys_dim();
        if ds != self.branches.len() {
            return Err(Error::DimensionMismatch(
                "branch count does not match the system dimension".into(),
            ));
        }
        let mut acc = Operator::zeros(space.clone());
        for (n, h_n) in self.branches.iter().enumerate() {
            let mut proj = CMatrix::zeros(ds, ds);
            proj[(n, n)] = C64::new(1.0, 0.0);
            let proj = Operator::new(proj, space.system_factor())?;
            acc = &acc + &tensor(&proj, h_n)?;
        }
        Ok(acc)
    }
}

/// Split a full-space operator into its system-level blocks.
///
/// The decomposition is lossless: the block-diagonal part plus the off-diagonal
/// remainder reproduces the input exactly. `offdiag_leakage` measures how far
/// the input is from being non-demolition-structured.
pub fn branch_decompose(op: &Operator) -> BranchDecomposition {
    let space = op.space();
    let ds = space.sys_dim();
    let da = space.app_dim();
    let m = op.matrix();

    let mut branches = Vec::with_capacity(ds);
    for n in 0..ds {
        let mut block = CMatrix::zeros(da, da);
        for k in 0..da {
            for kp in 0..da {
                block[(k, kp)] = m[(n * da + k, n * da + kp)];
            }
        }
        branches.push(
            Operator::new(block, space.apparatus_factor()).expect("block dims are consistent"),
        );
    }

    let mut leak_sq = 0.0;
    for n in 0..ds {
        for np in 0..ds {
            if n == np {
                continue;
            }
            for k in 0..da {
                for kp in 0..da {
                    leak_sq += m[(n * da + k, np * da + kp)].norm_sqr();
                }
            }
        }
    }

    BranchDecomposition { branches, offdiag_leakage: leak_sq.sqrt() }
}

/// `‖[H_S, V_eff]‖_F`; zero certifies the non-demolition structure.
///
/// `h_s` may live on the system factor alone (it is extended by the identity)
/// or already on the full space of `v_eff`.
pub fn nondemolition_residual(h_s: &Operator, v_eff: &Operator) -> Result<f64> {
    let extended;
    let h_full = if h_s.dim() == v_eff.dim() {
        h_s
    } else if h_s.dim() == v_eff.space().sys_dim() {
        let id_app = Operator::identity(v_eff.space().apparatus_factor());
        extended = tensor(h_s, &id_app)?.with_space(v_eff.space().clone())?;
        &extended
    } else {
        return Err(Error::DimensionMismatch(format!(
            "H_S of dim {} fits neither the system factor {} nor the full space {}",
            h_s.dim(),
            v_eff.space().sys_dim(),
            v_eff.dim()
        )));
    };
    commutator_norm(h_full, v_eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_total_hamiltonian, self_energy, ApparatusSpec, BathMode, CouplingSpec, LambdaRule,
        SystemSpec,
    };
    use crate::operator::{eig_hermitian, CMatrix, Operator, ProductSpace};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{RngExt, SeedableRng};

    fn random_hermitian(dim: usize, seed: u64) -> Operator {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let m = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = (&m + m.adjoint()).scale(0.5);
        Operator::new(h, ProductSpace::system_only(dim)).unwrap()
    }

    /// Random Hermitian coupling with no diagonal part in `h0`'s eigenbasis,
    /// the only kind the generator condition can cancel completely.
    fn random_offdiagonal_coupling(h0: &Operator, seed: u64) -> Operator {
        let raw = random_hermitian(h0.dim(), seed);
        let sd = eig_hermitian(h0).unwrap();
        let u = sd.eigenvectors();
        let mut v_eig = u.adjoint() * raw.matrix() * u;
        for a in 0..h0.dim() {
            v_eig[(a, a)] = Complex64::new(0.0, 0.0);
        }
        Operator::new(u * v_eig * u.adjoint(), h0.space().clone())
            .unwrap()
            .symmetrized()
    }

    #[test]
    fn zero_coupling_gives_zero_generator() {
        let h0 = random_hermitian(4, 3);
        let v = Operator::zeros(h0.space().clone());
        let sol = solve_generator(&h0, &v, 1e-9).unwrap();
        assert_eq!(sol.s.max_abs(), 0.0);
        assert_eq!(sol.residual, 0.0);
        assert!(sol.zeroed_pairs.is_empty());

        let h_eff = effective_hamiltonian(&h0, &v, &sol).unwrap();
        assert!((&h_eff - &h0).max_abs() < 1e-15);
    }

    #[test]
    fn analytic_two_level_generator() {
        // H0 = diag(0, Δ), V = g σ_x  →  S = (g/Δ)(|0⟩⟨1| - |1⟩⟨0|)
        let (delta, g) = (1.3, 0.07);
        let h0 = Operator::from_real_diagonal(ProductSpace::system_only(2), &[0.0, delta]).unwrap();
        let v = Operator::new(
            CMatrix::from_row_slice(2, 2, &[
                Complex64::new(0.0, 0.0), Complex64::new(g, 0.0),
                Complex64::new(g, 0.0), Complex64::new(0.0, 0.0),
            ]),
            ProductSpace::system_only(2),
        )
        .unwrap();

        let sol = solve_generator(&h0, &v, 1e-12).unwrap();
        assert_relative_eq!(sol.s.matrix()[(0, 1)].re, g / delta, epsilon = 1e-14);
        assert_relative_eq!(sol.s.matrix()[(1, 0)].re, -g / delta, epsilon = 1e-14);
        assert!(sol.residual <= 1e-12);
        // anti-Hermitian within tolerance
        assert!((&sol.s + &sol.s.adjoint()).max_abs() <= 1e-10);

        // H_eff = diag(-g²/Δ, Δ + g²/Δ)
        let h_eff = effective_hamiltonian(&h0, &v, &sol).unwrap();
        assert_relative_eq!(h_eff.matrix()[(0, 0)].re, -g * g / delta, epsilon = 1e-14);
        assert_relative_eq!(h_eff.matrix()[(1, 1)].re, delta + g * g / delta, epsilon = 1e-14);
        assert!(h_eff.matrix()[(0, 1)].norm() <= 1e-14);
    }

    #[test]
    fn residual_vanishes_relative_to_coupling() {
        for seed in 0..6u64 {
            let h0 = random_hermitian(6, 100 + seed);
            let v = random_offdiagonal_coupling(&h0, 200 + seed).scale_re(0.05);
            let tol = default_degeneracy_tol(&h0).unwrap();
            let sol = solve_generator(&h0, &v, tol).unwrap();
            assert!(sol.zeroed_pairs.is_empty(), "unexpected degeneracy at seed {seed}");
            assert!(
                sol.residual <= 1e-10 * v.frobenius_norm(),
                "residual {} too large at seed {seed}",
                sol.residual
            );
        }
    }

    #[test]
    fn diagonal_coupling_part_is_reported_not_cancelled() {
        // a V with weight on the H0 eigenbasis diagonal cannot satisfy the
        // generator condition; the leftover is reported as (a, a) pairs
        let h0 = Operator::from_real_diagonal(ProductSpace::system_only(2), &[0.0, 1.0]).unwrap();
        let v = Operator::from_real_diagonal(ProductSpace::system_only(2), &[0.3, -0.1]).unwrap();
        let sol = solve_generator(&h0, &v, 1e-9).unwrap();
        assert_eq!(sol.zeroed_pairs, vec![(0, 0), (1, 1)]);
        assert_relative_eq!(sol.residual, v.frobenius_norm(), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_pair_is_zeroed_and_reported() {
        let h0 = Operator::from_real_diagonal(ProductSpace::system_only(3), &[0.0, 0.0, 1.0]).unwrap();
        let v01 = 0.2;
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = Complex64::new(v01, 0.0);
        m[(1, 0)] = Complex64::new(v01, 0.0);
        let v = Operator::new(m, ProductSpace::system_only(3)).unwrap();

        let sol = solve_generator(&h0, &v, 1e-9).unwrap();
        assert_eq!(sol.zeroed_pairs, vec![(0, 1)]);
        assert_relative_eq!(sol.residual, v01 * 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn second_order_accuracy_two_level() {
        // |eig(H_eff) - eig(H0+V)| ≤ 2 g⁴/Δ³ for g/Δ ≤ 0.2
        let delta = 1.0;
        for &g in &[0.02, 0.05, 0.1, 0.2] {
            let h0 = Operator::from_real_diagonal(ProductSpace::system_only(2), &[0.0, delta]).unwrap();
            let v = Operator::new(
                CMatrix::from_row_slice(2, 2, &[
                    Complex64::new(0.0, 0.0), Complex64::new(g, 0.0),
                    Complex64::new(g, 0.0), Complex64::new(0.0, 0.0),
                ]),
                ProductSpace::system_only(2),
            )
            .unwrap();
            let sol = solve_generator(&h0, &v, 1e-12).unwrap();
            let h_eff = effective_hamiltonian(&h0, &v, &sol).unwrap();
            let approx_eigs = eig_hermitian(&h_eff).unwrap();
            let exact_lower = delta / 2.0 - (delta * delta / 4.0 + g * g).sqrt();
            let exact_upper = delta / 2.0 + (delta * delta / 4.0 + g * g).sqrt();
            let bound = 2.0 * g.powi(4) / delta.powi(3);
            assert!((approx_eigs.eigenvalues()[0] - exact_lower).abs() <= bound);
            assert!((approx_eigs.eigenvalues()[1] - exact_upper).abs() <= bound);
        }
    }

    #[test]
    fn branch_decompose_zero_and_explicit_blocks() {
        let space = ProductSpace::new(3, vec![2]).unwrap();
        let zero = Operator::zeros(space.clone());
        let bd = branch_decompose(&zero);
        assert_eq!(bd.len(), 3);
        assert_eq!(bd.offdiag_leakage, 0.0);
        for b in bd.branches() {
            assert_eq!(b.max_abs(), 0.0);
        }

        // V = Σ_n c_n |n⟩⟨n| ⊗ B  →  H(n) = c_n B, leakage 0
        let coeffs = [0.5, -1.0, 2.0];
        let b_op = random_hermitian(2, 7).with_space(space.apparatus_factor()).unwrap();
        let diag = Operator::from_real_diagonal(space.system_factor(), &coeffs).unwrap();
        let v = tensor(&diag, &b_op).unwrap();
        let bd = branch_decompose(&v);
        assert_eq!(bd.offdiag_leakage, 0.0);
        for (n, &c) in coeffs.iter().enumerate() {
            assert!((&bd.branch(n).scale_re(1.0 / c) - &b_op).max_abs() < 1e-14);
        }
    }

    #[test]
    fn branch_decompose_is_lossless() {
        let space = ProductSpace::new(3, vec![4]).unwrap();
        let op = random_hermitian(12, 55).with_space(space.clone()).unwrap();
        let bd = branch_decompose(&op);
        assert!(bd.offdiag_leakage > 0.0);

        let block = bd.block_diagonal(&space).unwrap();
        let remainder = &op - &block;
        // remainder carries exactly the off-diagonal blocks
        assert_relative_eq!(remainder.frobenius_norm(), bd.offdiag_leakage, epsilon = 1e-12);
        // and block + remainder is the input, entrywise
        assert!((&(&block + &remainder) - &op).max_abs() < 1e-15);
    }

    #[test]
    fn dephasing_branches_shift_by_polaron_energy() {
        // After the transform, each branch of V_eff is -λ_n² ε on the bulk of
        // the Fock space; only the truncation edge deviates.
        let n_trunc = 7;
        let app = ApparatusSpec::BosonBath {
            modes: vec![BathMode { omega: 1.3, g: Complex64::new(0.11, 0.05), n_trunc }],
        };
        let ops = build_total_hamiltonian(
            &SystemSpec::TruncatedOscillator { omega: 1.0, n_sys: 3 },
            &app,
            &CouplingSpec::Dephasing { lambda: LambdaRule::SqrtN },
            4096,
        )
        .unwrap();
        let eps = self_energy(&app);

        let h0 = ops.uncoupled();
        let tol = default_degeneracy_tol(&h0).unwrap();
        let sol = solve_generator(&h0, &ops.v_as, tol).unwrap();
        let v_eff = effective_coupling(&ops.v_as, &sol).unwrap();

        let bd = branch_decompose(&v_eff);
        assert!(bd.offdiag_leakage <= 1e-8);
        let lambdas = ops.lambdas.unwrap();
        for (n, lam) in lambdas.iter().enumerate() {
            let branch = bd.branch(n);
            for k in 0..n_trunc - 1 {
                assert_relative_eq!(
                    branch.matrix()[(k, k)].re,
                    -lam * lam * eps,
                    epsilon = 1e-12,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn nondemolition_certificates() {
        // dephasing model: commutes after (and before) the transform
        let ops = build_total_hamiltonian(
            &SystemSpec::TruncatedOscillator { omega: 1.0, n_sys: 3 },
            &ApparatusSpec::BosonBath {
                modes: vec![BathMode { omega: 1.0, g: Complex64::new(0.2, 0.0), n_trunc: 5 }],
            },
            &CouplingSpec::Dephasing { lambda: LambdaRule::SqrtN },
            4096,
        )
        .unwrap();
        let h0 = ops.uncoupled();
        let sol = solve_generator(&h0, &ops.v_as, default_degeneracy_tol(&h0).unwrap()).unwrap();
        let v_eff = effective_coupling(&ops.v_as, &sol).unwrap();
        assert!(nondemolition_residual(&ops.h_s_sys, &v_eff).unwrap() <= 1e-10);

        // raw dipole coupling does not commute with H_S
        let jc = build_total_hamiltonian(
            &SystemSpec::TwoLevel { delta: 1.0 },
            &ApparatusSpec::SingleCavity { omega_b: 10.0, g: Complex64::new(0.5, 0.0), n_trunc: 5 },
            &CouplingSpec::Dipole { rotating_wave: true },
            4096,
        )
        .unwrap();
        assert!(nondemolition_residual(&jc.h_s_sys, &jc.v_as).unwrap() > 0.1);

        // any f(H_S) ⊗ B commutes
        let space = jc.space.clone();
        let f_hs = Operator::from_real_diagonal(space.system_factor(), &[2.0, -3.0]).unwrap();
        let b = random_hermitian(space.app_dim(), 9)
            .with_space(space.apparatus_factor())
            .unwrap();
        let v = tensor(&f_hs, &b).unwrap();
        assert!(nondemolition_residual(&jc.h_s_sys, &v).unwrap() <= 1e-12);
    }
}
