//! Pre-measurement dynamics: branch-conditioned apparatus evolution, the
//! decoherence-factor matrix, and orthogonalization-time estimation.
//!
//! A system level `|n⟩` drags the apparatus along its branch Hamiltonian;
//! the pairwise overlaps `|⟨D_m(t)|D_n(t)⟩|` record how fast the pointer
//! states separate.

use crate::error::{Error, Result};
use crate::operator::{eig_hermitian, CVector, Operator, C64};
use crate::schrieffer_wolff::BranchDecomposition;

/// Which generator drives each branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchEvolution {
    /// `H_A + H(n)`: the full branch Hamiltonian. The common `H_A` does not
    /// cancel in overlaps once branches differ; this is the physical choice
    /// and reproduces the displaced-oscillator decoherence factor.
    FullBranch,
    /// `H(n)` alone, for comparison against the bare-coupling picture.
    CouplingOnly,
}

/// Sampled overlap magnitudes `|⟨D_m(t)|D_n(t)⟩|` for every level pair `m ≤ n`.
#[derive(Clone, Debug)]
pub struct DecoherenceRecord {
    times: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    /// `overlaps[p][t]` for pair index `p` and time index `t`.
    overlaps: Vec<Vec<f64>>,
}

impl DecoherenceRecord {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn overlap(&self, m: usize, n: usize) -> Option<&[f64]> {
        let key = (m.min(n), m.max(n));
        self.pairs
            .iter()
            .position(|&p| p == key)
            .map(|i| self.overlaps[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[f64])> {
        self.pairs.iter().copied().zip(self.overlaps.iter().map(Vec::as_slice))
    }
}

/// Evolve a shared apparatus state under every branch generator and record
/// all pairwise overlap magnitudes at the requested times.
///
/// `initial` must be normalized; evolution is exact per time point via the
/// eigendecomposition of each branch Hamiltonian.
pub fn decoherence_matrix(
    branches: &BranchDecomposition,
    h_a_app: &Operator,
    initial: &CVector,
    times: &[f64],
    mode: BranchEvolution,
) -> Result<DecoherenceRecord> {
    let da = h_a_app.dim();
    if initial.len() != da {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dim {} but the apparatus has dim {}",
            initial.len(),
            da
        )));
    }
    if branches.branches().iter().any(|b| b.space() != h_a_app.space()) {
        return Err(Error::DimensionMismatch(
            "branch Hamiltonians and H_A must live on the same apparatus space".into(),
        ));
    }
    let norm_dev = (initial.norm() - 1.0).abs();
    if norm_dev > 1e-12 {
        return Err(Error::NotNormalized(norm_dev));
    }

    // per branch: eigendecompose once, keep the eigenbasis coordinates of |D⟩
    let mut eigs = Vec::with_capacity(branches.len());
    for n in 0..branches.len() {
        let generator = match mode {
            BranchEvolution::FullBranch => h_a_app + branches.branch(n),
            BranchEvolution::CouplingOnly => branches.branch(n).clone(),
        };
        let sd = eig_hermitian(&generator)?;
        let coords = sd.eigenvectors().adjoint() * initial;
        eigs.push((sd, coords));
    }

    let state_at = |branch: usize, t: f64| -> CVector {
        let (sd, coords) = &eigs[branch];
        let phased = CVector::from_iterator(
            da,
            sd.eigenvalues()
                .iter()
                .zip(coords.iter())
                .map(|(&l, c)| C64::from_polar(1.0, -l * t) * c),
        );
        sd.eigenvectors() * phased
    };

    let mut pairs = Vec::new();
    for m in 0..branches.len() {
        for n in m..branches.len() {
            pairs.push((m, n));
        }
    }

    let mut overlaps = vec![Vec::with_capacity(times.len()); pairs.len()];
    for &t in times {
        let states: Vec<CVector> = (0..branches.len()).map(|b| state_at(b, t)).collect();
        for (p, &(m, n)) in pairs.iter().enumerate() {
            overlaps[p].push(states[m].dotc(&states[n]).norm());
        }
    }

    Ok(DecoherenceRecord { times: times.to_vec(), pairs, overlaps })
}

/// First sampled time at which a pair's overlap falls strictly below
/// `threshold`, per off-diagonal pair.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityTime {
    pub pair: (usize, usize),
    /// Absent when the overlap never crossed the threshold in the sampled
    /// window (finite-mode models recur and may never orthogonalize).
    pub time: Option<f64>,
}

/// Scan the record for the first time each pair drops below `threshold`.
///
/// The comparison is strictly below, so at `threshold = 1` the initial
/// overlap of 1 at `t = 0` does not qualify.
pub fn orthogonality_time(
    record: &DecoherenceRecord,
    threshold: f64,
) -> Result<Vec<OrthogonalityTime>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Domain(format!(
            "threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let mut out = Vec::new();
    for ((m, n), series) in record.iter() {
        if m == n {
            continue;
        }
        let time = series
            .iter()
            .position(|&v| v < threshold)
            .map(|i| record.times[i]);
        out.push(OrthogonalityTime { pair: (m, n), time });
    }
    Ok(out)
}
