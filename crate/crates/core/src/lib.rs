//! Thermodynamic witnesses of quantum non-demolition probing.
//!
//! A probed system, a probing apparatus, a non-demolition coupling and a bath
//! temperature go in; out come the effective Hamiltonian, the thermal reduced
//! state, branch partition functions, generalized and effective inverse
//! temperatures, level shifts, the inner-energy change, the dispersive cooling
//! shift, and thermal-state fidelities — each checkable against brute-force
//! references on truncated Hilbert spaces.
//!
//! Module map:
//! - [`operator`]: dense Hermitian algebra on product spaces (tensor products,
//!   eigendecomposition, matrix functions, partial trace).
//! - [`models`]: builders for the supported system/apparatus/coupling kinds.
//! - [`schrieffer_wolff`]: the second-order block-diagonalizing transform and
//!   branch decomposition.
//! - [`thermo`]: every witness quantity.
//! - [`probe`]: pre-measurement decoherence factors and orthogonalization times.
//! - [`oracle`]: independent exact references and scaling fits.
//! - [`scenario`]: declarative scenarios and the end-to-end pipeline.

pub mod error;
pub mod models;
pub mod operator;
pub mod oracle;
pub mod probe;
pub mod scenario;
pub mod schrieffer_wolff;
pub mod thermo;

pub use error::{Error, Result};
pub use models::{ApparatusSpec, BathMode, CouplingSpec, LambdaRule, SystemSpec};
pub use operator::{Operator, ProductSpace, SpectralDecomposition, C64};
pub use scenario::{analyze, AnalysisOptions, Grid, Scenario, ScenarioRun, SweepGrids};
pub use thermo::ThermalAnalysis;
