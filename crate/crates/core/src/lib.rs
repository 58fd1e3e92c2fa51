//! Numerically exact fixed-number projections of the Lieb-Liniger ground
//! state on a ring.
//!
//! A coarse-grained measurement that finds `k` of the `N` bosons inside an
//! arc `A = [0, ell]` leaves a bipartite pure state. This crate computes the
//! probability `p(k)` of each outcome, the spectrum and von Neumann entropy
//! of the reduced density matrix of `A`, and the extractable entanglement
//! `max_k p(k) S_A(k)`, for any repulsive coupling including the free and
//! impenetrable (Tonks-Girardeau) limits. The impenetrable limit is
//! cross-checked against free-fermion counting statistics in [`counting`].
//!
//! Modules:
//! - [`bethe`]: Bethe roots, Gaudin norm, wavefunction.
//! - [`simplex`]: exact ordered-simplex exponential integrals.
//! - [`projection`]: probabilities, reduced density matrices, entropies.
//! - [`counting`]: Toeplitz-determinant counting statistics and their
//!   Fisher-Hartwig asymptotics.
//! - [`oracle`]: brute-force validators (Monte Carlo, grids, quadrature).

pub mod bethe;
pub mod counting;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod projection;
pub mod simplex;
pub mod special;

pub use bethe::{
    gaudin_data, ground_state_quantum_numbers, solve_bethe_roots, wavefunction_value, BetheRoots,
    Coupling, GaudinData, ModelParams, QuantumNumbers, Wavefunction,
};
pub use counting::CountingModel;
pub use error::{Error, Result};
pub use oracle::McEstimate;
pub use projection::{
    entanglement_report, entanglement_spectrum, entropy_upper_bound, EntanglementReport,
    EntanglementSpectrum, ProjectionEngine, ProjectionOutcome,
};
pub use simplex::{ordered_exp_integral, OrderedExpIntegralKey, SimplexCache};

/// Crate version, echoed in every CLI record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
