//! Simulation of quantum light in an array of three coupled waveguides.
//!
//! The crate builds the Hamiltonian on fixed-photon-number Fock blocks,
//! propagates states with two independent propagators (spectral and the
//! factorized Lie-algebraic one), integrates the disentangling ODEs, and
//! post-selects on photon-number measurements to find NOON states.

pub mod error;
pub mod evolution;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod measurement;
pub mod noon_search;
pub mod wei_norman;

pub use error::{Error, Result};
pub use evolution::{
    closed_form_coefficients, disentangle_coeffs, disentangle_coeffs_for, evolve, pair_superposition_state,
    propagator_analytic, propagator_oracle, ClosedFormCoefficients, DisentangleCoeffs, Evolver, Method, Propagator,
};
pub use fock::{enumerate_basis, FockBasis, FockState, Ladder, StateVector};
pub use hamiltonian::{
    build_hamiltonian, build_reduced_hamiltonian, mode_transform, verify_similarity, CollectiveGenerators,
    HermitianMatrix, WaveguideParams,
};
pub use measurement::{
    collapse_series, conditional_measure, noon_fidelity, outcome_distribution, project, CollapseResult, CollapseRow,
    NoonFidelity,
};
pub use noon_search::{
    find_noon_times, find_noon_times_with, sweep, Conditioning, NoonEvent, SearchSettings, SweepRow,
};
pub use wei_norman::{integrate_wn, verify_adjoint_identities, wn_rhs, AdjointReport, WnTrajectory};
