//! Photon-number post-selection on one waveguide and NOON-state fidelity of
//! what is left.
//!
//! After measuring `mode`, the remaining modes keep their original relative
//! order: conditioning a three-mode state on guide 1 leaves kets labelled
//! `|n0 n2⟩`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{arg_err, Result};
use crate::evolution::{Evolver, Method};
use crate::fock::{enumerate_basis, FockBasis, FockState, StateVector};
use crate::hamiltonian::WaveguideParams;
use crate::linalg::CVector;

/// Outcomes below this probability are reported as empty.
pub const PROBABILITY_FLOOR: f64 = 1e-24;

/// Looser than [`crate::fock::NORM_TOL`]: measured states usually come out of
/// a propagator.
const MEASURE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseResult {
    pub outcome_probability: f64,
    /// Normalized post-measurement state over the unmeasured modes; `None`
    /// when the outcome has zero probability.
    pub collapsed_state: Option<StateVector>,
    pub measured_mode: usize,
    pub measured_count: u32,
}

impl CollapseResult {
    pub fn is_empty(&self) -> bool {
        self.collapsed_state.is_none()
    }

    /// The projected (unnormalized) amplitude on a ket of the reduced basis.
    pub fn projected_amplitude(&self, ket: &FockState) -> Complex64 {
        self.collapsed_state.as_ref().map_or(Complex64::new(0.0, 0.0), |s| {
            s.amplitude(ket) * self.outcome_probability.sqrt()
        })
    }
}

fn check_measurement(state: &StateVector, mode: usize, count: u32) -> Result<()> {
    let basis = state.basis();
    if basis.mode_count() < 2 {
        return arg_err("measuring the only mode leaves nothing to collapse onto");
    }
    if mode >= basis.mode_count() {
        return arg_err(format!("mode {mode} out of range for {} modes", basis.mode_count()));
    }
    if count > basis.total_quanta() {
        return arg_err(format!(
            "count {count} exceeds the {} photons present",
            basis.total_quanta()
        ));
    }
    Ok(())
}

/// `P_{mode=count} |ψ⟩` in the original basis, unnormalized.
pub fn project(state: &StateVector, mode: usize, count: u32) -> Result<StateVector> {
    check_measurement(state, mode, count)?;
    let amps = CVector::from_iterator(
        state.basis().len(),
        state
            .basis()
            .states()
            .iter()
            .zip(state.amplitudes().iter())
            .map(|(s, &c)| {
                if s.get(mode) == count {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
    );
    StateVector::new(state.basis().clone(), amps)
}

/// Post-select `count` photons in `mode`.
pub fn conditional_measure(state: &StateVector, mode: usize, count: u32) -> Result<CollapseResult> {
    check_measurement(state, mode, count)?;
    state.require_normalized(MEASURE_NORM_TOL)?;
    let basis = state.basis();
    let reduced: Arc<FockBasis> = enumerate_basis(basis.mode_count() - 1, basis.total_quanta() - count)?;
    let mut amps = CVector::zeros(reduced.len());
    for (s, &c) in basis.states().iter().zip(state.amplitudes().iter()) {
        if s.get(mode) == count {
            let k = reduced
                .index_of(&s.without_mode(mode))
                .expect("reduced basis is complete");
            amps[k] = c;
        }
    }
    let probability: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let collapsed_state = if probability > PROBABILITY_FLOOR {
        Some(StateVector::new(
            reduced,
            amps / Complex64::new(probability.sqrt(), 0.0),
        )?)
    } else {
        None
    };
    Ok(CollapseResult {
        outcome_probability: if collapsed_state.is_some() { probability } else { 0.0 },
        collapsed_state,
        measured_mode: mode,
        measured_count: count,
    })
}

/// Probability of every count `0..=N` in `mode`.
pub fn outcome_distribution(state: &StateVector, mode: usize) -> Result<Vec<f64>> {
    check_measurement(state, mode, 0)?;
    let mut probs = vec![0.0; state.basis().total_quanta() as usize + 1];
    for (s, c) in state.basis().states().iter().zip(state.amplitudes().iter()) {
        probs[s.get(mode) as usize] += c.norm_sqr();
    }
    Ok(probs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoonFidelity {
    /// `|⟨(|N0⟩ + |0N⟩)/√2 | ψ⟩|²`
    pub fixed_phase: f64,
    /// `max_φ |⟨(|N0⟩ + e^{iφ}|0N⟩)/√2 | ψ⟩|² = (|c_N0| + |c_0N|)²/2`
    pub phase_optimized: f64,
}

/// Overlap of a two-mode, `n`-photon state with the NOON state.
pub fn noon_fidelity(state: &StateVector, n: u32) -> Result<NoonFidelity> {
    let basis = state.basis();
    if basis.mode_count() != 2 {
        return arg_err(format!(
            "NOON fidelity needs a two-mode state, got {} modes",
            basis.mode_count()
        ));
    }
    if basis.total_quanta() != n {
        return arg_err(format!(
            "state holds {} photons, asked about N = {n}",
            basis.total_quanta()
        ));
    }
    if n == 0 {
        return arg_err("NOON states need at least one photon");
    }
    let a = state.amplitude(&FockState::new([n, 0]));
    let b = state.amplitude(&FockState::new([0, n]));
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    Ok(NoonFidelity {
        fixed_phase: clamp((a + b).norm_sqr() / 2.0),
        phase_optimized: clamp((a.norm() + b.norm()).powi(2) / 2.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRow {
    pub t: f64,
    pub collapse: CollapseResult,
    /// Present when the collapsed state has two modes and is non-empty.
    pub fidelity: Option<NoonFidelity>,
}

/// Evolve, measure, and score the collapsed state at every time in `t_grid`.
pub fn collapse_series(
    params: &WaveguideParams,
    initial: &StateVector,
    mode: usize,
    count: u32,
    t_grid: &[f64],
    method: Method,
) -> Result<Vec<CollapseRow>> {
    let evolver = Evolver::new(params, initial.basis())?;
    collapse_series_with(&evolver, initial, mode, count, t_grid, method)
}

/// [`collapse_series`] reusing a prepared [`Evolver`].
pub fn collapse_series_with(
    evolver: &Evolver,
    initial: &StateVector,
    mode: usize,
    count: u32,
    t_grid: &[f64],
    method: Method,
) -> Result<Vec<CollapseRow>> {
    if t_grid.is_empty() {
        return arg_err("empty time grid");
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return arg_err("time grid must be strictly increasing");
    }
    check_measurement(initial, mode, count)?;
    t_grid
        .par_iter()
        .map(|&t| collapse_at(evolver, initial, mode, count, t, method))
        .collect()
}

pub(crate) fn collapse_at(
    evolver: &Evolver,
    initial: &StateVector,
    mode: usize,
    count: u32,
    t: f64,
    method: Method,
) -> Result<CollapseRow> {
    let psi = evolver.evolve(initial, t, method)?;
    let collapse = conditional_measure(&psi, mode, count)?;
    let fidelity = match &collapse.collapsed_state {
        Some(s) if s.basis().mode_count() == 2 && s.basis().total_quanta() > 0 => {
            Some(noon_fidelity(s, s.basis().total_quanta())?)
        }
        _ => None,
    };
    Ok(CollapseRow { t, collapse, fidelity })
}
