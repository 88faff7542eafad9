//! Locating the times at which post-selection leaves a NOON state.
//!
//! For a conditioning `(mode, count)` on a three-mode state the collapsed
//! state lives on two modes with `N' = N - count` photons. Everything in it
//! other than `|N'0⟩` and `|0N'⟩` has to vanish; the largest such projected
//! amplitude is the *suppressed magnitude*. It is non-negative with no sign
//! change, so minima are bracketed on a grid and refined by golden-section
//! search.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{arg_err, Error, Result};
use crate::evolution::{Evolver, Method};
use crate::fock::{FockState, StateVector};
use crate::hamiltonian::WaveguideParams;
use crate::measurement::{collapse_at, CollapseRow};

/// Default scan spacing for `g ≈ 0.01`, where NOON events are ~87 apart.
pub const DEFAULT_GRID_STEP: f64 = 0.1;

/// Golden-section search stops once the bracket is this narrow.
pub const REFINE_WIDTH: f64 = 1e-9;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Conditioning {
    pub mode: usize,
    pub count: u32,
}

impl Conditioning {
    pub const fn new(mode: usize, count: u32) -> Self {
        Self { mode, count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoonEvent {
    pub t: f64,
    pub suppressed_coefficient_magnitude: f64,
    pub success_probability: f64,
    pub phase_optimized_fidelity: f64,
    pub fixed_phase_fidelity: f64,
    pub conditioning: Conditioning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub t_max: f64,
    pub grid_step: f64,
    /// Upper bound on the suppressed magnitude; the fidelity floor is `1 - 10 tol`.
    pub tol: f64,
    pub method: Method,
}

impl SearchSettings {
    pub fn new(t_max: f64, grid_step: f64, tol: f64) -> Self {
        Self {
            t_max,
            grid_step,
            tol,
            method: Method::Analytic,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn fidelity_floor(&self) -> f64 {
        1.0 - 10.0 * self.tol
    }

    fn validate(&self) -> Result<()> {
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return arg_err(format!("grid_step must be positive, got {}", self.grid_step));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return arg_err(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return arg_err(format!("t_max must be non-negative, got {}", self.t_max));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = (self.t_max / self.grid_step + 1e-9).floor() as usize;
        let mut g: Vec<f64> = (0..=n).map(|k| k as f64 * self.grid_step).collect();
        if self.t_max - g[n] > 1e-12 {
            g.push(self.t_max);
        }
        g
    }
}

/// Evaluates the suppressed magnitude and collapse data at any time.
struct Objective<'a> {
    evolver: &'a Evolver,
    initial: &'a StateVector,
    cond: Conditioning,
    method: Method,
    unwanted: Vec<FockState>,
}

impl<'a> Objective<'a> {
    fn new(evolver: &'a Evolver, initial: &'a StateVector, cond: Conditioning, method: Method) -> Result<Self> {
        let basis = initial.basis();
        if basis.mode_count() != 3 {
            return arg_err("NOON search expects a three-mode state");
        }
        if cond.mode >= 3 {
            return arg_err(format!("mode {} out of range for 3 modes", cond.mode));
        }
        if cond.count >= basis.total_quanta() {
            return arg_err(format!(
                "conditioning on {} of {} photons leaves no NOON state",
                cond.count,
                basis.total_quanta()
            ));
        }
        let remaining = basis.total_quanta() - cond.count;
        let unwanted = (1..remaining).map(|a| FockState::new([a, remaining - a])).collect();
        Ok(Self {
            evolver,
            initial,
            cond,
            method,
            unwanted,
        })
    }

    fn row(&self, t: f64) -> Result<CollapseRow> {
        collapse_at(
            self.evolver,
            self.initial,
            self.cond.mode,
            self.cond.count,
            t,
            self.method,
        )
    }

    fn suppressed(&self, row: &CollapseRow) -> f64 {
        self.unwanted
            .iter()
            .map(|k| row.collapse.projected_amplitude(k).norm())
            .fold(0.0, f64::max)
    }

    fn value(&self, t: f64) -> Result<f64> {
        Ok(self.suppressed(&self.row(t)?))
    }

    /// Golden-section minimization on `[lo, hi]`.
    fn refine(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let (mut v1, mut v2) = (self.value(x1)?, self.value(x2)?);
        while hi - lo > REFINE_WIDTH {
            if v1 <= v2 {
                hi = x2;
                x2 = x1;
                v2 = v1;
                x1 = hi - INV_PHI * (hi - lo);
                v1 = self.value(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                v1 = v2;
                x2 = lo + INV_PHI * (hi - lo);
                v2 = self.value(x2)?;
            }
        }
        Ok(if v1 <= v2 { x1 } else { x2 })
    }
}

/// Scan `[0, t_max]` for post-selected NOON states.
pub fn find_noon_times(
    params: &WaveguideParams,
    initial: &StateVector,
    conditioning: Conditioning,
    t_max: f64,
    grid_step: f64,
    tol: f64,
) -> Result<Vec<NoonEvent>> {
    let evolver = Evolver::new(params, initial.basis())?;
    find_noon_times_with(
        &evolver,
        initial,
        conditioning,
        &SearchSettings::new(t_max, grid_step, tol),
    )
}

pub fn find_noon_times_with(
    evolver: &Evolver,
    initial: &StateVector,
    conditioning: Conditioning,
    settings: &SearchSettings,
) -> Result<Vec<NoonEvent>> {
    settings.validate()?;
    let objective = Objective::new(evolver, initial, conditioning, settings.method)?;
    let grid = settings.grid();
    let values: Vec<f64> = grid.par_iter().map(|&t| objective.value(t)).collect::<Result<_>>()?;

    let mut events = Vec::new();
    for k in 1..values.len().saturating_sub(1) {
        if !(values[k] < values[k - 1] && values[k] <= values[k + 1]) {
            continue;
        }
        let t = objective.refine(grid[k - 1], grid[k + 1])?;
        let row = objective.row(t)?;
        let suppressed = objective.suppressed(&row);
        let Some(fidelity) = row.fidelity else { continue };
        if suppressed <= settings.tol && fidelity.phase_optimized >= settings.fidelity_floor() {
            if events
                .last()
                .is_some_and(|e: &NoonEvent| (t - e.t).abs() < settings.grid_step)
            {
                continue;
            }
            events.push(NoonEvent {
                t,
                suppressed_coefficient_magnitude: suppressed,
                success_probability: row.collapse.outcome_probability,
                phase_optimized_fidelity: fidelity.phase_optimized,
                fixed_phase_fidelity: fidelity.fixed_phase,
                conditioning,
            });
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: WaveguideParams,
    pub events: Result<Vec<NoonEvent>, Error>,
}

/// [`find_noon_times`] for each parameter set. Failures stay in their row.
pub fn sweep(
    params_grid: &[WaveguideParams],
    initial: &StateVector,
    conditioning: Conditioning,
    settings: &SearchSettings,
) -> Result<Vec<SweepRow>> {
    if params_grid.is_empty() {
        return arg_err("empty parameter grid");
    }
    let basis: Arc<_> = initial.basis().clone();
    Ok(params_grid
        .par_iter()
        .map(|p| SweepRow {
            params: *p,
            events: Evolver::new(p, &basis).and_then(|ev| find_noon_times_with(&ev, initial, conditioning, settings)),
        })
        .collect())
}
