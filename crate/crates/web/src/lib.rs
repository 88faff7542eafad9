//! Browser bindings for the waveguide simulator. Every export returns a
//! JSON string that the page in `www/` draws on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use noonsim::measurement::collapse_series_with;
use noonsim::{
    disentangle_coeffs_for, find_noon_times_with, integrate_wn, pair_superposition_state, Conditioning, Evolver,
    FockState, Method, SearchSettings, WaveguideParams,
};

/// Longest time range the page may ask for, to keep the UI responsive.
pub const MAX_POINTS: usize = 20_000;

fn grid(t_max: f64, t_step: f64) -> Result<Vec<f64>, String> {
    if !(t_step.is_finite() && t_max.is_finite() && t_step > 0.0 && t_max >= 0.0) {
        return Err(format!("need t_max >= 0 and t_step > 0, got {t_max}, {t_step}"));
    }
    let n = (t_max / t_step + 1e-9).floor() as usize;
    if n >= MAX_POINTS {
        return Err(format!("{} samples is too many (limit {MAX_POINTS})", n + 1));
    }
    Ok((0..=n).map(|k| k as f64 * t_step).collect())
}

fn json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curves {
    labels: Vec<String>,
    t: Vec<f64>,
    /// `values[k][i] = |C_k(t_i)|`
    values: Vec<Vec<f64>>,
}

/// `|C_ket|(t)` for the state `(|102⟩ + |120⟩)/√2`.
pub fn coefficient_curves_json(
    omega0: f64,
    omega: f64,
    lambda: f64,
    g: f64,
    t_max: f64,
    t_step: f64,
) -> Result<String, String> {
    let params = WaveguideParams::new(omega0, omega, lambda, g);
    let psi = pair_superposition_state();
    let evolver = Evolver::new(&params, psi.basis()).map_err(|e| e.to_string())?;
    let t = grid(t_max, t_step)?;
    let kets: Vec<FockState> = psi.basis().states().to_vec();
    let mut values = vec![Vec::with_capacity(t.len()); kets.len()];
    for &time in &t {
        let out = evolver
            .evolve(&psi, time, Method::Analytic)
            .map_err(|e| e.to_string())?;
        for (k, ket) in kets.iter().enumerate() {
            values[k].push(out.amplitude(ket).norm());
        }
    }
    json(&Curves {
        labels: kets.iter().map(FockState::label).collect(),
        t,
        values,
    })
}

#[derive(Serialize)]
struct Event {
    t: f64,
    probability: f64,
    fidelity: f64,
}

#[derive(Serialize)]
struct PostSelection {
    t: Vec<f64>,
    probability: Vec<f64>,
    fidelity: Vec<f64>,
    events: Vec<Event>,
}

/// Outcome probability and phase-optimized NOON fidelity after finding
/// `count` photons in `mode`, with the NOON events in range.
#[allow(clippy::too_many_arguments)]
pub fn post_selection_json(
    omega0: f64,
    omega: f64,
    lambda: f64,
    g: f64,
    mode: usize,
    count: u32,
    t_max: f64,
    t_step: f64,
) -> Result<String, String> {
    let params = WaveguideParams::new(omega0, omega, lambda, g);
    let psi = pair_superposition_state();
    let evolver = Evolver::new(&params, psi.basis()).map_err(|e| e.to_string())?;
    let t = grid(t_max, t_step)?;
    let rows = collapse_series_with(&evolver, &psi, mode, count, &t, Method::Analytic).map_err(|e| e.to_string())?;
    let settings = SearchSettings::new(t_max, t_step.min(0.1), 1e-8);
    let events = find_noon_times_with(&evolver, &psi, Conditioning::new(mode, count), &settings)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|e| Event {
            t: e.t,
            probability: e.success_probability,
            fidelity: e.phase_optimized_fidelity,
        })
        .collect();
    json(&PostSelection {
        probability: rows.iter().map(|r| r.collapse.outcome_probability).collect(),
        fidelity: rows
            .iter()
            .map(|r| r.fidelity.map_or(0.0, |f| f.phase_optimized))
            .collect(),
        t,
        events,
    })
}

#[derive(Serialize)]
struct Trajectory {
    t: Vec<f64>,
    f1_re: Vec<f64>,
    f1_im: Vec<f64>,
    f2_re: Vec<f64>,
    f2_im: Vec<f64>,
    /// `max(|f1 - f1_exact|, |f2 - f2_exact|)` per sample
    error: Vec<f64>,
    /// Set when integration stopped at a zero of `|e^{i f2}|`.
    stopped: Option<String>,
}

/// RK4 solution of the disentangling ODEs against the closed forms. Runs
/// that hit a singular time are cut short at the last good sample.
pub fn wei_norman_json(omega2: f64, g: f64, t_end: f64, step: f64) -> Result<String, String> {
    let (traj, stopped) = match integrate_wn(omega2, g, t_end, step) {
        Ok(tr) => (tr, None),
        Err(noonsim::Error::SingularityProximity { t, .. }) => {
            let cut = t - step;
            if cut <= 0.0 {
                return Err(format!("singular time {t} is within one step of the start"));
            }
            (
                integrate_wn(omega2, g, cut, step).map_err(|e| e.to_string())?,
                Some(format!("singular near t = {t:.4}")),
            )
        }
        Err(e) => return Err(e.to_string()),
    };
    if traj.len() > MAX_POINTS {
        return Err(format!("{} samples is too many (limit {MAX_POINTS})", traj.len()));
    }
    let mut error = Vec::with_capacity(traj.len());
    for (k, &t) in traj.times.iter().enumerate() {
        let c = disentangle_coeffs_for(omega2, g, t).map_err(|e| e.to_string())?;
        error.push((c.f1 - traj.f1[k]).norm().max((c.f2 - traj.f2[k]).norm()));
    }
    json(&Trajectory {
        f1_re: traj.f1.iter().map(|z| z.re).collect(),
        f1_im: traj.f1.iter().map(|z| z.im).collect(),
        f2_re: traj.f2.iter().map(|z| z.re).collect(),
        f2_im: traj.f2.iter().map(|z| z.im).collect(),
        t: traj.times,
        error,
        stopped,
    })
}

#[wasm_bindgen]
pub fn coefficient_curves(
    omega0: f64,
    omega: f64,
    lambda: f64,
    g: f64,
    t_max: f64,
    t_step: f64,
) -> Result<String, JsError> {
    coefficient_curves_json(omega0, omega, lambda, g, t_max, t_step).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn post_selection(
    omega0: f64,
    omega: f64,
    lambda: f64,
    g: f64,
    mode: usize,
    count: u32,
    t_max: f64,
    t_step: f64,
) -> Result<String, JsError> {
    post_selection_json(omega0, omega, lambda, g, mode, count, t_max, t_step).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn wei_norman(omega2: f64, g: f64, t_end: f64, step: f64) -> Result<String, JsError> {
    wei_norman_json(omega2, g, t_end, step).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn curves_start_on_the_pair_state() {
        let v = parse(coefficient_curves_json(1.0, 1.0, 0.0, 0.01, 10.0, 0.5));
        assert_eq!(v["labels"].as_array().unwrap().len(), 10);
        assert_eq!(v["t"].as_array().unwrap().len(), 21);
        let idx = v["labels"].as_array().unwrap().iter().position(|l| l == "102").unwrap();
        assert!((v["values"][idx][0].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn post_selection_reports_both_events() {
        let v = parse(post_selection_json(1.0, 1.0, 0.0, 0.01, 0, 0, 200.0, 0.5));
        let events = v["events"].as_array().unwrap();
        assert_eq!(events.len(), 2);
        assert!((events[0]["t"].as_f64().unwrap() - 67.551).abs() < 1e-3);
        assert!((events[0]["probability"].as_f64().unwrap() - 4.0 / 9.0).abs() < 1e-6);
        assert_eq!(v["probability"].as_array().unwrap().len(), 401);
    }

    #[test]
    fn wei_norman_tracks_closed_form_and_stops_at_singularity() {
        let v = parse(wei_norman_json(0.0, 0.01, 50.0, 0.01));
        assert!(v["error"]
            .as_array()
            .unwrap()
            .iter()
            .all(|e| e.as_f64().unwrap() < 1e-6));
        assert!(v["stopped"].is_null());
        let v = parse(wei_norman_json(0.0, 0.01, 200.0, 0.01));
        assert!(v["stopped"].as_str().unwrap().contains("111"));
        assert!(v["t"].as_array().unwrap().last().unwrap().as_f64().unwrap() < 111.1);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(coefficient_curves_json(1.0, 1.0, 0.0, 0.01, 10.0, 0.0).is_err());
        assert!(coefficient_curves_json(1.0, 1.0, 0.0, 0.01, 1e9, 0.5).is_err());
        assert!(post_selection_json(1.0, 1.0, 0.0, 0.01, 5, 0, 10.0, 0.5).is_err());
        assert!(wei_norman_json(0.0, 0.0, 10.0, 0.1).is_err());
    }
}
