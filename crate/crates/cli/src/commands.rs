use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use noonsim::fock::FockState;
use noonsim::linalg::max_abs_diff;
use noonsim::{
    enumerate_basis, find_noon_times_with, integrate_wn, sweep, verify_similarity, Evolver, FockBasis, Method,
    NoonEvent, SearchSettings,
};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot::render_svg;
use crate::table::{json_bytes, Table};

pub const FACTORIZATION_TOL: f64 = 1e-9;
pub const SIMILARITY_TOL: f64 = 1e-12;
pub const WN_CLOSED_FORM_TOL: f64 = 1e-6;
pub const WN_SYMMETRY_TOL: f64 = 1e-8;
pub const WN_RATIO_RANGE: (f64, f64) = (12.0, 20.0);

pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|()| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Kets with `n1 <= n2` first, then the rest, each group ascending.
/// For three photons this puts the six distinct coefficients up front.
pub fn coefficient_order(basis: &FockBasis) -> Vec<FockState> {
    let mut kets = basis.states().to_vec();
    kets.sort_by_key(|k| (k.get(1) > k.get(2), k.occupations().to_vec()));
    kets
}

fn evolver_for(cfg: &RunConfig) -> CliResult<(Evolver, noonsim::StateVector)> {
    let psi = cfg.initial_vector()?;
    cfg.params.warn_outside_rwa();
    let evolver = Evolver::new(&cfg.params, psi.basis())?;
    Ok((evolver, psi))
}

fn encode_table(table: &Table, format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
        Format::Svg => Ok(render_svg(table).into_bytes()),
    }
}

/// `|C_ket|(t)` on the configured time grid.
pub fn coefficient_table(cfg: &RunConfig) -> CliResult<Table> {
    let (evolver, psi) = evolver_for(cfg)?;
    let order = coefficient_order(psi.basis());
    let mut table = Table::new(
        std::iter::once("t".to_string())
            .chain(order.iter().map(|k| format!("|C_{}|", k.label())))
            .collect(),
    );
    for t in cfg.time_grid() {
        let out = evolver.evolve(&psi, t, cfg.method)?;
        table.push(
            std::iter::once(t)
                .chain(order.iter().map(|k| out.amplitude(k).norm()))
                .collect(),
        );
    }
    Ok(table)
}

pub fn coeffs(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    encode_table(&coefficient_table(cfg)?, cfg.output_format.unwrap_or(Format::Csv))
}

/// Complex amplitudes and norm; with a conditioning, also the outcome
/// probability and NOON fidelities of the collapsed state.
pub fn evolution_table(cfg: &RunConfig) -> CliResult<Table> {
    let (evolver, psi) = evolver_for(cfg)?;
    let kets = psi.basis().states().to_vec();
    let mut columns = vec!["t".to_string()];
    for k in &kets {
        columns.push(format!("Re C_{}", k.label()));
        columns.push(format!("Im C_{}", k.label()));
    }
    columns.push("norm".into());
    let grid = cfg.time_grid();
    let collapses = match cfg.conditioning {
        Some(c) => {
            columns.extend(["probability", "fidelity_fixed", "fidelity"].map(String::from));
            Some(noonsim::measurement::collapse_series_with(
                &evolver, &psi, c.mode, c.count, &grid, cfg.method,
            )?)
        }
        None => None,
    };
    let mut table = Table::new(columns);
    for (i, &t) in grid.iter().enumerate() {
        let out = evolver.evolve(&psi, t, cfg.method)?;
        let mut row = vec![t];
        for k in &kets {
            let c = out.amplitude(k);
            row.extend([c.re, c.im]);
        }
        row.push(out.norm_sqr().sqrt());
        if let Some(rows) = &collapses {
            let r = &rows[i];
            let (fixed, opt) = r.fidelity.map_or((0.0, 0.0), |f| (f.fixed_phase, f.phase_optimized));
            row.extend([r.collapse.outcome_probability, fixed, opt]);
        }
        table.push(row);
    }
    Ok(table)
}

pub fn evolve(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    encode_table(&evolution_table(cfg)?, cfg.output_format.unwrap_or(Format::Csv))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub probability: f64,
    pub fidelity: f64,
    pub suppressed_magnitude: f64,
}

impl From<&NoonEvent> for EventRecord {
    fn from(e: &NoonEvent) -> Self {
        Self {
            t: e.t,
            probability: e.success_probability,
            fidelity: e.phase_optimized_fidelity,
            suppressed_magnitude: e.suppressed_coefficient_magnitude,
        }
    }
}

fn settings(cfg: &RunConfig) -> SearchSettings {
    SearchSettings::new(cfg.t_max, cfg.search_grid_step, cfg.search_tol).with_method(cfg.method)
}

pub fn search_events(cfg: &RunConfig) -> CliResult<Vec<EventRecord>> {
    let cond = cfg.require_conditioning()?;
    let (evolver, psi) = evolver_for(cfg)?;
    let events = find_noon_times_with(&evolver, &psi, cond, &settings(cfg))?;
    Ok(events.iter().map(EventRecord::from).collect())
}

pub fn search(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let cond = cfg.require_conditioning()?;
    let format = cfg.output_format.unwrap_or(Format::Json);
    if format == Format::Svg {
        return Err(CliError::Usage("search writes csv or json".into()));
    }
    let events = search_events(cfg)?;
    log::info!(
        "{} NOON events for conditioning {}:{}",
        events.len(),
        cond.mode,
        cond.count
    );
    match format {
        Format::Json => json_bytes(&events),
        _ => {
            let mut t = Table::new(
                ["t", "probability", "fidelity", "suppressed_magnitude"]
                    .map(String::from)
                    .to_vec(),
            );
            for e in &events {
                t.push(vec![e.t, e.probability, e.fidelity, e.suppressed_magnitude]);
            }
            t.to_csv()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub omega0: f64,
    pub omega: f64,
    pub lambda: f64,
    pub g: f64,
    pub events: Vec<EventRecord>,
    pub error: Option<String>,
}

pub fn sweep_records(cfg: &RunConfig) -> CliResult<Vec<SweepRecord>> {
    let cond = cfg.require_conditioning()?;
    let param = cfg
        .sweep_param
        .ok_or_else(|| CliError::Usage("sweep needs --sweep-param".into()))?;
    if cfg.sweep_values.is_empty() {
        return Err(CliError::Usage("sweep needs --sweep-values".into()));
    }
    let psi = cfg.initial_vector()?;
    let grid: Vec<_> = cfg.sweep_values.iter().map(|&v| param.apply(&cfg.params, v)).collect();
    let rows = sweep(&grid, &psi, cond, &settings(cfg))?;
    Ok(rows
        .into_iter()
        .map(|r| {
            let (events, error) = match r.events {
                Ok(ev) => (ev.iter().map(EventRecord::from).collect(), None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            SweepRecord {
                omega0: r.params.omega0,
                omega: r.params.omega,
                lambda: r.params.lambda,
                g: r.params.g,
                events,
                error,
            }
        })
        .collect())
}

pub fn sweep_cmd(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let format = cfg.output_format.unwrap_or(Format::Json);
    let records = sweep_records(cfg)?;
    match format {
        Format::Json => json_bytes(&records),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let enc = crate::table::encode_err;
            w.write_record([
                "omega0",
                "omega",
                "lambda",
                "g",
                "event",
                "t",
                "probability",
                "fidelity",
                "suppressed_magnitude",
                "error",
            ])
            .map_err(enc)?;
            let f = |x: f64| crate::table::format_sig(x, crate::table::CSV_DIGITS);
            for r in &records {
                let head = [f(r.omega0), f(r.omega), f(r.lambda), f(r.g)];
                if r.events.is_empty() {
                    let tail = [
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        r.error.clone().unwrap_or_default(),
                    ];
                    w.write_record(head.iter().chain(&tail)).map_err(enc)?;
                }
                for (k, e) in r.events.iter().enumerate() {
                    let tail = [
                        k.to_string(),
                        f(e.t),
                        f(e.probability),
                        f(e.fidelity),
                        f(e.suppressed_magnitude),
                        String::new(),
                    ];
                    w.write_record(head.iter().chain(&tail)).map_err(enc)?;
                }
            }
            w.into_inner().map_err(|e| crate::table::encode_err(e.into_error()))
        }
        Format::Svg => Err(CliError::Usage("sweep writes csv or json".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Factorization,
    WeiNorman,
    Similarity,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub passed: bool,
    pub bound: String,
}

fn check(name: &str, value: f64, tol: f64) -> CheckLine {
    CheckLine {
        name: name.into(),
        value,
        passed: value <= tol,
        bound: format!("<= {tol:e}"),
    }
}

/// Analytic against oracle propagator at 50 times in `(0, t_max]`.
fn factorization_checks(cfg: &RunConfig) -> CliResult<Vec<CheckLine>> {
    let basis = enumerate_basis(3, cfg.total_quanta)?;
    let evolver = Evolver::new(&cfg.params, &basis)?;
    let t_max = if cfg.t_max > 0.0 { cfg.t_max } else { 200.0 };
    let mut worst = 0.0f64;
    for k in 1..=50 {
        let t = t_max * k as f64 / 50.0;
        let a = evolver.propagator(t, Method::Analytic)?;
        let o = evolver.propagator(t, Method::Oracle)?;
        worst = worst.max(max_abs_diff(&a.matrix, &o.matrix));
    }
    Ok(vec![check(
        "factorization: analytic vs oracle, max entry",
        worst,
        FACTORIZATION_TOL,
    )])
}

/// RK4 run to `t_end = min(50, 0.45 π / w)`, short of the first zero of
/// `|e^{i f2}|`, with steps scaled to `t_end`.
fn wei_norman_checks(cfg: &RunConfig) -> CliResult<Vec<CheckLine>> {
    let (omega2, g) = (cfg.params.omega2(), cfg.params.g);
    let w = (2.0 * g * g + omega2 * omega2).sqrt();
    if w == 0.0 {
        return Err(noonsim::Error::DegenerateCoupling.into());
    }
    let t_end = 50f64.min(0.45 * PI / w);
    let exact = noonsim::disentangle_coeffs_for(omega2, g, t_end)?;
    let end_error = |step: f64| -> CliResult<(f64, f64)> {
        let traj = integrate_wn(omega2, g, t_end, step)?;
        let (_, [f1, f2, _]) = traj.last();
        Ok(((f1 - exact.f1).norm().max((f2 - exact.f2).norm()), traj.max_f3_f1_gap()))
    };
    let (err, gap) = end_error(t_end / 5000.0)?;
    let ratio = end_error(t_end / 80.0)?.0 / end_error(t_end / 160.0)?.0;
    let (lo, hi) = WN_RATIO_RANGE;
    Ok(vec![
        check(
            &format!("wei-norman: |f - closed form| at t = {t_end}"),
            err,
            WN_CLOSED_FORM_TOL,
        ),
        check("wei-norman: max |f3 - f1|", gap, WN_SYMMETRY_TOL),
        CheckLine {
            name: "wei-norman: step-halving error ratio".into(),
            value: ratio,
            passed: (lo..=hi).contains(&ratio),
            bound: format!("in [{lo}, {hi}]"),
        },
    ])
}

fn similarity_checks(cfg: &RunConfig) -> CliResult<Vec<CheckLine>> {
    let mut worst = 0.0f64;
    for n in 0..=cfg.total_quanta.max(4) {
        worst = worst.max(verify_similarity(&cfg.params, n)?);
    }
    Ok(vec![check(
        "similarity: U_T H U_T^dagger vs reduced H",
        worst,
        SIMILARITY_TOL,
    )])
}

pub fn verify_checks(cfg: &RunConfig, suite: Suite) -> CliResult<Vec<CheckLine>> {
    let mut lines = Vec::new();
    if matches!(suite, Suite::Factorization | Suite::All) {
        lines.extend(factorization_checks(cfg)?);
    }
    if matches!(suite, Suite::WeiNorman | Suite::All) {
        lines.extend(wei_norman_checks(cfg)?);
    }
    if matches!(suite, Suite::Similarity | Suite::All) {
        lines.extend(similarity_checks(cfg)?);
    }
    Ok(lines)
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> CliResult<()> {
    let lines = verify_checks(cfg, suite)?;
    let mut report = String::new();
    for l in &lines {
        report.push_str(&format!(
            "{} {}: {} ({})\n",
            if l.passed { "PASS" } else { "FAIL" },
            l.name,
            crate::table::format_sig(l.value, 4),
            l.bound
        ));
    }
    write_output(cfg.output_path.as_deref(), report.as_bytes())?;
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct BasisRecord {
    index: usize,
    label: String,
    occupations: Vec<u32>,
}

pub fn basis(cfg: &RunConfig, modes: usize) -> CliResult<Vec<u8>> {
    let basis = enumerate_basis(modes, cfg.total_quanta)?;
    match cfg.output_format.unwrap_or(Format::Csv) {
        Format::Json => json_bytes(
            &basis
                .states()
                .iter()
                .enumerate()
                .map(|(index, s)| BasisRecord {
                    index,
                    label: s.label(),
                    occupations: s.occupations().to_vec(),
                })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => {
            let enc = crate::table::encode_err;
            let mut w = csv::Writer::from_writer(Vec::new());
            let header: Vec<String> = ["index".to_string(), "label".to_string()]
                .into_iter()
                .chain((0..modes).map(|m| format!("n{m}")))
                .collect();
            w.write_record(&header).map_err(enc)?;
            for (k, s) in basis.states().iter().enumerate() {
                let rec: Vec<String> = [k.to_string(), s.label()]
                    .into_iter()
                    .chain(s.occupations().iter().map(u32::to_string))
                    .collect();
                w.write_record(&rec).map_err(enc)?;
            }
            w.into_inner().map_err(|e| crate::table::encode_err(e.into_error()))
        }
        Format::Svg => Err(CliError::Usage("basis writes csv or json".into())),
    }
}

pub fn plot(input: &Path, columns: &[String]) -> CliResult<Vec<u8>> {
    let bytes = std::fs::read(input).map_err(|e| CliError::io(input, e))?;
    let table = crate::plot::read_csv(&bytes, columns)?;
    Ok(render_svg(&table).into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_columns_follow_the_distinct_kets() {
        let basis = enumerate_basis(3, 3).unwrap();
        let labels: Vec<String> = coefficient_order(&basis).iter().map(FockState::label).collect();
        assert_eq!(
            labels,
            ["003", "012", "102", "111", "201", "300", "021", "030", "120", "210"]
        );
    }

    #[test]
    fn coefficient_rows_at_key_times() {
        let cfg = RunConfig::default();
        let t = coefficient_table(&cfg).unwrap();
        assert_eq!(t.rows.len(), 401);
        let c102 = t.columns.iter().position(|c| c == "|C_102|").unwrap();
        assert!((t.rows[0][c102] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let mut at = cfg.clone();
        at.t_max = 50.0 * 2f64.sqrt() * (1.0 / 3f64.sqrt()).acos();
        at.t_step = at.t_max;
        let t = coefficient_table(&at).unwrap();
        let c012 = t.columns.iter().position(|c| c == "|C_012|").unwrap();
        assert!(t.rows[1][c012] <= 1e-6);
    }

    #[test]
    fn conditioned_evolution_columns() {
        let cfg = RunConfig {
            t_max: 1.0,
            conditioning: Some(noonsim::Conditioning::new(0, 0)),
            ..RunConfig::default()
        };
        let t = evolution_table(&cfg).unwrap();
        assert_eq!(t.columns.len(), 1 + 20 + 1 + 3);
        let p = t.columns.iter().position(|c| c == "probability").unwrap();
        assert!(t.rows[0][p].abs() < 1e-12);
        assert!(t.rows[2][p] > 0.0);
    }

    #[test]
    fn verify_all_passes_for_defaults() {
        let lines = verify_checks(&RunConfig::default(), Suite::All).unwrap();
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().all(|l| l.passed), "{lines:?}");
    }

    #[test]
    fn wei_norman_suite_on_detuned_guides() {
        let mut cfg = RunConfig::default();
        cfg.params.omega = 1.05;
        let lines = verify_checks(&cfg, Suite::WeiNorman).unwrap();
        assert!(lines.iter().all(|l| l.passed), "{lines:?}");
    }
}
