//! Run configuration: a flat `key = value` text file, one key per line,
//! `#` starts a comment. Every key is optional; missing keys keep the
//! defaults, which reproduce the three-photon case study.
//!
//! | key              | value                                          | default               |
//! |------------------|------------------------------------------------|-----------------------|
//! | omega0           | real                                           | 1                     |
//! | omega            | real                                           | 1                     |
//! | lambda           | real                                           | 0                     |
//! | g                | real                                           | 0.01                  |
//! | total_quanta     | integer                                        | 3                     |
//! | initial_state    | `ket:amp, ket:amp, ...`, amp like `0.5-0.5i`    | `102:1/√2, 120:1/√2`  |
//! | t_max            | real ≥ 0                                       | 200                   |
//! | t_step           | real > 0                                       | 0.5                   |
//! | conditioning     | `mode:count` or `none`                         | none                  |
//! | output_format    | `csv`, `json` or `svg`                         | per command           |
//! | output_path      | path, `-` for stdout                           | stdout                |
//! | method           | `analytic` or `oracle`                         | analytic              |
//! | search_grid_step | real > 0                                       | 0.1                   |
//! | search_tol       | real > 0                                       | 1e-8                  |
//! | sweep_param      | `omega0`, `omega`, `lambda` or `g`             | unset                 |
//! | sweep_values     | comma-separated reals                          | unset                 |

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use noonsim::fock::FockState;
use noonsim::noon_search::DEFAULT_GRID_STEP;
use noonsim::{enumerate_basis, Conditioning, Method, StateVector, WaveguideParams};
use num_complex::Complex64;

use crate::error::{CliError, CliResult};

/// Initial amplitudes must have unit norm to this tolerance; they are then
/// renormalized exactly.
pub const INITIAL_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            _ => Err(format!("unknown format {s:?} (csv|json|svg)")),
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Svg => "svg",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Omega0,
    Omega,
    Lambda,
    G,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Omega0 => "omega0",
            Self::Omega => "omega",
            Self::Lambda => "lambda",
            Self::G => "g",
        }
    }

    pub fn apply(self, base: &WaveguideParams, value: f64) -> WaveguideParams {
        let mut p = *base;
        match self {
            Self::Omega0 => p.omega0 = value,
            Self::Omega => p.omega = value,
            Self::Lambda => p.lambda = value,
            Self::G => p.g = value,
        }
        p
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "omega0" => Ok(Self::Omega0),
            "omega" => Ok(Self::Omega),
            "lambda" => Ok(Self::Lambda),
            "g" => Ok(Self::G),
            _ => Err(format!("unknown parameter {s:?} (omega0|omega|lambda|g)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: WaveguideParams,
    pub total_quanta: u32,
    pub initial_state: Vec<(String, Complex64)>,
    pub t_max: f64,
    pub t_step: f64,
    pub conditioning: Option<Conditioning>,
    pub output_format: Option<Format>,
    pub output_path: Option<PathBuf>,
    pub method: Method,
    pub search_grid_step: f64,
    pub search_tol: f64,
    pub sweep_param: Option<SweepParam>,
    pub sweep_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            params: WaveguideParams::new(1.0, 1.0, 0.0, 0.01),
            total_quanta: 3,
            initial_state: vec![("102".into(), amp), ("120".into(), amp)],
            t_max: 200.0,
            t_step: 0.5,
            conditioning: None,
            output_format: None,
            output_path: None,
            method: Method::Analytic,
            search_grid_step: DEFAULT_GRID_STEP,
            search_tol: 1e-8,
            sweep_param: None,
            sweep_values: Vec::new(),
        }
    }
}

pub const KEYS: [&str; 16] = [
    "omega0",
    "omega",
    "lambda",
    "g",
    "total_quanta",
    "initial_state",
    "t_max",
    "t_step",
    "conditioning",
    "output_format",
    "output_path",
    "method",
    "search_grid_step",
    "search_tol",
    "sweep_param",
    "sweep_values",
];

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("not a number: {v:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("not finite: {v:?}"))
    }
}

/// `a`, `bi`, `a+bi`, `a-bi`; `i` alone means `1i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("not a complex number: {s:?}");
    let Some(body) = s.strip_suffix('i') else {
        return real(&s).map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (real(&body[..k]).map_err(|_| bad())?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => real(x).map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 && z.im.is_sign_positive() {
        z.re.to_string()
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn parse_terms(v: &str) -> Result<Vec<(String, Complex64)>, String> {
    let terms = v
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (ket, amp) = t
                .split_once(':')
                .ok_or_else(|| format!("expected ket:amplitude, got {t:?}"))?;
            Ok((ket.trim().to_string(), parse_complex(amp)?))
        })
        .collect::<Result<Vec<_>, String>>()?;
    if terms.is_empty() {
        return Err("no terms".into());
    }
    Ok(terms)
}

fn parse_conditioning(v: &str) -> Result<Option<Conditioning>, String> {
    if v == "none" {
        return Ok(None);
    }
    let (m, c) = v
        .split_once(':')
        .ok_or_else(|| format!("expected mode:count or none, got {v:?}"))?;
    let mode = m.trim().parse().map_err(|_| format!("bad mode {m:?}"))?;
    let count = c.trim().parse().map_err(|_| format!("bad count {c:?}"))?;
    Ok(Some(Conditioning::new(mode, count)))
}

fn positive(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

impl RunConfig {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "omega0" => self.params.omega0 = real(v)?,
            "omega" => self.params.omega = real(v)?,
            "lambda" => self.params.lambda = real(v)?,
            "g" => self.params.g = real(v)?,
            "total_quanta" => self.total_quanta = v.parse().map_err(|_| format!("not a photon number: {v:?}"))?,
            "initial_state" => self.initial_state = parse_terms(v)?,
            "t_max" => {
                let x = real(v)?;
                if x < 0.0 {
                    return Err(format!("must be non-negative, got {v}"));
                }
                self.t_max = x;
            }
            "t_step" => self.t_step = positive(v)?,
            "conditioning" => self.conditioning = parse_conditioning(v)?,
            "output_format" => self.output_format = Some(v.parse()?),
            "output_path" => self.output_path = (v != "-").then(|| PathBuf::from(v)),
            "method" => self.method = v.parse().map_err(|e: noonsim::Error| e.to_string())?,
            "search_grid_step" => self.search_grid_step = positive(v)?,
            "search_tol" => self.search_tol = positive(v)?,
            "sweep_param" => self.sweep_param = Some(v.parse()?),
            "sweep_values" => {
                self.sweep_values = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(real)
                    .collect::<Result<_, _>>()?
            }
            _ => return Err(format!("unknown key (expected one of {})", KEYS.join(", "))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |field: &str, msg: String| CliError::Config {
                line: Some(line),
                field: field.to_string(),
                msg,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(content, "expected key = value".into()))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(err(key, "duplicate key".into()));
            }
            seen.push(key);
            cfg.set(key, value).map_err(|m| err(key, m))?;
        }
        Ok(cfg)
    }

    /// Text form that [`RunConfig::parse`] reads back to an equal value.
    pub fn to_config_string(&self) -> String {
        let p = &self.params;
        let mut s = String::from("# noonsim run configuration\n");
        let _ = writeln!(s, "omega0 = {}", p.omega0);
        let _ = writeln!(s, "omega = {}", p.omega);
        let _ = writeln!(s, "lambda = {}", p.lambda);
        let _ = writeln!(s, "g = {}", p.g);
        let _ = writeln!(s, "total_quanta = {}", self.total_quanta);
        let terms: Vec<String> = self
            .initial_state
            .iter()
            .map(|(k, a)| format!("{k}:{}", format_complex(*a)))
            .collect();
        let _ = writeln!(s, "initial_state = {}", terms.join(", "));
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "t_step = {}", self.t_step);
        match self.conditioning {
            Some(c) => {
                let _ = writeln!(s, "conditioning = {}:{}", c.mode, c.count);
            }
            None => s.push_str("conditioning = none\n"),
        }
        if let Some(f) = self.output_format {
            let _ = writeln!(s, "output_format = {f}");
        }
        if let Some(path) = &self.output_path {
            let _ = writeln!(s, "output_path = {}", path.display());
        }
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "search_grid_step = {}", self.search_grid_step);
        let _ = writeln!(s, "search_tol = {}", self.search_tol);
        if let Some(sp) = self.sweep_param {
            let _ = writeln!(s, "sweep_param = {}", sp.name());
        }
        if !self.sweep_values.is_empty() {
            let vals: Vec<String> = self.sweep_values.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "sweep_values = {}", vals.join(", "));
        }
        s
    }

    /// The normalized three-mode initial state.
    pub fn initial_vector(&self) -> CliResult<StateVector> {
        let field = |m: String| CliError::field("initial_state", m);
        let basis = enumerate_basis(3, self.total_quanta).map_err(|e| field(e.to_string()))?;
        let mut terms = Vec::with_capacity(self.initial_state.len());
        for (label, amp) in &self.initial_state {
            let ket = FockState::parse_label(label, 3).map_err(|e| field(e.to_string()))?;
            if ket.total() != self.total_quanta {
                return Err(field(format!(
                    "{label} holds {} photons, total_quanta is {}",
                    ket.total(),
                    self.total_quanta
                )));
            }
            terms.push((ket, *amp));
        }
        let psi = StateVector::from_terms(basis, &terms).map_err(|e| field(e.to_string()))?;
        let norm_sqr = psi.norm_sqr();
        if (norm_sqr.sqrt() - 1.0).abs() > INITIAL_NORM_TOL {
            return Err(field(format!("amplitudes have norm {}, expected 1", norm_sqr.sqrt())));
        }
        psi.normalized().ok_or_else(|| field("zero state".into()))
    }

    /// `0, t_step, 2 t_step, ...` up to `t_max`, which is always included.
    pub fn time_grid(&self) -> Vec<f64> {
        let n = (self.t_max / self.t_step + 1e-9).floor() as usize;
        let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * self.t_step).collect();
        if self.t_max - grid[n] > 1e-12 {
            grid.push(self.t_max);
        }
        grid
    }

    pub fn require_conditioning(&self) -> CliResult<Conditioning> {
        self.conditioning
            .ok_or_else(|| CliError::Usage("this command needs a conditioning (--conditioning mode:count)".into()))
    }
}
