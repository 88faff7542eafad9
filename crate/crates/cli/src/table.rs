//! Numeric tables and their CSV / JSON encodings.

use serde::Serialize;

use crate::error::CliResult;

/// Significant digits written to CSV.
pub const CSV_DIGITS: usize = 9;

/// `%g`-style: fixed notation for exponents in `[-5, digits)`, scientific
/// otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(encode_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_sig(x, CSV_DIGITS)))
                .map_err(encode_err)?;
        }
        w.into_inner().map_err(|e| encode_err(e.into_error()))
    }

    /// `{"columns": [...], "rows": [[...], ...]}` at full precision.
    pub fn to_json(&self) -> CliResult<Vec<u8>> {
        json_bytes(self)
    }
}

pub(crate) fn encode_err(e: impl std::fmt::Display) -> crate::error::CliError {
    crate::error::CliError::Io {
        path: "<output>".into(),
        msg: e.to_string(),
    }
}

pub fn json_bytes(value: &impl Serialize) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(encode_err)?;
    out.push(b'\n');
    Ok(out)
}
