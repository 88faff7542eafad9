//! Self-contained SVG 1.1 line charts.
//!
//! The first column is the x axis. Columns that agree everywhere to within
//! [`MERGE_TOL`] are drawn once with a joined legend entry, so symmetric
//! coefficient pairs do not hide each other.

use std::fmt::Write as _;

use crate::error::{CliError, CliResult};
use crate::table::Table;

pub const MERGE_TOL: f64 = 1e-9;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TARGET_TICKS: f64 = 6.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Read a CSV file into a table restricted to `columns` (all but the first
/// when empty), keeping the first column as x.
pub fn read_csv(bytes: &[u8], columns: &[String]) -> CliResult<Table> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Usage(format!("unreadable CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(CliError::Usage("CSV has no columns".into()));
    }
    let wanted: Vec<usize> = if columns.is_empty() {
        (1..header.len()).collect()
    } else {
        columns
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| CliError::Usage(format!("no column named {c:?}")))
            })
            .collect::<CliResult<_>>()?
    };
    let mut table = Table::new(
        std::iter::once(0)
            .chain(wanted.iter().copied())
            .map(|k| header[k].clone())
            .collect(),
    );
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(format!("CSV row {}: {e}", r + 1)))?;
        let row = std::iter::once(0)
            .chain(wanted.iter().copied())
            .map(|k| {
                let cell = record.get(k).unwrap_or("");
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "CSV row {}, column {:?}: not a number: {cell:?}",
                            r + 1,
                            header[k]
                        ))
                    })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        table.push(row);
    }
    Ok(table)
}

struct Series {
    label: String,
    ys: Vec<f64>,
}

fn merge_series(table: &Table) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for k in 1..table.columns.len() {
        let ys = table.column(k);
        let twin = out
            .iter_mut()
            .find(|s| s.ys.iter().zip(&ys).all(|(a, b)| (a - b).abs() <= MERGE_TOL));
        match twin {
            Some(s) => {
                s.label.push_str(" = ");
                s.label.push_str(&table.columns[k]);
            }
            None => out.push(Series {
                label: table.columns[k].clone(),
                ys,
            }),
        }
    }
    out
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !min.is_finite() {
            (min, max) = (0.0, 1.0);
        }
        if max - min < 1e-300 {
            let pad = if min == 0.0 { 1.0 } else { 0.1 * min.abs() };
            min -= pad;
            max += pad;
        }
        let raw = (max - min) / TARGET_TICKS;
        let mag = 10f64.powf(raw.log10().floor());
        let step = mag
            * match raw / mag {
                r if r <= 1.0 => 1.0,
                r if r <= 2.0 => 2.0,
                r if r <= 5.0 => 5.0,
                _ => 10.0,
            };
        Self {
            lo: (min / step).floor() * step,
            hi: (max / step).ceil() * step,
            step,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=n).map(|k| self.lo + k as f64 * self.step).collect()
    }

    fn label(&self, v: f64) -> String {
        let decimals = (-self.step.log10().floor()).max(0.0) as usize;
        let s = format!("{v:.decimals$}");
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            "0".into()
        } else {
            s
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Render a chart of every non-x column in `table`. Identical input gives
/// identical bytes.
pub fn render_svg(table: &Table) -> String {
    let xs = table.column(0);
    let series = if xs.is_empty() { Vec::new() } else { merge_series(table) };
    let x_axis = Axis::fit(xs.iter().copied());
    let y_axis = Axis::fit(series.iter().flat_map(|s| s.ys.iter().copied()));

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_axis.lo) / (x_axis.hi - x_axis.lo) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y_axis.lo) / (y_axis.hi - y_axis.lo) * plot_h;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    s.push_str("<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n");
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(s, "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\"/>");
    let _ = writeln!(s, "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\"/>");
    for t in x_axis.ticks() {
        let x = px(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\"/>",
            y0 + 5.0
        );
    }
    for t in y_axis.ticks() {
        let y = py(t);
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\"/>",
            x0 - 5.0
        );
    }
    s.push_str("</g>\n<g id=\"tick-labels\" fill=\"black\">\n");
    for t in x_axis.ticks() {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            px(t),
            y0 + 18.0,
            x_axis.label(t)
        );
    }
    for t in y_axis.ticks() {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            py(t) + 4.0,
            y_axis.label(t)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&table.columns[0])
    );
    s.push_str("</g>\n");

    if !series.is_empty() {
        s.push_str("<g id=\"series\" fill=\"none\" stroke-width=\"1.5\">\n");
        for (k, ser) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            if xs.len() == 1 {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" stroke=\"none\"/>",
                    px(xs[0]),
                    py(ser.ys[0])
                );
            } else {
                let pts: Vec<String> = xs
                    .iter()
                    .zip(&ser.ys)
                    .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                    .collect();
                let _ = writeln!(s, "<polyline stroke=\"{color}\" points=\"{}\"/>", pts.join(" "));
            }
        }
        s.push_str("</g>\n<g id=\"legend\">\n");
        for (k, ser) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let y = TOP + 10.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                s,
                "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"4\" fill=\"{color}\"/>",
                y - 4.0
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"black\">{}</text>",
                lx + 18.0,
                y + 2.0,
                escape(&ser.label)
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
