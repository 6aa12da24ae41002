//! Discovery and blind-spot measures, the discovery bound, and the trace CSV.
//!
//! Indexing: a run records `n + 1` snapshots `S_0..S_n`. The per-iteration
//! discovery is `ΔS_t = |S_t| − |S_{t−1}|` for `t = 1..n`, and the average
//! discovery `Δ_n S` is the mean of those `n` differences. The blind spot is
//! `B_t = Rel \ S_t`, and `e(t) = |S_t \ Rel|` counts seen groups that are not
//! relevant.

use std::io::{BufRead, Write};

use crate::dataset::GroupSet;
use crate::error::{Error, Result};

/// `|rel \ seen|`
pub fn blind_spot(seen: &GroupSet, rel: &GroupSet) -> usize {
    rel.difference(seen).count()
}

/// `|seen \ rel|`
pub fn error_e(seen: &GroupSet, rel: &GroupSet) -> usize {
    seen.difference(rel).count()
}

fn running_mean(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            sum += v;
            sum / (k + 1) as f64
        })
        .collect()
}

/// First differences of a seen-count series and their running means.
/// A decreasing step means the series is not a filtration and is rejected.
pub fn discovery_series(seen_counts: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let deltas: Vec<f64> = seen_counts.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(t) = deltas.iter().position(|d| *d < 0.0) {
        return Err(Error::Invariant(format!(
            "seen count decreased from {} to {} at iteration {}",
            seen_counts[t],
            seen_counts[t + 1],
            t + 1
        )));
    }
    let avg = running_mean(&deltas);
    Ok((deltas, avg))
}

/// `|ΔB_t| = ||B_{t−1}| − |B_t||` and its running mean.
pub fn blind_series(blind_counts: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let deltas: Vec<f64> = blind_counts.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let avg = running_mean(&deltas);
    (deltas, avg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub delta: f64,
    pub rec_len: usize,
    pub n: usize,
}

/// Discovery bound `ln(1/δ) |Rec|² / (2n)`: with probability at least `1 − δ`
/// the average discovery after `n` iterations does not exceed it.
pub fn azuma_bound(params: &BoundParams) -> Result<f64> {
    let BoundParams { delta, rec_len, n } = *params;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Argument(format!("delta {delta} outside (0, 1]")));
    }
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let r = rec_len as f64;
    Ok((1.0 / delta).ln() * r * r / (2.0 * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorollaryCheck {
    /// The inequality held at every prefix length.
    Holds,
    /// It failed at the given `n`.
    Violated { n: usize, lhs: f64, rhs: f64 },
    /// `e(t)` increased at the given iteration, so the premise does not hold
    /// and the inequality was not checked.
    PremiseViolated { t: usize },
}

/// Check `mean_{t≤n} |ΔB_t| ≤ Δ_n S + (e(0) − e(n)) / n` for every `n`,
/// given the seen, blind and error series over snapshots `0..=N`.
///
/// Both sides are compared as sums multiplied through by `n`, with absolute
/// slack `tol`; integer-valued series are exact at `tol = 0`.
pub fn corollary2_check(seen: &[f64], blind: &[f64], err: &[f64], tol: f64) -> Result<CorollaryCheck> {
    if seen.len() != blind.len() || seen.len() != err.len() {
        return Err(Error::Argument("series lengths differ".into()));
    }
    if let Some(t) = err.windows(2).position(|w| w[1] > w[0]) {
        return Ok(CorollaryCheck::PremiseViolated { t: t + 1 });
    }
    let (ds, _) = discovery_series(seen)?;
    let (db, _) = blind_series(blind);
    let (mut sum_s, mut sum_b) = (0.0, 0.0);
    for n in 1..seen.len() {
        sum_s += ds[n - 1];
        sum_b += db[n - 1];
        let rhs = sum_s + (err[0] - err[n]);
        if sum_b > rhs + tol {
            return Ok(CorollaryCheck::Violated {
                n,
                lhs: sum_b / n as f64,
                rhs: rhs / n as f64,
            });
        }
    }
    Ok(CorollaryCheck::Holds)
}

/// Per-user snapshot counts of one run; index `[user][t]` for `t = 0..=n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSeries {
    pub seen: Vec<Vec<usize>>,
    pub blind: Vec<Vec<usize>>,
    pub error: Vec<Vec<usize>>,
}

impl RunSeries {
    pub fn iterations(&self) -> usize {
        self.seen.first().map_or(0, |s| s.len().saturating_sub(1))
    }

    fn mean_at(series: &[Vec<usize>], t: usize) -> f64 {
        if series.is_empty() {
            return 0.0;
        }
        series.iter().map(|s| s[t] as f64).sum::<f64>() / series.len() as f64
    }

    /// User-averaged series at each snapshot.
    pub fn mean_series(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.iterations();
        let f = |s: &[Vec<usize>]| (0..=n).map(|t| Self::mean_at(s, t)).collect::<Vec<_>>();
        (f(&self.seen), f(&self.blind), f(&self.error))
    }

    /// Per-iteration trace rows for run `run`, bounds at each `δ` in `deltas`.
    pub fn trace_rows(&self, run: usize, rec_len: usize, deltas: &[f64]) -> Result<Vec<TraceRow>> {
        let (seen, blind, err) = self.mean_series();
        let (ds, avg_s) = discovery_series(&seen)?;
        let (db, avg_b) = blind_series(&blind);
        (1..seen.len())
            .map(|t| {
                let bounds = deltas
                    .iter()
                    .map(|&delta| azuma_bound(&BoundParams { delta, rec_len, n: t }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TraceRow {
                    run,
                    iteration: t,
                    seen_count: seen[t],
                    blind_spot: blind[t],
                    delta_s: ds[t - 1],
                    delta_b: db[t - 1],
                    avg_discovery: avg_s[t - 1],
                    avg_blind_decrease: avg_b[t - 1],
                    error_e: err[t],
                    bounds,
                })
            })
            .collect()
    }
}

/// Column order of the trace CSV, before the bound columns.
pub const TRACE_COLUMNS: [&str; 9] = [
    "run",
    "iteration",
    "seen_count",
    "blind_spot",
    "delta_s",
    "delta_b",
    "avg_discovery",
    "avg_blind_decrease",
    "error_e",
];

/// The two bound levels every trace carries a column for.
pub const DEFAULT_DELTAS: [f64; 2] = [0.05, 0.01];

/// `bound_d05` for 0.05, `bound_d01` for 0.01, `bound_d1` for 0.1.
pub fn bound_column(delta: f64) -> String {
    let s = format!("{delta}");
    let digits = match s.strip_prefix("0.") {
        Some(d) => d.to_string(),
        None if s.contains('.') => s.replace('.', "_"),
        None => format!("{s}_0"),
    };
    format!("bound_d{digits}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub run: usize,
    pub iteration: usize,
    pub seen_count: f64,
    pub blind_spot: f64,
    pub delta_s: f64,
    pub delta_b: f64,
    pub avg_discovery: f64,
    pub avg_blind_decrease: f64,
    pub error_e: f64,
    /// One entry per configured `δ`, in the order of [`TraceTable::deltas`].
    pub bounds: Vec<f64>,
}

impl TraceRow {
    pub fn metrics(&self) -> [f64; 7] {
        [
            self.seen_count,
            self.blind_spot,
            self.delta_s,
            self.delta_b,
            self.avg_discovery,
            self.avg_blind_decrease,
            self.error_e,
        ]
    }
}

/// Rows plus the bound levels they carry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceTable {
    pub deltas: Vec<f64>,
    pub rows: Vec<TraceRow>,
    /// Set when the producing simulation aborted part-way.
    pub truncated: Option<String>,
}

/// Bound column layout: `bound_d05` and `bound_d01` always, then any other
/// configured levels. Returns `(column name, index into the row's bounds)`.
fn bound_layout(deltas: &[f64]) -> Vec<(String, Option<usize>)> {
    let mut cols: Vec<(String, Option<usize>)> = DEFAULT_DELTAS
        .iter()
        .map(|&d| (bound_column(d), deltas.iter().position(|&x| x == d)))
        .collect();
    for (k, &d) in deltas.iter().enumerate() {
        if !DEFAULT_DELTAS.contains(&d) {
            cols.push((bound_column(d), Some(k)));
        }
    }
    cols
}

pub const TRUNCATION_MARKER: &str = "# truncated:";

impl TraceTable {
    pub fn header(&self) -> Vec<String> {
        TRACE_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain(bound_layout(&self.deltas).into_iter().map(|(c, _)| c))
            .collect()
    }

    /// One CSV row per (run, iteration). Bound columns for levels that were
    /// not configured are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let layout = bound_layout(&self.deltas);
        let io = |e: std::io::Error| Error::Data(e.to_string());
        {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(self.header()).map_err(csv_err)?;
            for r in &self.rows {
                let mut rec = vec![r.run.to_string(), r.iteration.to_string()];
                rec.extend(r.metrics().iter().map(|v| v.to_string()));
                rec.extend(
                    layout
                        .iter()
                        .map(|(_, k)| k.map(|k| r.bounds[k].to_string()).unwrap_or_default()),
                );
                csv.write_record(&rec).map_err(csv_err)?;
            }
            csv.flush().map_err(io)?;
        }
        if let Some(reason) = &self.truncated {
            writeln!(w, "{TRUNCATION_MARKER} {reason}").map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut body = String::new();
        let mut truncated = None;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::Data(e.to_string()))?;
            if let Some(reason) = line.strip_prefix(TRUNCATION_MARKER) {
                truncated = Some(reason.trim().to_string());
            } else if !line.starts_with('#') {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut csv = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = csv.headers().map_err(csv_err)?.iter().map(String::from).collect();
        for (k, expected) in TRACE_COLUMNS.iter().enumerate() {
            match header.get(k) {
                Some(col) if col == expected => {}
                Some(col) => {
                    return Err(Error::Schema(format!(
                        "column {} is `{col}`, expected `{expected}`",
                        k + 1
                    )))
                }
                None => return Err(Error::Schema(format!("missing column `{expected}`"))),
            }
        }
        let mut deltas = Vec::new();
        let mut bound_cols = Vec::new();
        for (k, col) in header.iter().enumerate().skip(TRACE_COLUMNS.len()) {
            let delta = parse_bound_column(col)
                .ok_or_else(|| Error::Schema(format!("unexpected column `{col}`")))?;
            bound_cols.push((k, delta));
        }
        let mut rows = Vec::new();
        let mut present = vec![false; bound_cols.len()];
        for (line, rec) in csv.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k)
                    .ok_or_else(|| Error::Schema(format!("row {}: missing `{}`", line + 2, header[k])))
            };
            let num = |k: usize| -> Result<f64> {
                field(k)?.parse().map_err(|_| {
                    Error::Schema(format!("row {}: bad value in `{}`", line + 2, header[k]))
                })
            };
            let int = |k: usize| -> Result<usize> {
                field(k)?.parse().map_err(|_| {
                    Error::Schema(format!("row {}: bad value in `{}`", line + 2, header[k]))
                })
            };
            let mut bounds = Vec::new();
            for (b, &(k, _)) in bound_cols.iter().enumerate() {
                if !field(k)?.is_empty() {
                    bounds.push(num(k)?);
                    present[b] = true;
                }
            }
            rows.push((
                TraceRow {
                    run: int(0)?,
                    iteration: int(1)?,
                    seen_count: num(2)?,
                    blind_spot: num(3)?,
                    delta_s: num(4)?,
                    delta_b: num(5)?,
                    avg_discovery: num(6)?,
                    avg_blind_decrease: num(7)?,
                    error_e: num(8)?,
                    bounds,
                },
                line,
            ));
        }
        // keep only bound levels that carry values
        for (b, &(_, delta)) in bound_cols.iter().enumerate() {
            if present[b] {
                deltas.push(delta);
            }
        }
        let rows = rows
            .into_iter()
            .map(|(r, line)| {
                if r.bounds.len() != deltas.len() {
                    Err(Error::Schema(format!("row {}: incomplete bound columns", line + 2)))
                } else {
                    Ok(r)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceTable {
            deltas,
            rows,
            truncated,
        })
    }
}

fn parse_bound_column(col: &str) -> Option<f64> {
    let digits = col.strip_prefix("bound_d")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit() || b == b'_') {
        return None;
    }
    let text = if digits.contains('_') {
        digits.replace('_', ".")
    } else {
        format!("0.{digits}")
    };
    text.parse().ok()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(e.to_string())
}
