//! Cross-run aggregation of trace files.
//!
//! Every (trace file, run) pair is one unit. For each iteration the report
//! gives the mean over units of each metric and the half-width of its 95%
//! confidence interval, `t(0.975, k-1) * sd / sqrt(k)`.

use std::fmt::Write as _;
use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::metrics::{bound_column, TraceTable};

/// Metric columns of a trace, in file order.
pub const METRICS: [&str; 7] = [
    "seen_count",
    "blind_spot",
    "delta_s",
    "delta_b",
    "avg_discovery",
    "avg_blind_decrease",
    "error_e",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub iteration: usize,
    pub units: usize,
    pub mean: [f64; 7],
    pub ci95: [f64; 7],
    /// Bound value per level, in the order of [`Aggregate::deltas`].
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub delta: f64,
    /// (unit, iteration) pairs in the final quarter where `avg_discovery`
    /// exceeds the bound.
    pub violations: usize,
    pub checked: usize,
}

impl BoundViolation {
    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violations as f64 / self.checked as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub deltas: Vec<f64>,
    pub rows: Vec<AggregateRow>,
    pub units: usize,
    pub truncated_inputs: usize,
    /// First iteration counted as the final quarter.
    pub final_quarter_start: usize,
    pub violations: Vec<BoundViolation>,
}

/// Half-width of the two-sided 95% interval for the mean of `xs`.
pub fn ci95_half_width(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    if var == 0.0 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    t * (var / k as f64).sqrt()
}

fn check_schema(tables: &[(String, TraceTable)]) -> Result<()> {
    let Some((first_name, first)) = tables.first() else {
        return Err(Error::Argument("report needs at least one trace".into()));
    };
    let expected = first.header();
    for (name, t) in &tables[1..] {
        let header = t.header();
        for k in 0..expected.len().max(header.len()) {
            match (expected.get(k), header.get(k)) {
                (Some(a), Some(b)) if a == b => {}
                (Some(a), Some(b)) => {
                    return Err(Error::Schema(format!(
                        "{name}: column `{b}` where {first_name} has `{a}`"
                    )))
                }
                (Some(a), None) => return Err(Error::Schema(format!("{name}: missing column `{a}`"))),
                (None, Some(b)) => {
                    return Err(Error::Schema(format!("{name}: unexpected column `{b}`")))
                }
                (None, None) => unreachable!(),
            }
        }
        if t.deltas != first.deltas {
            return Err(Error::Schema(format!(
                "{name}: bound columns filled for {:?}, {first_name} for {:?}",
                t.deltas.iter().map(|d| bound_column(*d)).collect::<Vec<_>>(),
                first.deltas.iter().map(|d| bound_column(*d)).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

/// Aggregate named traces. All must share one schema.
pub fn aggregate(tables: &[(String, TraceTable)]) -> Result<Aggregate> {
    check_schema(tables)?;
    let deltas = tables[0].1.deltas.clone();
    let mut units: Vec<Vec<&crate::metrics::TraceRow>> = Vec::new();
    for (_, t) in tables {
        let mut runs: Vec<usize> = t.rows.iter().map(|r| r.run).collect();
        runs.sort_unstable();
        runs.dedup();
        for run in runs {
            let mut rows: Vec<_> = t.rows.iter().filter(|r| r.run == run).collect();
            rows.sort_by_key(|r| r.iteration);
            units.push(rows);
        }
    }
    let max_iter = units.iter().flatten().map(|r| r.iteration).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(max_iter);
    for it in 1..=max_iter {
        let at: Vec<_> = units
            .iter()
            .filter_map(|u| u.iter().find(|r| r.iteration == it))
            .collect();
        if at.is_empty() {
            continue;
        }
        let mut mean = [0.0; 7];
        let mut ci95 = [0.0; 7];
        for m in 0..7 {
            let xs: Vec<f64> = at.iter().map(|r| r.metrics()[m]).collect();
            mean[m] = xs.iter().sum::<f64>() / xs.len() as f64;
            ci95[m] = ci95_half_width(&xs);
        }
        rows.push(AggregateRow {
            iteration: it,
            units: at.len(),
            mean,
            ci95,
            bounds: at[0].bounds.clone(),
        });
    }

    let final_quarter_start = max_iter - max_iter.div_ceil(4) + 1;
    let violations = deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let tail = units.iter().flatten().filter(|r| r.iteration >= final_quarter_start);
            let (mut violations, mut checked) = (0, 0);
            for r in tail {
                checked += 1;
                if r.avg_discovery > r.bounds[k] {
                    violations += 1;
                }
            }
            BoundViolation {
                delta,
                violations,
                checked,
            }
        })
        .collect();
    Ok(Aggregate {
        deltas,
        units: units.len(),
        truncated_inputs: tables.iter().filter(|(_, t)| t.truncated.is_some()).count(),
        rows,
        final_quarter_start,
        violations,
    })
}

impl Aggregate {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["iteration".to_string(), "units".to_string()];
        for m in METRICS {
            h.push(format!("{m}_mean"));
            h.push(format!("{m}_ci95"));
        }
        h.extend(self.deltas.iter().map(|d| bound_column(*d)));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let err = |e: csv::Error| Error::Data(e.to_string());
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(self.header()).map_err(err)?;
        for r in &self.rows {
            let mut rec = vec![r.iteration.to_string(), r.units.to_string()];
            for m in 0..7 {
                rec.push(r.mean[m].to_string());
                rec.push(r.ci95[m].to_string());
            }
            rec.extend(r.bounds.iter().map(|b| b.to_string()));
            csv.write_record(&rec).map_err(err)?;
        }
        csv.flush().map_err(|e| Error::Data(e.to_string()))
    }

    pub fn summary(&self, inputs: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "traces: {}", inputs.len());
        for name in inputs {
            let _ = writeln!(s, "  {name}");
        }
        let _ = writeln!(s, "units (trace, run): {}", self.units);
        if self.truncated_inputs > 0 {
            let _ = writeln!(s, "truncated traces: {}", self.truncated_inputs);
        }
        let _ = writeln!(s, "iterations: {}", self.rows.len());
        if let Some(last) = self.rows.last() {
            let _ = writeln!(s, "final iteration {}:", last.iteration);
            for (m, name) in METRICS.iter().enumerate() {
                let _ = writeln!(s, "  {name:<20} {:.6} +/- {:.6}", last.mean[m], last.ci95[m]);
            }
        }
        let _ = writeln!(
            s,
            "bound violations (avg_discovery > bound), iterations >= {}:",
            self.final_quarter_start
        );
        for v in &self.violations {
            let _ = writeln!(
                s,
                "  {:<12} {}/{} = {:.4}",
                bound_column(v.delta),
                v.violations,
                v.checked,
                v.fraction()
            );
        }
        s
    }
}
