use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Experiment, HarnessError, Outcome};
use crate::problems::SampleCheck;
use crate::trace::Trace;

/// Constants a run actually used, after defaults and overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConstants {
    pub optimal_value: Option<f64>,
    pub homogeneity_floor: Option<f64>,
    pub relative_accuracy: Option<f64>,
    /// `R` of the accelerated method.
    pub radius: Option<f64>,
    /// `eps` of the accelerated method.
    pub accuracy: Option<f64>,
    pub complexity_estimate: Option<u64>,
    pub sharp_modulus: Option<f64>,
    pub weak_quasiconvexity: Option<f64>,
    /// `M` of the normalized method, or the Lipschitz constant for Polyak.
    pub step_constant: Option<f64>,
    pub inexactness: Option<f64>,
    pub target_value: Option<f64>,
    /// Guaranteed iteration count for relative accuracy, when it applies.
    pub iteration_budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub iterations: usize,
    pub bound: Option<f64>,
    pub elapsed_s: f64,
    pub oracle_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub problem: String,
    pub method: String,
    pub dimension: usize,
    pub constants: ResolvedConstants,
    pub exit: String,
    pub iterations: usize,
    pub final_value: f64,
    pub rows: Vec<TableRow>,
    pub certificates: Vec<SampleCheck>,
    pub passed: bool,
}

impl Report {
    pub fn new(exp: &Experiment, outcome: &Outcome, certificates: Vec<SampleCheck>) -> Result<Self, HarnessError> {
        let checkpoints = match &exp.config.report.checkpoints {
            Some(c) => c.clone(),
            None => default_checkpoints(&outcome.trace),
        };
        let rows = table_rows(&outcome.trace, &checkpoints)?;
        Ok(Self {
            name: exp.name.clone(),
            problem: exp.problem.name.clone(),
            method: exp.config.solver.method.tag().to_owned(),
            dimension: exp.problem.dim(),
            constants: outcome.constants.clone(),
            exit: outcome.exit.clone(),
            iterations: outcome.iterations,
            final_value: outcome.final_value,
            rows,
            passed: certificates.iter().all(|c| c.passed),
            certificates,
        })
    }
}

/// `10, 15, ..., 100` as far as the trace reaches, then its last iteration.
pub fn default_checkpoints(trace: &Trace) -> Vec<usize> {
    let Some(last) = trace.last().map(|r| r.k) else {
        return Vec::new();
    };
    let mut points: Vec<usize> = (10..=100).step_by(5).filter(|k| *k <= last).collect();
    if points.last() != Some(&last) {
        points.push(last);
    }
    points
}

fn table_rows(trace: &Trace, checkpoints: &[usize]) -> Result<Vec<TableRow>, HarnessError> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::CheckpointOrder);
    }
    let last = trace.last().map(|r| r.k).unwrap_or(0);
    checkpoints
        .iter()
        .map(|&k| {
            let r = trace
                .at(k)
                .ok_or(HarnessError::CheckpointBeyondTrace { checkpoint: k, last })?;
            Ok(TableRow {
                iterations: k,
                bound: r.bound,
                elapsed_s: r.elapsed_s,
                oracle_calls: r.oracle_calls,
            })
        })
        .collect()
}

fn format_rows(rows: &[TableRow]) -> String {
    let mut out = String::from("| iterations | bound | elapsed (s) |\n|---:|---:|---:|\n");
    for r in rows {
        let bound = r.bound.map(|b| format!("{b:.6e}")).unwrap_or_else(|| "n/a".into());
        writeln!(out, "| {} | {} | {:.3e} |", r.iterations, bound, r.elapsed_s).unwrap();
    }
    out
}

/// Markdown table of the theoretical bound at the given iterations: the gap
/// bound for the accelerated method, the rate bound on `dist2` for the
/// subgradient methods.
pub fn emit_table(trace: &Trace, checkpoints: &[usize]) -> Result<String, HarnessError> {
    Ok(format_rows(&table_rows(trace, checkpoints)?))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "-".into())
}

pub fn render_markdown(report: &Report) -> String {
    let c = &report.constants;
    let mut out = String::new();
    writeln!(out, "# {}\n", report.name).unwrap();
    writeln!(
        out,
        "Problem `{}` (n = {}), method `{}`: {} after {} iterations, f = {}.\n",
        report.problem, report.dimension, report.method, report.exit, report.iterations, report.final_value
    )
    .unwrap();
    out.push_str("| constant | value |\n|---|---:|\n");
    for (name, value) in [
        ("f*", opt(c.optimal_value)),
        ("gamma0", opt(c.homogeneity_floor)),
        ("gamma", opt(c.relative_accuracy)),
        ("R", opt(c.radius)),
        ("eps", opt(c.accuracy)),
        (
            "complexity estimate",
            c.complexity_estimate.map(|v| v.to_string()).unwrap_or("-".into()),
        ),
        ("alpha", opt(c.sharp_modulus)),
        ("beta", opt(c.weak_quasiconvexity)),
        ("M", opt(c.step_constant)),
        ("Delta", opt(c.inexactness)),
        ("f_bar", opt(c.target_value)),
        (
            "iteration budget",
            c.iteration_budget.map(|v| v.to_string()).unwrap_or("-".into()),
        ),
    ] {
        writeln!(out, "| {name} | {value} |").unwrap();
    }
    out.push_str("\n## Checkpoints\n\n");
    out.push_str(&format_rows(&report.rows));
    out.push_str("\n## Certificates\n\n| check | result | samples | worst slack |\n|---|---|---:|---:|\n");
    for check in &report.certificates {
        writeln!(
            out,
            "| {} | {} | {} | {:.3e} |",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.samples,
            check.worst_slack
        )
        .unwrap();
    }
    writeln!(out, "\nOverall: {}", if report.passed { "pass" } else { "FAIL" }).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{StepData, TraceRecord};

    fn trace(n: usize) -> Trace {
        let mut t = Trace::new();
        for k in 0..=n {
            t.push(TraceRecord {
                k,
                f_x: 1.0,
                grad_norm: None,
                dist2: None,
                bound: (k > 0).then(|| 1.0 / k as f64),
                residual: None,
                oracle_calls: k as u64,
                elapsed_s: 0.0,
                step: StepData::Ast {
                    local_constant: 1.0,
                    coupling: 1.0,
                    accumulator: k as f64,
                    delta: 0.0,
                    weighted_delta_sum: 0.0,
                    backtracks: 0,
                },
            })
            .unwrap();
        }
        t
    }

    #[test]
    fn nineteen_rows_for_the_standard_checkpoints() {
        let t = trace(100);
        let checkpoints: Vec<usize> = (10..=100).step_by(5).collect();
        let table = emit_table(&t, &checkpoints).unwrap();
        assert_eq!(table.lines().count(), 2 + 19);
        assert_eq!(default_checkpoints(&t), checkpoints);
    }

    #[test]
    fn empty_checkpoints_give_header_only() {
        assert_eq!(emit_table(&trace(3), &[]).unwrap().lines().count(), 2);
    }

    #[test]
    fn checkpoint_errors() {
        assert!(matches!(
            emit_table(&trace(3), &[4]),
            Err(HarnessError::CheckpointBeyondTrace { checkpoint: 4, last: 3 })
        ));
        assert!(matches!(
            emit_table(&trace(3), &[2, 1]),
            Err(HarnessError::CheckpointOrder)
        ));
    }

    #[test]
    fn short_trace_defaults_to_last_row() {
        assert_eq!(default_checkpoints(&trace(3)), vec![3]);
        assert_eq!(default_checkpoints(&trace(12)), vec![10, 12]);
    }
}
