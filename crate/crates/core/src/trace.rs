//! Per-iteration solver traces and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed CSV header for traces of the accelerated method.
pub const AST_COLUMNS: [&str; 9] = [
    "k",
    "f_x",
    "L_k",
    "alpha_k",
    "A_k",
    "delta_k",
    "gap_bound",
    "oracle_calls",
    "elapsed_s",
];

/// Fixed CSV header for traces of the subgradient methods.
pub const SUBGRADIENT_COLUMNS: [&str; 10] = [
    "k",
    "f_x",
    "grad_norm",
    "h_k",
    "dist2",
    "factor",
    "product_bound",
    "geom_bound",
    "inexact_bound",
    "elapsed_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepData {
    Ast {
        /// Accepted local constant `L_k`.
        local_constant: f64,
        /// Coupling coefficient `alpha_k`.
        coupling: f64,
        /// Accumulator `A_k`.
        accumulator: f64,
        /// Slack `delta_k` of the accepted descent test.
        delta: f64,
        /// `sum_{j <= k} delta_j A_j`.
        weighted_delta_sum: f64,
        backtracks: usize,
    },
    Subgradient {
        /// Step `h_k` taken from `x_k`.
        step: f64,
        /// `1 - alpha^2 beta^2 / ||g_k||^2`, the contraction of the next step.
        factor: Option<f64>,
        /// Product of the previous factors times `dist2(x_0)`.
        product_bound: Option<f64>,
        /// `(1 - alpha^2 / M^2)^k dist2(x_0)`.
        geom_bound: Option<f64>,
        /// `dist2(x_0) (1 - alpha^2 / (2 M^2))^k + 2 Delta^2 / alpha^2`.
        inexact_bound: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub f_x: f64,
    pub grad_norm: Option<f64>,
    pub dist2: Option<f64>,
    /// Headline theoretical bound for this row: the gap bound for the
    /// accelerated method, the tightest declared rate bound on `dist2` for
    /// the subgradient methods.
    pub bound: Option<f64>,
    /// `bound - observed`; negative beyond tolerance means a violated
    /// certificate.
    pub residual: Option<f64>,
    pub oracle_calls: u64,
    pub elapsed_s: f64,
    pub step: StepData,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("iteration index {got} does not follow {previous}")]
    NonIncreasing { previous: usize, got: usize },
    #[error("first record must have index 0, got {0}")]
    BadStart(usize),
    #[error("oracle call count decreased from {previous} to {got}")]
    OracleCallsDecreased { previous: u64, got: u64 },
    #[error("cannot mix step kinds within one trace")]
    MixedKinds,
    #[error("csv: {0}")]
    Csv(String),
    #[error("unrecognized trace header: {0}")]
    UnknownHeader(String),
}

impl From<csv::Error> for TraceError {
    fn from(e: csv::Error) -> Self {
        TraceError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Ast,
    Subgradient,
}

/// Append-only sequence of [`TraceRecord`]s with strictly increasing
/// iteration indices starting at 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) -> Result<(), TraceError> {
        match self.records.last() {
            None if record.k != 0 => return Err(TraceError::BadStart(record.k)),
            None => {}
            Some(last) => {
                if record.k <= last.k {
                    return Err(TraceError::NonIncreasing {
                        previous: last.k,
                        got: record.k,
                    });
                }
                if record.oracle_calls < last.oracle_calls {
                    return Err(TraceError::OracleCallsDecreased {
                        previous: last.oracle_calls,
                        got: record.oracle_calls,
                    });
                }
                if std::mem::discriminant(&record.step) != std::mem::discriminant(&last.step) {
                    return Err(TraceError::MixedKinds);
                }
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// The record with iteration index `k`, if present.
    pub fn at(&self, k: usize) -> Option<&TraceRecord> {
        self.records
            .binary_search_by_key(&k, |r| r.k)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn kind(&self) -> Option<TraceKind> {
        self.records.first().map(|r| match r.step {
            StepData::Ast { .. } => TraceKind::Ast,
            StepData::Subgradient { .. } => TraceKind::Subgradient,
        })
    }

    /// Zeroes the wall-clock column so that traces of identical runs compare
    /// equal byte for byte.
    pub fn strip_timing(&mut self) {
        for r in &mut self.records {
            r.elapsed_s = 0.0;
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(out);
        match self.kind().unwrap_or(TraceKind::Subgradient) {
            TraceKind::Ast => w.write_record(AST_COLUMNS)?,
            TraceKind::Subgradient => w.write_record(SUBGRADIENT_COLUMNS)?,
        }
        for r in &self.records {
            let row: Vec<String> = match r.step {
                StepData::Ast {
                    local_constant,
                    coupling,
                    accumulator,
                    delta,
                    ..
                } => vec![
                    r.k.to_string(),
                    num(r.f_x),
                    num(local_constant),
                    num(coupling),
                    num(accumulator),
                    num(delta),
                    opt(r.bound),
                    r.oracle_calls.to_string(),
                    num(r.elapsed_s),
                ],
                StepData::Subgradient {
                    step,
                    factor,
                    product_bound,
                    geom_bound,
                    inexact_bound,
                } => vec![
                    r.k.to_string(),
                    num(r.f_x),
                    opt(r.grad_norm),
                    num(step),
                    opt(r.dist2),
                    opt(factor),
                    opt(product_bound),
                    opt(geom_bound),
                    opt(inexact_bound),
                    num(r.elapsed_s),
                ],
            };
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| TraceError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Reads a trace written by [`Trace::write_csv`]. Columns that the CSV
    /// does not carry (backtrack counts, residuals, cumulative sums) come
    /// back as zero or `None`.
    pub fn read_csv<R: Read>(input: R) -> Result<Trace, TraceError> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let kind = if header == AST_COLUMNS {
            TraceKind::Ast
        } else if header == SUBGRADIENT_COLUMNS {
            TraceKind::Subgradient
        } else {
            return Err(TraceError::UnknownHeader(header.join(",")));
        };
        let mut trace = Trace::new();
        for row in rdr.records() {
            let row = row?;
            let field = |i: usize| parse_opt(&row[i]);
            let req =
                |i: usize| field(i)?.ok_or_else(|| TraceError::Csv(format!("missing value in column {}", header[i])));
            let k = row[0]
                .parse::<usize>()
                .map_err(|e| TraceError::Csv(format!("bad iteration index: {e}")))?;
            let record = match kind {
                TraceKind::Ast => TraceRecord {
                    k,
                    f_x: req(1)?,
                    grad_norm: None,
                    dist2: None,
                    bound: field(6)?,
                    residual: None,
                    oracle_calls: row[7]
                        .parse()
                        .map_err(|e| TraceError::Csv(format!("bad oracle count: {e}")))?,
                    elapsed_s: req(8)?,
                    step: StepData::Ast {
                        local_constant: req(2)?,
                        coupling: req(3)?,
                        accumulator: req(4)?,
                        delta: req(5)?,
                        weighted_delta_sum: 0.0,
                        backtracks: 0,
                    },
                },
                TraceKind::Subgradient => {
                    let (product_bound, geom_bound, inexact_bound) = (field(6)?, field(7)?, field(8)?);
                    TraceRecord {
                        k,
                        f_x: req(1)?,
                        grad_norm: field(2)?,
                        dist2: field(4)?,
                        bound: geom_bound.or(product_bound).or(inexact_bound),
                        residual: None,
                        oracle_calls: 0,
                        elapsed_s: req(9)?,
                        step: StepData::Subgradient {
                            step: req(3)?,
                            factor: field(5)?,
                            product_bound,
                            geom_bound,
                            inexact_bound,
                        },
                    }
                }
            };
            trace.push(record)?;
        }
        Ok(trace)
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>, TraceError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| TraceError::Csv(format!("bad number {s:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub_record(k: usize, calls: u64) -> TraceRecord {
        TraceRecord {
            k,
            f_x: 1.0 / (k as f64 + 1.0),
            grad_norm: Some(1.0),
            dist2: Some(0.5),
            bound: Some(0.75),
            residual: Some(0.25),
            oracle_calls: calls,
            elapsed_s: 0.0,
            step: StepData::Subgradient {
                step: 0.1,
                factor: Some(0.75),
                product_bound: Some(1.0),
                geom_bound: Some(0.75),
                inexact_bound: None,
            },
        }
    }

    #[test]
    fn push_enforces_monotone_indices() {
        let mut t = Trace::new();
        assert_eq!(t.push(sub_record(1, 0)), Err(TraceError::BadStart(1)));
        t.push(sub_record(0, 1)).unwrap();
        t.push(sub_record(1, 2)).unwrap();
        assert!(matches!(
            t.push(sub_record(1, 3)),
            Err(TraceError::NonIncreasing { .. })
        ));
        assert!(matches!(
            t.push(sub_record(2, 1)),
            Err(TraceError::OracleCallsDecreased { .. })
        ));
        assert_eq!(t.len(), 2);
        assert_eq!(t.at(1).unwrap().k, 1);
        assert!(t.at(5).is_none());
    }

    #[test]
    fn csv_round_trip_subgradient() {
        let mut t = Trace::new();
        for k in 0..4 {
            t.push(sub_record(k, 0)).unwrap();
        }
        let csv = t.to_csv_string();
        assert!(csv.starts_with(&SUBGRADIENT_COLUMNS.join(",")));
        let back = Trace::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in back.records().iter().zip(t.records()) {
            assert_eq!(a.f_x, b.f_x);
            assert_eq!(a.step, b.step);
        }
    }

    #[test]
    fn unknown_header_rejected() {
        assert!(matches!(
            Trace::read_csv("a,b\n1,2\n".as_bytes()),
            Err(TraceError::UnknownHeader(_))
        ));
    }
}
