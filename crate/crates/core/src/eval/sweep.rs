use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Cross-entropy and penalty of one scored record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordLoss {
    pub ce_loss: f64,
    pub fcl: f64,
}

/// Scorer output for one λ, plus any evaluation metrics measured at that λ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub losses: Vec<RecordLoss>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mean_fcl: f64,
    pub mean_total: f64,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// One row per λ with the mean penalty and the mean of `ce + λ · fcl`.
pub fn sweep_lambda(points: &[SweepPoint]) -> Result<SweepReport, EvalError> {
    if points.is_empty() {
        return Err(EvalError::EmptySweep);
    }
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        if !(p.lambda.is_finite() && p.lambda >= 0.0) {
            return Err(EvalError::BadLambda(p.lambda));
        }
        if p.losses.is_empty() {
            return Err(EvalError::EmptyPoint(p.lambda));
        }
        rows.push(SweepRow {
            lambda: p.lambda,
            mean_fcl: mean(p.losses.iter().map(|l| l.fcl)),
            mean_total: mean(p.losses.iter().map(|l| l.ce_loss + p.lambda * l.fcl)),
            metrics: p.metrics.clone(),
        });
    }
    Ok(SweepReport { rows })
}

impl SweepReport {
    /// Tab-separated table: `lambda  mean_fcl  mean_total  <metrics…>`.
    pub fn to_tsv(&self) -> String {
        let names: BTreeSet<&str> = self.rows.iter().flat_map(|r| r.metrics.keys().map(String::as_str)).collect();
        let mut out = String::from("lambda\tmean_fcl\tmean_total");
        for n in &names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{}\t{}\t{}", r.lambda, r.mean_fcl, r.mean_total);
            for n in &names {
                out.push('\t');
                if let Some(v) = r.metrics.get(*n) {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}
