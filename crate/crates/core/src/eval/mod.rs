//! Accuracy, F1 and λ-sweep reports.
//!
//! OEQ answers are judged by an automatic proxy: the claim paired with the
//! record's target anchor must exist and agree, and no anchor may be
//! contradicted. Reports label it "OEQ-proxy".

mod metrics;
mod reference;
mod sweep;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{eval_existence_f1, eval_oeq, eval_ynq, F1Report, SubsetF1};
pub use reference::{ReferenceColumn, ReferenceTable, ReferenceTables};
pub use sweep::{sweep_lambda, RecordLoss, SweepPoint, SweepReport, SweepRow};

use crate::augment::AugmentedRecord;
use crate::extract::QuestionContext;
use crate::fact::{AnchorSet, VhType};
use crate::lexicon::Lexicons;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("gold record {0:?} has no yes/no polarity in its expected answer")]
    NoGoldPolarity(String),
    #[error("gold record {0:?} has no anchor of its question type")]
    NoTargetAnchor(String),
    #[error("duplicate gold record {0:?}")]
    DuplicateGold(String),
    #[error("duplicate prediction for {0:?}")]
    DuplicatePrediction(String),
    #[error("gold record {record_id:?}: {reason}")]
    BadGold { record_id: String, reason: String },
    #[error("no gold records")]
    EmptyGold,
    #[error("lambda must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("sweep needs at least one lambda")]
    EmptySweep,
    #[error("sweep point for lambda {0} has no scored records")]
    EmptyPoint(f64),
}

/// A model output for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub record_id: String,
    pub text: String,
}

/// Reference data for one evaluated record.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldRecord {
    pub record_id: String,
    pub vh_type: VhType,
    pub expected_answer: String,
    pub anchors: AnchorSet,
    pub target_anchor: Option<String>,
    pub question: QuestionContext,
    /// Question subset for mean-F1 reporting.
    pub subset: String,
}

impl GoldRecord {
    pub fn from_augmented(record: &AugmentedRecord, lexicons: &Lexicons) -> Result<Self, EvalError> {
        let anchors = record.anchor_set(lexicons).map_err(|e| EvalError::BadGold {
            record_id: record.record_id.clone(),
            reason: e.to_string(),
        })?;
        Ok(GoldRecord {
            record_id: record.record_id.clone(),
            vh_type: record.vh_type,
            expected_answer: record.expected_answer.clone(),
            target_anchor: record.target(&anchors).map(|a| a.anchor_id().to_string()),
            anchors,
            question: record.question_context(),
            subset: "all".to_string(),
        })
    }

    pub fn with_subset(mut self, subset: &str) -> Self {
        self.subset = subset.to_string();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "OEQ-proxy")]
    OeqProxy,
    #[serde(rename = "YNQ")]
    Ynq,
    #[serde(rename = "F1")]
    F1,
}

impl MetricKind {
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::OeqProxy => "OEQ-proxy",
            MetricKind::Ynq => "YNQ",
            MetricKind::F1 => "F1",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Per-type accuracy with an unweighted average over the types that have records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: MetricKind,
    pub per_type: BTreeMap<VhType, TypeScore>,
    pub average: f64,
    /// Gold records without a prediction; scored as incorrect.
    pub missing: Vec<String>,
    /// Predictions without a gold record; ignored.
    pub unknown: Vec<String>,
}

impl EvalReport {
    pub fn from_counts(metric: MetricKind, counts: &BTreeMap<VhType, (usize, usize)>) -> Self {
        let per_type: BTreeMap<VhType, TypeScore> = counts
            .iter()
            .filter(|(_, (n, _))| *n > 0)
            .map(|(t, &(n, correct))| {
                (
                    *t,
                    TypeScore {
                        n,
                        correct,
                        accuracy: correct as f64 / n as f64,
                    },
                )
            })
            .collect();
        let accuracies: BTreeMap<VhType, f64> = per_type.iter().map(|(t, s)| (*t, s.accuracy)).collect();
        EvalReport {
            metric,
            average: average(&accuracies),
            per_type,
            missing: Vec::new(),
            unknown: Vec::new(),
        }
    }

    pub fn accuracies(&self) -> BTreeMap<VhType, f64> {
        self.per_type.iter().map(|(t, s)| (*t, s.accuracy)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Unweighted mean in type order; 0 when empty.
pub fn average(values: &BTreeMap<VhType, f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.values().fold(0.0, |acc, v| acc + v) / values.len() as f64
}

/// Half-up rounding to `places` decimals. The small epsilon absorbs binary
/// representation error such as 0.3362499999.
pub fn round_half_up(x: f64, places: u32) -> f64 {
    let scale = 10f64.powi(places as i32);
    (x * scale + 0.5 + 1e-9).floor() / scale
}

pub fn fmt3(x: f64) -> String {
    format!("{:.3}", round_half_up(x, 3))
}

/// Leading yes/no of an answer: "No, there are only two." is `Some(false)`.
pub fn polarity(text: &str) -> Option<bool> {
    let first = text
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .split(|c: char| !c.is_alphanumeric())
        .next()?
        .to_lowercase();
    match first.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Aligned text table: one row per type plus Average, one column per method.
pub fn render_table(columns: &[(String, BTreeMap<VhType, f64>)]) -> String {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("Mode".to_string())
        .chain(columns.iter().map(|(name, _)| name.clone()))
        .collect()];
    for t in VhType::ALL {
        if columns.iter().all(|(_, v)| !v.contains_key(&t)) {
            continue;
        }
        let mut row = vec![t.label().to_string()];
        row.extend(columns.iter().map(|(_, v)| v.get(&t).map_or("-".to_string(), |x| fmt3(*x))));
        rows.push(row);
    }
    let mut avg = vec!["Average".to_string()];
    avg.extend(columns.iter().map(|(_, v)| fmt3(average(v))));
    rows.push(avg);

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(out, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push('\n');
    }
    out
}

/// Prediction text by record id, gold ids without a prediction, prediction ids without gold.
pub(crate) type Indexed<'p> = (HashMap<&'p str, &'p str>, Vec<String>, Vec<String>);

/// Indexes predictions by record id and sorts gold ids not found.
pub(crate) fn index_predictions<'p>(preds: &'p [Prediction], gold: &[GoldRecord]) -> Result<Indexed<'p>, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut by_id = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.record_id.as_str(), p.text.as_str()).is_some() {
            return Err(EvalError::DuplicatePrediction(p.record_id.clone()));
        }
    }
    let mut gold_ids = std::collections::HashSet::with_capacity(gold.len());
    for g in gold {
        if !gold_ids.insert(g.record_id.as_str()) {
            return Err(EvalError::DuplicateGold(g.record_id.clone()));
        }
    }
    let mut missing: Vec<String> = gold
        .iter()
        .filter(|g| !by_id.contains_key(g.record_id.as_str()))
        .map(|g| g.record_id.clone())
        .collect();
    let mut unknown: Vec<String> = preds
        .iter()
        .filter(|p| !gold_ids.contains(p.record_id.as_str()))
        .map(|p| p.record_id.clone())
        .collect();
    missing.sort();
    unknown.sort();
    Ok((by_id, missing, unknown))
}
