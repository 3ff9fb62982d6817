use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{index_predictions, polarity, EvalError, EvalReport, GoldRecord, MetricKind, Prediction};
use crate::contradiction::pair_claims;
use crate::extract::extract_from_text;
use crate::fact::VhType;
use crate::lexicon::Lexicons;

fn tally(gold: &[GoldRecord], correct: &[bool]) -> BTreeMap<VhType, (usize, usize)> {
    let mut counts: BTreeMap<VhType, (usize, usize)> = BTreeMap::new();
    for (g, ok) in gold.iter().zip(correct) {
        let c = counts.entry(g.vh_type).or_default();
        c.0 += 1;
        c.1 += usize::from(*ok);
    }
    counts
}

/// Yes/no accuracy: a prediction is correct when its leading yes/no matches
/// the gold answer's. No leading polarity or no prediction counts as wrong.
pub fn eval_ynq(preds: &[Prediction], gold: &[GoldRecord]) -> Result<EvalReport, EvalError> {
    let (by_id, missing, unknown) = index_predictions(preds, gold)?;
    let mut correct = Vec::with_capacity(gold.len());
    for g in gold {
        let expected = polarity(&g.expected_answer).ok_or_else(|| EvalError::NoGoldPolarity(g.record_id.clone()))?;
        let got = by_id.get(g.record_id.as_str()).and_then(|t| polarity(t));
        correct.push(got == Some(expected));
    }
    let mut report = EvalReport::from_counts(MetricKind::Ynq, &tally(gold, &correct));
    report.missing = missing;
    report.unknown = unknown;
    Ok(report)
}

/// Open-ended proxy accuracy. Correct iff the claim paired with the target
/// anchor exists and agrees, and no anchor of the record is contradicted.
pub fn eval_oeq(preds: &[Prediction], gold: &[GoldRecord], lexicons: &Lexicons) -> Result<EvalReport, EvalError> {
    let (by_id, missing, unknown) = index_predictions(preds, gold)?;
    if let Some(g) = gold.iter().find(|g| g.target_anchor.is_none()) {
        return Err(EvalError::NoTargetAnchor(g.record_id.clone()));
    }
    let correct: Vec<bool> = gold
        .par_iter()
        .map(|g| {
            let Some(text) = by_id.get(g.record_id.as_str()) else {
                return false;
            };
            if text.trim().is_empty() {
                return false;
            }
            let claims = extract_from_text(text, Some(&g.question), lexicons);
            let pairings = pair_claims(&g.anchors, &claims, lexicons);
            let target = g.target_anchor.as_deref().expect("checked above");
            let target_ok = pairings
                .iter()
                .any(|p| p.anchor().anchor_id() == target && p.claim().is_some() && p.indicator() == 0);
            target_ok && pairings.iter().all(|p| p.indicator() == 0)
        })
        .collect();
    let mut report = EvalReport::from_counts(MetricKind::OeqProxy, &tally(gold, &correct));
    report.missing = missing;
    report.unknown = unknown;
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetF1 {
    pub n: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio had a zero denominator and was taken as 0.
    pub degenerate: bool,
}

impl SubsetF1 {
    fn finish(&mut self) {
        let ratio = |num: usize, den: usize, degenerate: &mut bool| {
            if den == 0 {
                *degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let mut degenerate = false;
        self.precision = ratio(self.tp, self.tp + self.fp, &mut degenerate);
        self.recall = ratio(self.tp, self.tp + self.fn_, &mut degenerate);
        self.f1 = if self.precision + self.recall == 0.0 {
            degenerate = true;
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        };
        self.degenerate = degenerate;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub subsets: BTreeMap<String, SubsetF1>,
    pub mean_f1: f64,
    pub missing: Vec<String>,
    pub unknown: Vec<String>,
}

/// Existence F1 with "yes" as the positive class, per subset and averaged.
/// A missing or non-polar prediction counts as the wrong answer.
pub fn eval_existence_f1(preds: &[Prediction], gold: &[GoldRecord]) -> Result<F1Report, EvalError> {
    let (by_id, missing, unknown) = index_predictions(preds, gold)?;
    let mut subsets: BTreeMap<String, SubsetF1> = BTreeMap::new();
    for g in gold {
        let expected = polarity(&g.expected_answer).ok_or_else(|| EvalError::NoGoldPolarity(g.record_id.clone()))?;
        let got = by_id
            .get(g.record_id.as_str())
            .and_then(|t| polarity(t))
            .unwrap_or(!expected);
        let s = subsets.entry(g.subset.clone()).or_default();
        s.n += 1;
        match (got, expected) {
            (true, true) => s.tp += 1,
            (true, false) => s.fp += 1,
            (false, true) => s.fn_ += 1,
            (false, false) => s.tn += 1,
        }
    }
    for s in subsets.values_mut() {
        s.finish();
    }
    let mean_f1 = subsets.values().fold(0.0, |acc, s| acc + s.f1) / subsets.len() as f64;
    Ok(F1Report {
        subsets,
        mean_f1,
        missing,
        unknown,
    })
}
