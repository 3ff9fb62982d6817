use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::counterfactual::derive_seed;
use super::AugmentError;
use crate::fact::VhType;
use crate::jsonl::{self, LineError, Provenance};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    /// Per-type counts of split units (a record together with its counter-factual sibling).
    pub per_type: BTreeMap<VhType, SplitCounts>,
    pub train_records: usize,
    pub test_records: usize,
}

#[derive(Deserialize)]
struct SplitKey {
    record_id: String,
    vh_type: VhType,
    #[serde(default)]
    task: Option<String>,
    #[serde(default)]
    sibling_id: Option<String>,
}

/// Number of training units for `n` units: half-up rounding, kept within [1, n-1].
pub fn train_size(n: usize, fraction: f64) -> usize {
    let k = (n as f64 * fraction + 0.5 + 1e-9).floor() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Stratified split of JSONL lines by `vh_type`. A counter-factual record
/// follows its original sibling. Both outputs keep input order.
pub fn split_lines<'a>(
    lines: &[(usize, &'a str)],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<&'a str>, Vec<&'a str>, SplitSummary), AugmentError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(AugmentError::BadFraction(train_fraction));
    }
    let (keys, errors) = jsonl::parse_lines::<SplitKey>(lines);
    if !errors.is_empty() {
        return Err(AugmentError::Lines(errors));
    }
    if keys.is_empty() {
        return Err(AugmentError::Lines(vec![LineError::new(0, "no records")]));
    }

    // Unit id per line; units are grouped by type in order of first appearance.
    let mut unit_type: HashMap<String, VhType> = HashMap::new();
    let mut by_type: BTreeMap<VhType, Vec<String>> = BTreeMap::new();
    let mut line_units = Vec::with_capacity(keys.len());
    for (_, k) in &keys {
        let unit = match (k.task.as_deref(), &k.sibling_id) {
            (Some("COUNTERFACTUAL"), Some(sibling)) => sibling.clone(),
            _ => k.record_id.clone(),
        };
        if !unit_type.contains_key(&unit) {
            unit_type.insert(unit.clone(), k.vh_type);
            by_type.entry(k.vh_type).or_default().push(unit.clone());
        }
        line_units.push(unit);
    }

    let mut train_units: HashSet<String> = HashSet::new();
    let mut summary = SplitSummary::default();
    for (vh_type, units) in &by_type {
        if units.len() < 2 {
            return Err(AugmentError::TypeTooSmall {
                vh_type: *vh_type,
                count: units.len(),
            });
        }
        let k = train_size(units.len(), train_fraction);
        let mut shuffled = units.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, vh_type.token())));
        train_units.extend(shuffled.into_iter().take(k));
        summary.per_type.insert(
            *vh_type,
            SplitCounts {
                train: k,
                test: units.len() - k,
            },
        );
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for ((_, line), unit) in lines.iter().zip(&line_units) {
        if train_units.contains(unit) {
            train.push(*line);
        } else {
            test.push(*line);
        }
    }
    summary.train_records = train.len();
    summary.test_records = test.len();
    Ok((train, test, summary))
}

fn join_lines(provenance: Option<&Provenance>, lines: &[&str]) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&p.header_line());
        out.push('\n');
    }
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// Splits a JSONL file into `{prefix}.train.jsonl` and `{prefix}.test.jsonl`.
pub fn split_dataset(
    input: &Path,
    train_fraction: f64,
    seed: u64,
    output_prefix: &Path,
    provenance: Option<&Provenance>,
) -> Result<(PathBuf, PathBuf, SplitSummary), AugmentError> {
    let text = jsonl::read_text(input)?;
    let lines = jsonl::data_lines(&text);
    let (train, test, summary) = split_lines(&lines, train_fraction, seed)?;
    let prefix = output_prefix.display().to_string();
    let train_path = PathBuf::from(format!("{prefix}.train.jsonl"));
    let test_path = PathBuf::from(format!("{prefix}.test.jsonl"));
    jsonl::write_text(&train_path, &join_lines(provenance, &train))?;
    jsonl::write_text(&test_path, &join_lines(provenance, &test))?;
    Ok((train_path, test_path, summary))
}
