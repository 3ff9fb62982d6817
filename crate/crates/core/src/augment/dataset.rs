use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counterfactual::{derive_seed, draw_unit, generate_counterfactual};
use super::instruction::{format_instruction, InstructionMode, Style};
use super::record::{AugmentedRecord, Task};
use super::scene::{derive_anchors, SceneRecord};
use super::templates::{render, Templates};
use super::AugmentError;
use crate::dsl;
use crate::fact::{AnchorSet, VhType, GLOBAL_SUBJECT};
use crate::jsonl::{self, LineError, Provenance};
use crate::lexicon::Lexicons;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub seed: u64,
    pub style: Style,
    /// Probability that a scene also yields a counter-factual sibling.
    pub counterfactual_ratio: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            seed: 42,
            style: Style::Full,
            counterfactual_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub original: usize,
    pub counterfactual: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub records_in: usize,
    pub records_out: usize,
    pub per_type: BTreeMap<VhType, TypeCounts>,
}

fn counting_answer(scene: &SceneRecord, count: u32, lexicons: &Lexicons, templates: &Templates) -> Result<String, AugmentError> {
    let o = &templates.original;
    let template = match count {
        0 => &o.counting_answer_zero,
        1 => &o.counting_answer_one,
        _ => &o.counting_answer,
    };
    let noun = &scene.target(lexicons).name;
    let plural = lexicons.plural(noun);
    let truth = count.to_string();
    let words = lexicons.number_word(count).map_or_else(|| truth.clone(), str::to_string);
    Ok(render(
        template,
        &[
            ("subject", noun),
            ("subject_plural", &plural),
            ("truth", &truth),
            ("truth_words", &words),
        ],
    )?)
}

/// Target of the original question: the questioned object's anchor of the
/// scene's type when there is one, else the first anchor of that type.
fn original_target(scene: &SceneRecord, anchors: &AnchorSet, lexicons: &Lexicons) -> Option<String> {
    let target = scene.target(lexicons).name.as_str();
    let of_type = || anchors.iter().filter(|a| a.vh_type() == scene.vh_type);
    of_type()
        .find(|a| {
            let k = a.key();
            k.subject == target || k.subject == GLOBAL_SUBJECT || k.subject.split('|').next() == Some(target)
        })
        .or_else(|| of_type().next())
        .map(|a| a.anchor_id().to_string())
}

fn augment_scene(
    scene: &SceneRecord,
    config: &AugmentConfig,
    lexicons: &Lexicons,
    templates: &Templates,
) -> Result<Vec<AugmentedRecord>, AugmentError> {
    let anchors = derive_anchors(scene, lexicons)?;
    let record_seed = derive_seed(config.seed, &scene.record_id);
    let with_cf = draw_unit(record_seed) < config.counterfactual_ratio;
    let cf_id = format!("{}#cf", scene.record_id);
    let target_object = scene.target(lexicons);

    let expected_answer = if scene.vh_type == VhType::Counting && templates.original.rewrite_counting_answers {
        counting_answer(scene, target_object.count, lexicons, templates)?
    } else {
        scene.answer.clone()
    };
    let mut out = vec![AugmentedRecord {
        record_id: scene.record_id.clone(),
        instruction: format_instruction(scene, InstructionMode::Original, config.style, templates),
        expected_answer,
        anchors: anchors.iter().map(dsl::serialize).collect(),
        task: Task::Original,
        sibling_id: with_cf.then(|| cf_id.clone()),
        vh_type: scene.vh_type,
        style: config.style,
        question_subject: Some(target_object.name.clone()),
        target_anchor: original_target(scene, &anchors, lexicons),
        check_token: None,
    }];
    if with_cf {
        let cf = generate_counterfactual(
            scene,
            &anchors,
            derive_seed(record_seed, "counterfactual"),
            lexicons,
            templates,
        )?;
        out.push(AugmentedRecord {
            record_id: cf_id,
            instruction: format_instruction(scene, InstructionMode::Counterfactual(&cf), config.style, templates),
            expected_answer: cf.expected_answer.clone(),
            anchors: cf.anchors.iter().map(dsl::serialize).collect(),
            task: Task::Counterfactual,
            sibling_id: Some(scene.record_id.clone()),
            vh_type: scene.vh_type,
            style: config.style,
            question_subject: cf.question_subject.clone(),
            target_anchor: Some(cf.target_anchor.clone()),
            check_token: Some(cf.check_token.clone()),
        });
    }
    Ok(out)
}

fn summarize(records_in: usize, records: &[AugmentedRecord]) -> AugmentSummary {
    let mut per_type: BTreeMap<VhType, TypeCounts> = BTreeMap::new();
    for r in records {
        let c = per_type.entry(r.vh_type).or_default();
        match r.task {
            Task::Original => c.original += 1,
            Task::Counterfactual => c.counterfactual += 1,
        }
    }
    AugmentSummary {
        records_in,
        records_out: records.len(),
        per_type,
    }
}

fn augment_numbered(
    scenes: &[(usize, SceneRecord)],
    config: &AugmentConfig,
    lexicons: &Lexicons,
    templates: &Templates,
) -> Result<(Vec<AugmentedRecord>, AugmentSummary), AugmentError> {
    if !(0.0..=1.0).contains(&config.counterfactual_ratio) {
        return Err(AugmentError::BadRatio(config.counterfactual_ratio));
    }
    let mut errors = Vec::new();
    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (line, s) in scenes {
        if let Some(prev) = first_seen.insert(&s.record_id, *line) {
            errors.push(LineError::new(*line, format!("duplicate record_id {:?} (first on line {prev})", s.record_id)));
        }
    }
    let results: Vec<Result<Vec<AugmentedRecord>, AugmentError>> = scenes
        .par_iter()
        .map(|(_, s)| augment_scene(s, config, lexicons, templates))
        .collect();
    let mut out = Vec::with_capacity(scenes.len() * 2);
    for ((line, _), r) in scenes.iter().zip(results) {
        match r {
            Ok(records) => out.extend(records),
            Err(e) => errors.push(LineError::new(*line, e.to_string())),
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(AugmentError::Lines(errors));
    }
    let summary = summarize(scenes.len(), &out);
    Ok((out, summary))
}

/// Augments in-memory scenes. Output order follows input order; any invalid
/// scene fails the whole batch.
pub fn augment_records(
    scenes: &[SceneRecord],
    config: &AugmentConfig,
    lexicons: &Lexicons,
    templates: &Templates,
) -> Result<(Vec<AugmentedRecord>, AugmentSummary), AugmentError> {
    let numbered: Vec<(usize, SceneRecord)> = scenes.iter().cloned().enumerate().map(|(i, s)| (i + 1, s)).collect();
    augment_numbered(&numbered, config, lexicons, templates)
}

/// Reads scene JSONL, augments it and writes record JSONL. Nothing is written
/// when any line fails.
pub fn augment_dataset(
    input: &Path,
    output: &Path,
    config: &AugmentConfig,
    lexicons: &Lexicons,
    templates: &Templates,
    provenance: Option<&Provenance>,
) -> Result<AugmentSummary, AugmentError> {
    let text = jsonl::read_text(input)?;
    let lines = jsonl::data_lines(&text);
    if lines.is_empty() {
        return Err(AugmentError::Lines(vec![LineError::new(0, "no records")]));
    }
    let (scenes, errors) = jsonl::parse_lines::<SceneRecord>(&lines);
    if !errors.is_empty() {
        return Err(AugmentError::Lines(errors));
    }
    let (records, summary) = augment_numbered(&scenes, config, lexicons, templates)?;
    jsonl::write_text(output, &jsonl::to_jsonl(provenance, &records))?;
    Ok(summary)
}
