//! Configurable wording for counter-factual prompts and answers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::extract::normalize_ocr;
use crate::fact::{is_canonical_token, PositionRelation, SizeRelation, VhType};
use crate::lexicon::Lexicons;

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.toml");

const PLACEHOLDERS: [&str; 9] = [
    "subject",
    "subject_plural",
    "subject_article",
    "subject_a",
    "subject_b",
    "claimed",
    "claimed_words",
    "truth",
    "truth_words",
];

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read template file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template file is not valid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid templates: {0}")]
    Invalid(String),
    #[error("template {template:?} uses unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: String, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterfactualTemplate {
    pub question: String,
    pub answer: String,
    pub question_one: Option<String>,
    pub answer_one: Option<String>,
    pub answer_zero: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginalTemplates {
    pub rewrite_counting_answers: bool,
    pub counting_answer: String,
    pub counting_answer_one: String,
    pub counting_answer_zero: String,
    pub append_position_suffix: bool,
    pub position_suffix: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplates {
    counterfactual: BTreeMap<String, CounterfactualTemplate>,
    relation_phrases: BTreeMap<String, String>,
    original: OriginalTemplates,
    distractors: RawWords,
    ocr_substitutions: RawWords,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWords {
    #[serde(alias = "nouns")]
    words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    counterfactual: BTreeMap<VhType, CounterfactualTemplate>,
    relation_phrases: BTreeMap<String, String>,
    pub original: OriginalTemplates,
    distractors: Vec<String>,
    ocr_substitutions: Vec<String>,
}

/// Fills `{name}` placeholders from `vars`.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| TemplateError::Invalid(format!("unclosed '{{' in {template:?}")))?;
        let name = &after[..close];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::UnknownPlaceholder {
                template: template.to_string(),
                name: name.to_string(),
            })?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn check_placeholders(template: &str) -> Result<(), TemplateError> {
    let vars: Vec<(&str, &str)> = PLACEHOLDERS.iter().map(|p| (*p, "")).collect();
    render(template, &vars).map(|_| ())
}

impl Templates {
    /// Shipped templates, validated against the shipped lexicons.
    pub fn default_fixture() -> Self {
        Self::from_toml_str(DEFAULT_TEMPLATES, &Lexicons::default_fixture()).expect("shipped templates are valid")
    }

    pub fn load(path: &Path, lexicons: &Lexicons) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, lexicons)
    }

    pub fn from_toml_str(text: &str, lexicons: &Lexicons) -> Result<Self, TemplateError> {
        let raw: RawTemplates = toml::from_str(text)?;
        let mut counterfactual = BTreeMap::new();
        for (key, t) in raw.counterfactual {
            let vh_type = VhType::from_config_key(&key)
                .ok_or_else(|| TemplateError::Invalid(format!("unknown counterfactual section {key:?}")))?;
            for s in [Some(&t.question), Some(&t.answer), t.question_one.as_ref(), t.answer_one.as_ref(), t.answer_zero.as_ref()]
                .into_iter()
                .flatten()
            {
                check_placeholders(s)?;
            }
            counterfactual.insert(vh_type, t);
        }
        if let Some(missing) = VhType::ALL.iter().find(|t| !counterfactual.contains_key(t)) {
            return Err(TemplateError::Invalid(format!(
                "missing counterfactual template for {}",
                missing.config_key()
            )));
        }
        for s in [
            &raw.original.counting_answer,
            &raw.original.counting_answer_one,
            &raw.original.counting_answer_zero,
        ] {
            check_placeholders(s)?;
        }

        // Every relation needs a phrase the extractor maps back to the same relation.
        for rel in SizeRelation::ALL {
            let phrase = raw
                .relation_phrases
                .get(rel.token())
                .ok_or_else(|| TemplateError::Invalid(format!("missing relation phrase for {}", rel.token())))?;
            let words: Vec<&str> = phrase.split_whitespace().collect();
            if !lexicons.size_comparatives().iter().any(|p| p.relation == rel && p.words == words) {
                return Err(TemplateError::Invalid(format!("phrase {phrase:?} is not a lexicon phrase for {}", rel.token())));
            }
        }
        for rel in PositionRelation::ALL {
            let phrase = raw
                .relation_phrases
                .get(rel.token())
                .ok_or_else(|| TemplateError::Invalid(format!("missing relation phrase for {}", rel.token())))?;
            let words: Vec<&str> = phrase.split_whitespace().collect();
            if !lexicons.spatial_relations().iter().any(|p| p.relation == rel && p.words == words) {
                return Err(TemplateError::Invalid(format!("phrase {phrase:?} is not a lexicon phrase for {}", rel.token())));
            }
        }

        for noun in &raw.distractors.words {
            if !lexicons.is_noun(noun) {
                return Err(TemplateError::Invalid(format!("distractor {noun:?} is not a lexicon noun")));
            }
        }
        for word in &raw.ocr_substitutions.words {
            if !is_canonical_token(word) || normalize_ocr(word) != *word {
                return Err(TemplateError::Invalid(format!("OCR substitution {word:?} must be one normalized word")));
            }
        }

        Ok(Templates {
            counterfactual,
            relation_phrases: raw.relation_phrases,
            original: raw.original,
            distractors: raw.distractors.words,
            ocr_substitutions: raw.ocr_substitutions.words,
        })
    }

    pub fn counterfactual(&self, vh_type: VhType) -> &CounterfactualTemplate {
        &self.counterfactual[&vh_type]
    }

    pub fn size_phrase(&self, rel: SizeRelation) -> &str {
        &self.relation_phrases[rel.token()]
    }

    pub fn position_phrase(&self, rel: PositionRelation) -> &str {
        &self.relation_phrases[rel.token()]
    }

    pub fn distractors(&self) -> &[String] {
        &self.distractors
    }

    pub fn ocr_substitutions(&self) -> &[String] {
        &self.ocr_substitutions
    }

    /// Copy with the distractor list replaced.
    pub fn with_distractors(mut self, nouns: Vec<String>) -> Self {
        self.distractors = nouns;
        self
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self::default_fixture()
    }
}
