use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::instruction::Style;
use crate::contradiction::pair_claims;
use crate::dsl::{self, DslError, TokenKind};
use crate::extract::QuestionContext;
use crate::fact::{AnchorSet, Claim, FactualAnchor, Span, VhType};
use crate::lexicon::Lexicons;
use crate::scoring::{parse_anchor_set, ScoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Task {
    Original,
    Counterfactual,
}

/// One training record: instruction, target answer and the anchors it is scored against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentedRecord {
    pub record_id: String,
    pub instruction: String,
    pub expected_answer: String,
    pub anchors: Vec<String>,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sibling_id: Option<String>,
    /// Type of the source question; counter-factual siblings inherit it.
    pub vh_type: VhType,
    pub style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_anchor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_token: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordCheckError {
    #[error(transparent)]
    Anchors(#[from] ScoreError),
    #[error("instruction: {0}")]
    Token(#[from] DslError),
    #[error("instruction: {0}")]
    Instruction(String),
    #[error("counter-factual check: {0}")]
    Unsound(String),
}

impl AugmentedRecord {
    pub fn anchor_set(&self, lexicons: &Lexicons) -> Result<AnchorSet, RecordCheckError> {
        Ok(parse_anchor_set(&self.anchors, lexicons)?)
    }

    pub fn question_context(&self) -> QuestionContext {
        let vh_type = match (&self.task, self.check_token.as_deref().map(dsl::parse_token)) {
            (Task::Counterfactual, Some(Ok(tok))) => tok.vh_type,
            _ => self.vh_type,
        };
        QuestionContext {
            vh_type,
            subject: self.question_subject.clone(),
        }
    }

    /// The anchor the question targets: `target_anchor`, else the first anchor of `vh_type`.
    pub fn target<'s>(&self, anchors: &'s AnchorSet) -> Option<&'s FactualAnchor> {
        match &self.target_anchor {
            Some(id) => anchors.get(id),
            None => anchors.iter().find(|a| a.vh_type() == self.vh_type),
        }
    }

    /// Checks anchors, instruction tokens and, for counter-factuals, that the
    /// check contradicts exactly one anchor.
    pub fn validate(&self, lexicons: &Lexicons) -> Result<(), RecordCheckError> {
        let anchors = self.anchor_set(lexicons)?;
        let tokens = dsl::find_tokens(&self.instruction)?;
        if let Some(id) = &self.target_anchor {
            if anchors.get(id).is_none() {
                return Err(RecordCheckError::Instruction(format!("target anchor {id:?} is not in anchors")));
            }
        }
        if self.style == Style::NoFactTokens && !tokens.is_empty() {
            return Err(RecordCheckError::Instruction("bare instruction contains fact tokens".into()));
        }
        match self.task {
            Task::Original => {
                if self.style == Style::Full {
                    let [(_, tok)] = tokens.as_slice() else {
                        return Err(RecordCheckError::Instruction(format!(
                            "expected exactly one query token, found {}",
                            tokens.len()
                        )));
                    };
                    if tok.kind != TokenKind::Query || tok.vh_type != self.vh_type {
                        return Err(RecordCheckError::Instruction(format!(
                            "expected a {} query token, found {tok}",
                            self.vh_type.token()
                        )));
                    }
                }
                Ok(())
            }
            Task::Counterfactual => {
                let text = self
                    .check_token
                    .as_deref()
                    .ok_or_else(|| RecordCheckError::Unsound("missing check_token".into()))?;
                let check = dsl::parse_token(text)?;
                if check.kind != TokenKind::Check {
                    return Err(RecordCheckError::Unsound(format!("{text} is not a CHECK token")));
                }
                if self.style == Style::Full {
                    match tokens.as_slice() {
                        [(_, tok)] if *tok == check => {}
                        _ => {
                            return Err(RecordCheckError::Instruction(format!(
                                "expected exactly the check token {text}, found {} token(s)",
                                tokens.len()
                            )))
                        }
                    }
                }
                let value = dsl::token_value(&check, self.question_subject.as_deref(), lexicons)?;
                let pairings = pair_claims(&anchors, &[Claim::new(value, Span::new(0, 1))], lexicons);
                let hits: Vec<&str> = pairings
                    .iter()
                    .filter(|p| p.indicator() == 1)
                    .map(|p| p.anchor().anchor_id())
                    .collect();
                match (hits.as_slice(), &self.target_anchor) {
                    ([hit], Some(target)) if hit == target => Ok(()),
                    ([_], None) => Ok(()),
                    _ => Err(RecordCheckError::Unsound(format!(
                        "expected one contradicted anchor, got {hits:?}"
                    ))),
                }
            }
        }
    }
}
