//! Factual-consistency penalty and the combined objective.
//!
//! The penalty is `Σ γ(type(a)) · I(c, a)` over the anchors of a record and
//! the combined objective is `ce + λ · penalty`. Cross-entropy comes from the
//! caller's training framework. The penalty is a discrete score; no gradient
//! or differentiable relaxation is provided here.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contradiction::{pair_claims, PairingResult};
use crate::dsl::{self, DslError};
use crate::extract::{extract_claims, AnswerText, ExtractError, QuestionContext};
use crate::fact::{AnchorSet, FactError, VhType};
use crate::lexicon::Lexicons;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("lambda must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("gamma for {0} must be finite and non-negative, got {1}")]
    BadGamma(VhType, f64),
    #[error("unknown gamma key {0:?}")]
    UnknownGammaKey(String),
}

/// λ and the per-type γ weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    lambda: f64,
    gamma: [f64; 8],
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            lambda: 1.0,
            gamma: [1.0; 8],
        }
    }
}

fn check_weight(w: f64) -> bool {
    w.is_finite() && w >= 0.0
}

/// `[scoring]` section of the TOML config. Missing gamma keys default to 1.0.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringSection {
    pub lambda: Option<f64>,
    #[serde(default)]
    pub gamma: BTreeMap<String, f64>,
}

impl ScoringConfig {
    pub fn new(lambda: f64, gamma: [f64; 8]) -> Result<Self, ConfigError> {
        if !check_weight(lambda) {
            return Err(ConfigError::BadLambda(lambda));
        }
        for t in VhType::ALL {
            if !check_weight(gamma[t.index()]) {
                return Err(ConfigError::BadGamma(t, gamma[t.index()]));
            }
        }
        Ok(ScoringConfig { lambda, gamma })
    }

    pub fn from_section(section: &ScoringSection) -> Result<Self, ConfigError> {
        let mut gamma = [1.0; 8];
        for (key, w) in &section.gamma {
            let t = VhType::from_config_key(key).ok_or_else(|| ConfigError::UnknownGammaKey(key.clone()))?;
            gamma[t.index()] = *w;
        }
        Self::new(section.lambda.unwrap_or(1.0), gamma)
    }

    pub fn to_section(&self) -> ScoringSection {
        ScoringSection {
            lambda: Some(self.lambda),
            gamma: VhType::ALL
                .iter()
                .map(|t| (t.config_key().to_string(), self.gamma[t.index()]))
                .collect(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self, vh_type: VhType) -> f64 {
        self.gamma[vh_type.index()]
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ConfigError> {
        Self::new(lambda, self.gamma)
    }

    pub fn with_gamma(&self, vh_type: VhType, weight: f64) -> Result<Self, ConfigError> {
        let mut gamma = self.gamma;
        gamma[vh_type.index()] = weight;
        Self::new(self.lambda, gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorContribution {
    pub anchor_id: String,
    pub vh_type: VhType,
    pub indicator: u8,
    pub gamma: f64,
    pub contribution: f64,
}

/// Per-anchor terms of the penalty and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FclBreakdown {
    pub per_anchor: Vec<AnchorContribution>,
    pub total: f64,
}

impl FclBreakdown {
    /// Sums `γ · indicator` in anchor order.
    pub fn from_pairings(pairings: &[PairingResult], config: &ScoringConfig) -> Self {
        let per_anchor: Vec<AnchorContribution> = pairings
            .iter()
            .map(|p| {
                let gamma = config.gamma(p.anchor().vh_type());
                AnchorContribution {
                    anchor_id: p.anchor().anchor_id().to_string(),
                    vh_type: p.anchor().vh_type(),
                    indicator: p.indicator(),
                    gamma,
                    contribution: gamma * f64::from(p.indicator()),
                }
            })
            .collect();
        let total = per_anchor.iter().fold(0.0, |acc, c| acc + c.contribution);
        FclBreakdown { per_anchor, total }
    }

    pub fn indicators(&self) -> Vec<u8> {
        self.per_anchor.iter().map(|c| c.indicator).collect()
    }
}

/// Extracts claims from `answer`, pairs them with `anchors` and sums the weighted indicators.
pub fn fcl_score(answer: &AnswerText, anchors: &AnchorSet, config: &ScoringConfig, lexicons: &Lexicons) -> FclBreakdown {
    let claims = extract_claims(answer, lexicons);
    let pairings = pair_claims(anchors, &claims, lexicons);
    FclBreakdown::from_pairings(&pairings, config)
}

/// `ce + λ · fcl`. `ce_loss` must be non-negative.
pub fn total_loss(ce_loss: f64, fcl: &FclBreakdown, config: &ScoringConfig) -> f64 {
    debug_assert!(ce_loss >= 0.0, "cross-entropy must be non-negative");
    ce_loss + config.lambda() * fcl.total
}

/// One unparsed scoring input: answer text plus anchor strings in the DSL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreRequest {
    pub record_id: String,
    pub answer: String,
    pub anchors: Vec<String>,
    pub question: Option<QuestionContext>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoreError {
    #[error(transparent)]
    EmptyAnswer(#[from] ExtractError),
    #[error("anchor {index}: {source}")]
    Anchor {
        index: usize,
        #[source]
        source: DslError,
    },
    #[error(transparent)]
    AnchorSet(#[from] FactError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("record {record_id}: {error}")]
pub struct RecordError {
    pub record_id: String,
    pub error: ScoreError,
}

/// Parses DSL anchor strings into an anchor set.
pub fn parse_anchor_set<S: AsRef<str>>(lines: &[S], lexicons: &Lexicons) -> Result<AnchorSet, ScoreError> {
    let anchors = lines
        .iter()
        .enumerate()
        .map(|(index, s)| dsl::parse_anchor(s.as_ref(), lexicons).map_err(|source| ScoreError::Anchor { index, source }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnchorSet::new(anchors)?)
}

fn score_one(req: &ScoreRequest, config: &ScoringConfig, lexicons: &Lexicons) -> Result<FclBreakdown, ScoreError> {
    let mut answer = AnswerText::new(req.record_id.clone(), req.answer.clone())?;
    if let Some(q) = &req.question {
        answer = answer.with_question(q.vh_type, q.subject.clone());
    }
    let anchors = parse_anchor_set(&req.anchors, lexicons)?;
    Ok(fcl_score(&answer, &anchors, config, lexicons))
}

/// Scores every request independently; output order equals input order and a
/// failing record does not affect the others.
pub fn score_batch(
    requests: &[ScoreRequest],
    config: &ScoringConfig,
    lexicons: &Lexicons,
) -> Vec<Result<FclBreakdown, RecordError>> {
    requests
        .par_iter()
        .map(|req| {
            score_one(req, config, lexicons).map_err(|error| RecordError {
                record_id: req.record_id.clone(),
                error,
            })
        })
        .collect()
}
