//! Scene records to fact-aware training records.
//!
//! A [`SceneRecord`] is the structured ground truth for one image and its
//! question. Each scene yields an ORIGINAL record whose instruction carries a
//! query token and, depending on the configured ratio, a COUNTERFACTUAL
//! sibling whose instruction carries a deliberately false check token.

mod counterfactual;
mod dataset;
mod instruction;
mod record;
mod scene;
mod split;
mod templates;

use thiserror::Error;

pub use counterfactual::{derive_seed, generate_counterfactual, Counterfactual};
pub use dataset::{augment_dataset, augment_records, AugmentConfig, AugmentSummary, TypeCounts};
pub use instruction::{format_instruction, InstructionMode, Style};
pub use record::{AugmentedRecord, RecordCheckError, Task};
pub use scene::{derive_anchors, RelationKind, SceneObject, SceneRecord, SceneRelation};
pub use split::{split_dataset, split_lines, train_size, SplitCounts, SplitSummary};
pub use templates::{render, CounterfactualTemplate, OriginalTemplates, TemplateError, Templates};

use crate::jsonl::{JsonlError, LineError};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid scene {record_id:?}: {reason}")]
    InvalidScene { record_id: String, reason: String },
    #[error("record {record_id:?}: no perturbation yields a value distinct from the truth ({reason})")]
    ExhaustedPerturbations { record_id: String, reason: String },
    #[error("{} invalid input line(s); first: {}", .0.len(), .0[0])]
    Lines(Vec<LineError>),
    #[error("type {vh_type} has {count} record(s); at least 2 are needed to split")]
    TypeTooSmall { vh_type: crate::fact::VhType, count: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("counter-factual ratio must lie in [0, 1], got {0}")]
    BadRatio(f64),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

impl AugmentError {
    pub(crate) fn invalid(record_id: &str, reason: impl Into<String>) -> Self {
        AugmentError::InvalidScene {
            record_id: record_id.to_string(),
            reason: reason.into(),
        }
    }
}
