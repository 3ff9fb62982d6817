//! Factual-anchor toolkit for visual hallucination data.
//!
//! The pipeline runs augment → format → score → evaluate:
//!
//! * [`fact`] and [`dsl`] define typed facts and their bracketed notation
//!   (`[FACT: COUNT=2]`, `[CHECK_COLOR: RED]`).
//! * [`extract`] turns answer text into typed claims using [`lexicon`] vocabularies.
//! * [`contradiction`] pairs claims with anchors and computes the 0/1 indicator.
//! * [`scoring`] sums weighted indicators and combines them with cross-entropy.
//! * [`augment`] derives anchors from scene records, generates counter-factual
//!   prompts and fact-aware instructions, and splits datasets.
//! * [`eval`] computes accuracy and F1 reports and λ sweeps.

pub mod augment;
pub mod config;
pub mod contradiction;
pub mod dsl;
pub mod eval;
pub mod extract;
pub mod fact;
pub mod jsonl;
pub mod lexicon;
pub mod scoring;

pub use contradiction::{contradicts, pair_claims, PairingResult};
pub use extract::{extract_claims, normalize_ocr, AnswerText};
pub use fact::{AnchorSet, Claim, FactValue, FactualAnchor, VhType};
pub use lexicon::Lexicons;
pub use scoring::{fcl_score, score_batch, total_loss, FclBreakdown, ScoringConfig};

/// Version string echoed in provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
