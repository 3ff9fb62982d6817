//! Binary inconsistency indicator between a claim and its anchor.
//!
//! Per-type semantics:
//!
//! | type                  | indicator is 1 when                                     |
//! |-----------------------|---------------------------------------------------------|
//! | Counting              | counts differ                                           |
//! | Existence             | presence differs                                        |
//! | Color, Shape          | canonical tokens differ (after synonym mapping)         |
//! | Orientation           | canonical tokens differ (strict inequality)             |
//! | OCR                   | normalized texts differ                                 |
//! | Size, Position        | relations differ once the claim is oriented like the anchor |
//!
//! A relational claim over the swapped subject pair is first rewritten with
//! the inverse relation (`cat RIGHT_OF dog` becomes `dog LEFT_OF cat`). When
//! the relation has no inverse (`INSIDE`, `ON`) the swapped claim cannot hold
//! together with the anchor and scores 1. No two distinct relations over the
//! same ordered pair are compatible.

use thiserror::Error;

use crate::extract::normalize_ocr;
use crate::fact::{AnchorKey, Claim, FactValue, FactualAnchor, PositionRelation, SizeRelation};
use crate::lexicon::{Lexicons, TokenLexicon};
use crate::fact::AnchorSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContradictionError {
    #[error("claim key {claim} does not match anchor key {anchor}")]
    KeyMismatch { claim: AnchorKey, anchor: AnchorKey },
}

/// One anchor with its paired claim (if any) and the resulting indicator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingResult {
    anchor: FactualAnchor,
    claim: Option<Claim>,
    indicator: u8,
}

impl PairingResult {
    pub fn anchor(&self) -> &FactualAnchor {
        &self.anchor
    }

    pub fn claim(&self) -> Option<&Claim> {
        self.claim.as_ref()
    }

    /// 0 or 1; always 0 when no claim was paired.
    pub fn indicator(&self) -> u8 {
        self.indicator
    }
}

/// Whether the claim's key pairs with the anchor's key (relational keys match in either order).
pub fn keys_match(claim: &Claim, anchor: &FactualAnchor) -> bool {
    let ck = claim.key();
    let ak = anchor.key();
    ck == ak || ak.flipped().is_some_and(|f| f == ck)
}

fn same_token(vocab: &TokenLexicon, a: &str, b: &str) -> bool {
    let a = vocab.canonicalize(a).unwrap_or(a);
    let b = vocab.canonicalize(b).unwrap_or(b);
    a == b
}

enum Orientation {
    Same,
    Swapped,
}

fn orientation(claim: &Claim, anchor: &FactualAnchor) -> Orientation {
    if claim.key() == anchor.key() {
        Orientation::Same
    } else {
        Orientation::Swapped
    }
}

fn size_contradicts(claim: SizeRelation, anchor: SizeRelation, o: Orientation) -> bool {
    let oriented = match o {
        Orientation::Same => claim,
        Orientation::Swapped => claim.inverse(),
    };
    oriented != anchor
}

fn position_contradicts(claim: PositionRelation, anchor: PositionRelation, o: Orientation) -> bool {
    let oriented = match o {
        Orientation::Same => Some(claim),
        Orientation::Swapped => claim.inverse(),
    };
    oriented != Some(anchor)
}

/// Returns 1 when `claim` contradicts `anchor`, else 0.
pub fn contradicts(claim: &Claim, anchor: &FactualAnchor, lexicons: &Lexicons) -> Result<u8, ContradictionError> {
    if !keys_match(claim, anchor) {
        return Err(ContradictionError::KeyMismatch {
            claim: claim.key(),
            anchor: anchor.key(),
        });
    }
    let differs = match (claim.value(), anchor.value()) {
        (FactValue::Counting { count: c, .. }, FactValue::Counting { count: a, .. }) => c != a,
        (FactValue::Existence { present: c, .. }, FactValue::Existence { present: a, .. }) => c != a,
        (FactValue::Color { color: c, .. }, FactValue::Color { color: a, .. }) => !same_token(lexicons.colors(), c, a),
        (FactValue::Shape { shape: c, .. }, FactValue::Shape { shape: a, .. }) => !same_token(lexicons.shapes(), c, a),
        (FactValue::Orientation { orientation: c, .. }, FactValue::Orientation { orientation: a, .. }) => {
            !same_token(lexicons.orientations(), c, a)
        }
        (FactValue::Ocr { text: c, .. }, FactValue::Ocr { text: a, .. }) => normalize_ocr(c) != normalize_ocr(a),
        (FactValue::Size { relation: c, .. }, FactValue::Size { relation: a, .. }) => {
            size_contradicts(*c, *a, orientation(claim, anchor))
        }
        (FactValue::Position { relation: c, .. }, FactValue::Position { relation: a, .. }) => {
            position_contradicts(*c, *a, orientation(claim, anchor))
        }
        // Matching keys imply matching types.
        _ => unreachable!("keys matched across different value types"),
    };
    Ok(u8::from(differs))
}

/// Pairs each anchor with the earliest (by span) claim sharing its key.
/// Output has one entry per anchor, in anchor order.
pub fn pair_claims(anchors: &AnchorSet, claims: &[Claim], lexicons: &Lexicons) -> Vec<PairingResult> {
    anchors
        .iter()
        .map(|anchor| {
            let claim = claims
                .iter()
                .filter(|c| keys_match(c, anchor))
                .min_by_key(|c| c.source_span())
                .cloned();
            let indicator = match &claim {
                Some(c) => contradicts(c, anchor, lexicons).expect("paired by key"),
                None => 0,
            };
            PairingResult {
                anchor: anchor.clone(),
                claim,
                indicator,
            }
        })
        .collect()
}
