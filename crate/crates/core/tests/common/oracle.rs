//! Independent reference implementations used as test oracles.

use std::collections::HashMap;

use gvf_core::fact::{PositionRelation, SizeRelation};
use gvf_core::{Claim, FactValue, FactualAnchor, Lexicons, VhType};
use rand::seq::SliceRandom;
use rand::Rng;

/// Hand-written inverse table for relations read with the subjects swapped.
pub fn swapped_size(r: &str) -> Option<&'static str> {
    match r {
        "LARGER" => Some("SMALLER"),
        "SMALLER" => Some("LARGER"),
        "EQUAL" => Some("EQUAL"),
        _ => panic!("unknown size relation {r}"),
    }
}

pub fn swapped_position(r: &str) -> Option<&'static str> {
    match r {
        "LEFT_OF" => Some("RIGHT_OF"),
        "RIGHT_OF" => Some("LEFT_OF"),
        "ABOVE" => Some("BELOW"),
        "BELOW" => Some("ABOVE"),
        "INSIDE" | "ON" => None,
        _ => panic!("unknown position relation {r}"),
    }
}

/// Synonym-to-canonical map built straight from a lexicon TOML section.
pub fn canon_map(lex: &Lexicons, vh_type: VhType) -> HashMap<String, String> {
    let vocab = match vh_type {
        VhType::Color => lex.colors(),
        VhType::Shape => lex.shapes(),
        VhType::Orientation => lex.orientations(),
        _ => panic!("no vocabulary for {vh_type:?}"),
    };
    let mut m: HashMap<String, String> = vocab.canonical().map(|c| (c.to_string(), c.to_string())).collect();
    m.extend(vocab.synonyms().map(|(s, c)| (s.to_string(), c.to_string())));
    m
}

fn relation_triple(v: &FactValue) -> Option<(&str, &str, &'static str, bool)> {
    match v {
        FactValue::Size {
            subject_a,
            subject_b,
            relation,
        } => Some((subject_a, subject_b, relation.token(), true)),
        FactValue::Position {
            subject_a,
            subject_b,
            relation,
        } => Some((subject_a, subject_b, relation.token(), false)),
        _ => None,
    }
}

/// Whether a claim and an anchor talk about the same thing.
pub fn same_key(c: &FactValue, a: &FactValue) -> bool {
    if c.vh_type() != a.vh_type() {
        return false;
    }
    if let (Some((ca, cb, _, _)), Some((aa, ab, _, _))) = (relation_triple(c), relation_triple(a)) {
        return (ca == aa && cb == ab) || (ca == ab && cb == aa);
    }
    c.subject() == a.subject()
}

/// Expected indicator for a claim/anchor pair with matching keys.
pub fn expected_indicator(c: &FactValue, a: &FactValue, lex: &Lexicons) -> u8 {
    assert!(same_key(c, a), "oracle called on unmatched keys: {c:?} / {a:?}");
    let differs = match (c, a) {
        (FactValue::Counting { count: x, .. }, FactValue::Counting { count: y, .. }) => x != y,
        (FactValue::Existence { present: x, .. }, FactValue::Existence { present: y, .. }) => x != y,
        (FactValue::Color { color: x, .. }, FactValue::Color { color: y, .. })
        | (FactValue::Shape { shape: x, .. }, FactValue::Shape { shape: y, .. })
        | (FactValue::Orientation { orientation: x, .. }, FactValue::Orientation { orientation: y, .. }) => {
            let m = canon_map(lex, c.vh_type());
            m.get(x.as_str()).unwrap_or(x) != m.get(y.as_str()).unwrap_or(y)
        }
        (FactValue::Ocr { text: x, .. }, FactValue::Ocr { text: y, .. }) => {
            let norm = |s: &str| {
                s.to_lowercase()
                    .chars()
                    .filter(|ch| ch.is_alphanumeric() || ch.is_whitespace())
                    .collect::<String>()
                    .split_whitespace()
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            norm(x) != norm(y)
        }
        _ => {
            let (ca, _, cr, is_size) = relation_triple(c).unwrap();
            let (aa, _, ar, _) = relation_triple(a).unwrap();
            if ca == aa {
                cr != ar
            } else {
                let inv = if is_size { swapped_size(cr) } else { swapped_position(cr) };
                inv != Some(ar)
            }
        }
    };
    u8::from(differs)
}

/// Σ γ·I with earliest-claim pairing, computed with plain loops.
pub fn brute_force_fcl(anchors: &[FactualAnchor], claims: &[Claim], gamma: &[f64; 8], lex: &Lexicons) -> (f64, Vec<u8>) {
    let mut sum = 0.0;
    let mut indicators = Vec::new();
    for a in anchors {
        let mut best: Option<&Claim> = None;
        for c in claims {
            if same_key(c.value(), a.value()) && best.is_none_or(|b| c.source_span() < b.source_span()) {
                best = Some(c);
            }
        }
        let i = best.map_or(0, |c| expected_indicator(c.value(), a.value(), lex));
        indicators.push(i);
        sum += gamma[a.vh_type().index()] * f64::from(i);
    }
    (sum, indicators)
}

const SUBJECTS: &[&str] = &["apple", "ball", "cat", "dog", "cup", "sign", "tree", "car", "vase", "book"];
const OCR_WORDS: &[&str] = &["stop", "open", "exit", "sale", "cafe", "route 66", "no entry", "welcome home"];

pub fn pick<R: Rng>(rng: &mut R, xs: &[&'static str]) -> String {
    xs.choose(rng).unwrap().to_string()
}

fn pick_from<R: Rng>(rng: &mut R, xs: Vec<&str>) -> String {
    xs.choose(rng).unwrap().to_string()
}

/// A random well-formed value of `vh_type` over the fixture vocabulary.
pub fn random_value<R: Rng>(rng: &mut R, vh_type: VhType, lex: &Lexicons) -> FactValue {
    let subject = pick(rng, SUBJECTS);
    match vh_type {
        VhType::Existence => FactValue::Existence {
            subject,
            present: rng.gen(),
        },
        VhType::Shape => FactValue::Shape {
            subject,
            shape: pick_from(rng, lex.shapes().canonical().collect()),
        },
        VhType::Color => FactValue::Color {
            subject,
            color: pick_from(rng, lex.colors().canonical().collect()),
        },
        VhType::Orientation => FactValue::Orientation {
            subject,
            orientation: pick_from(rng, lex.orientations().canonical().collect()),
        },
        VhType::Ocr => FactValue::Ocr {
            text: pick(rng, OCR_WORDS),
            subject: rng.gen_bool(0.5).then_some(subject),
        },
        VhType::Size | VhType::Position => {
            let mut b = pick(rng, SUBJECTS);
            while b == subject {
                b = pick(rng, SUBJECTS);
            }
            if vh_type == VhType::Size {
                FactValue::Size {
                    subject_a: subject,
                    subject_b: b,
                    relation: *SizeRelation::ALL.choose(rng).unwrap(),
                }
            } else {
                FactValue::Position {
                    subject_a: subject,
                    subject_b: b,
                    relation: *PositionRelation::ALL.choose(rng).unwrap(),
                }
            }
        }
        VhType::Counting => FactValue::Counting {
            count: rng.gen_range(0..=50),
            subject: rng.gen_bool(0.3).then_some(subject),
        },
    }
}

/// Flips the subject order of a relational value, keeping its meaning when the
/// relation has an inverse.
pub fn swap_subjects(v: &FactValue) -> FactValue {
    match v.clone() {
        FactValue::Size {
            subject_a,
            subject_b,
            relation,
        } => FactValue::Size {
            subject_a: subject_b,
            subject_b: subject_a,
            relation,
        },
        FactValue::Position {
            subject_a,
            subject_b,
            relation,
        } => FactValue::Position {
            subject_a: subject_b,
            subject_b: subject_a,
            relation,
        },
        other => other,
    }
}
