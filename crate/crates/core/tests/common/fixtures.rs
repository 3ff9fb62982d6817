//! Deterministic scene fixtures. `cargo run --example make_fixtures` writes the
//! shipped copies under `data/fixtures/`; tests regenerate and compare.

use std::path::{Path, PathBuf};

use gvf_core::augment::{RelationKind, SceneObject, SceneRecord, SceneRelation};
use gvf_core::{Lexicons, VhType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE_SEED: u64 = 20240917;

const THINGS: &[&str] = &[
    "apple", "bag", "ball", "book", "bottle", "bowl", "box", "cake", "chair", "clock", "cup", "hat", "kite",
    "lamp", "laptop", "mug", "phone", "plate", "shoe", "umbrella", "vase",
];
const ANIMALS: &[&str] = &["bird", "cat", "cow", "dog", "duck", "elephant", "giraffe", "horse", "zebra"];
const TEXT_CARRIERS: &[&str] = &["sign", "book", "mug", "bag", "box"];
const COLORS: &[&str] = &["black", "blue", "brown", "green", "orange", "pink", "purple", "red", "white", "yellow"];
const SHAPES: &[&str] = &["cylindrical", "hexagonal", "oval", "rectangular", "round", "square", "triangular"];
const ORIENTATIONS: &[&str] = &["horizontal", "inverted", "sideways", "tilted", "upright", "vertical"];
const WORDS: &[&str] = &["STOP", "OPEN", "EXIT", "SALE", "CAFE", "HOTEL", "PARKING", "WELCOME", "FRESH BREAD", "NO ENTRY"];
const SIZES: &[(&str, &str)] = &[("LARGER", "larger than"), ("SMALLER", "smaller than"), ("EQUAL", "the same size as")];
const POSITIONS: &[(&str, &str)] = &[
    ("LEFT_OF", "to the left of"),
    ("RIGHT_OF", "to the right of"),
    ("ABOVE", "above"),
    ("BELOW", "below"),
    ("INSIDE", "inside"),
    ("ON", "on"),
];

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("fixtures")
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty")
}

fn two_distinct<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> (&'a str, &'a str) {
    let v: Vec<&str> = xs.choose_multiple(rng, 2).copied().collect();
    (v[0], v[1])
}

fn filler<R: Rng>(rng: &mut R, avoid: &[&str]) -> SceneObject {
    let pool: Vec<&str> = THINGS.iter().chain(ANIMALS).copied().filter(|n| !avoid.contains(n)).collect();
    let mut o = SceneObject::new(pick(rng, &pool), rng.gen_range(1..=3));
    o.color = Some(pick(rng, COLORS).to_string());
    o
}

fn scene<R: Rng>(rng: &mut R, vh_type: VhType, index: usize, prefix: &str) -> SceneRecord {
    let record_id = format!("{prefix}-{}-{index:03}", vh_type.config_key());
    let (mut objects, mut relations) = (Vec::new(), Vec::new());
    let (question, answer, target): (String, String, String);
    match vh_type {
        VhType::Existence => {
            let t = pick(rng, ANIMALS);
            let present = index.is_multiple_of(2);
            objects.push(SceneObject::new(t, u32::from(present)));
            objects.push(filler(rng, &[t]));
            let a = if t.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
            question = format!("Is there {a} {t} in the image?");
            answer = if present {
                format!("Yes, there is {a} {t} in the image.")
            } else {
                format!("No, there is no {t} in the image.")
            };
            target = t.to_string();
        }
        VhType::Shape | VhType::Color | VhType::Orientation => {
            let t = pick(rng, THINGS);
            let mut o = SceneObject::new(t, 1);
            let (value, q) = match vh_type {
                VhType::Shape => {
                    let s = pick(rng, SHAPES);
                    o.shape = Some(s.to_string());
                    (s, format!("What shape is the {t}?"))
                }
                VhType::Color => {
                    let c = pick(rng, COLORS);
                    o.color = Some(c.to_string());
                    (c, format!("What color is the {t}?"))
                }
                _ => {
                    let r = pick(rng, ORIENTATIONS);
                    o.orientation = Some(r.to_string());
                    (r, format!("How is the {t} oriented?"))
                }
            };
            objects.push(o);
            objects.push(filler(rng, &[t]));
            question = q;
            answer = format!("The {t} is {value}.");
            target = t.to_string();
        }
        VhType::Ocr => {
            let t = pick(rng, TEXT_CARRIERS);
            let words = pick(rng, WORDS);
            let mut o = SceneObject::new(t, 1);
            o.text = Some(words.to_string());
            objects.push(o);
            objects.push(filler(rng, &[t]));
            question = format!("What does the text on the {t} say?");
            answer = format!("The text on the {t} reads \"{words}\".");
            target = t.to_string();
        }
        VhType::Size | VhType::Position => {
            let (a, b) = two_distinct(rng, if index.is_multiple_of(2) { ANIMALS } else { THINGS });
            objects.push(SceneObject::new(a, 1));
            objects.push(SceneObject::new(b, 1));
            let (kind, (token, phrase)) = if vh_type == VhType::Size {
                (RelationKind::Size, *SIZES.choose(rng).unwrap())
            } else {
                (RelationKind::Position, *POSITIONS.choose(rng).unwrap())
            };
            relations.push(SceneRelation {
                subject_a: a.to_string(),
                subject_b: b.to_string(),
                kind,
                relation: token.to_string(),
            });
            question = if vh_type == VhType::Size {
                format!("How does the size of the {a} compare with the {b}?")
            } else {
                format!("Where is the {a} relative to the {b}?")
            };
            answer = format!("The {a} is {phrase} the {b}.");
            target = a.to_string();
        }
        VhType::Counting => {
            let t = pick(rng, THINGS);
            let n = rng.gen_range(0..=12);
            objects.push(SceneObject::new(t, n));
            objects.push(filler(rng, &[t]));
            question = format!("How many {} are in the image?", Lexicons::default_fixture().plural(t));
            answer = format!("I count {n}.");
            target = t.to_string();
        }
    }
    SceneRecord {
        record_id,
        objects,
        relations,
        question,
        answer,
        vh_type,
        target_object: Some(target),
    }
}

/// `per_type` scenes of every type, grouped by type in canonical type order.
pub fn scenes(per_type: usize, prefix: &str) -> Vec<SceneRecord> {
    let mut out = Vec::with_capacity(per_type * 8);
    for t in VhType::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED ^ (t.index() as u64 + 1));
        out.extend((0..per_type).map(|i| scene(&mut rng, t, i, prefix)));
    }
    out
}

/// Correct-prediction counts per type for the open-ended evaluation fixture.
pub const OEQ_CORRECT: [(VhType, usize); 8] = [
    (VhType::Existence, 31),
    (VhType::Shape, 38),
    (VhType::Color, 30),
    (VhType::Orientation, 20),
    (VhType::Ocr, 22),
    (VhType::Size, 40),
    (VhType::Position, 58),
    (VhType::Counting, 30),
];

pub const OEQ_PER_TYPE: usize = 100;

const NON_ANSWERS: &[&str] = &[
    "I cannot tell from this image.",
    "The picture is too blurry to say.",
    "It is hard to determine.",
    "Sorry, I am not sure.",
];

/// Prediction text for gold record `i` of its type: the reference answer for
/// the first `correct` records, otherwise a non-answer.
pub fn oeq_prediction(expected: &str, i: usize, correct: usize) -> String {
    if i < correct {
        expected.to_string()
    } else {
        NON_ANSWERS[i % NON_ANSWERS.len()].to_string()
    }
}

pub fn scenes_jsonl(per_type: usize, prefix: &str) -> String {
    gvf_core::jsonl::to_jsonl(None, &scenes(per_type, prefix))
}

/// Gold records (originals only) and predictions for the open-ended fixture.
pub fn oeq_files() -> Result<(String, String), gvf_core::augment::AugmentError> {
    use gvf_core::augment::{augment_records, AugmentConfig, Templates};
    use gvf_core::eval::Prediction;

    let cfg = AugmentConfig {
        counterfactual_ratio: 0.0,
        ..AugmentConfig::default()
    };
    let lex = Lexicons::default_fixture();
    let (gold, _) = augment_records(&scenes(OEQ_PER_TYPE, "e"), &cfg, &lex, &Templates::default_fixture())?;
    let mut preds = Vec::with_capacity(gold.len());
    for (t, correct) in OEQ_CORRECT {
        for (i, g) in gold.iter().filter(|g| g.vh_type == t).enumerate() {
            preds.push(Prediction {
                record_id: g.record_id.clone(),
                text: oeq_prediction(&g.expected_answer, i, correct),
            });
        }
    }
    Ok((gvf_core::jsonl::to_jsonl(None, &gold), gvf_core::jsonl::to_jsonl(None, &preds)))
}
