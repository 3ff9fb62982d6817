use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::scene::SceneRecord;
use super::templates::{render, Templates};
use super::AugmentError;
use crate::dsl;
use crate::fact::{AnchorSet, FactValue, FactualAnchor, PositionRelation, SizeRelation, VhType};
use crate::lexicon::{Lexicons, TokenLexicon};

/// A deliberately false yes/no question about one anchor, with its correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual {
    pub prompt: String,
    pub expected_answer: String,
    /// `anchor_id` of the contradicted anchor.
    pub target_anchor: String,
    /// The perturbed value the prompt asserts.
    pub claim: FactValue,
    pub check_token: String,
    /// Anchors of the record; existence checks add the absent object here.
    pub anchors: AnchorSet,
    /// Subject a CHECK token without its own subject refers to.
    pub question_subject: Option<String>,
}

/// Stable per-record seed, independent of processing order.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

struct Ctx<'a> {
    scene: &'a SceneRecord,
    lexicons: &'a Lexicons,
    templates: &'a Templates,
}

impl Ctx<'_> {
    fn distractors(&self) -> Vec<&str> {
        self.templates
            .distractors()
            .iter()
            .map(String::as_str)
            .filter(|d| !self.scene.objects.iter().any(|o| o.name == *d))
            .collect()
    }

    fn vocab(&self, vh_type: VhType) -> &TokenLexicon {
        match vh_type {
            VhType::Color => self.lexicons.colors(),
            VhType::Shape => self.lexicons.shapes(),
            _ => self.lexicons.orientations(),
        }
    }

    fn ocr_positions(&self, text: &str) -> Vec<usize> {
        text.split(' ')
            .enumerate()
            .filter(|(_, w)| self.templates.ocr_substitutions().iter().any(|s| s != w))
            .map(|(i, _)| i)
            .collect()
    }

    fn can_perturb(&self, anchor: &FactualAnchor) -> bool {
        match anchor.value() {
            FactValue::Counting { .. } | FactValue::Size { .. } | FactValue::Position { .. } => true,
            FactValue::Existence { present, .. } => !present || !self.distractors().is_empty(),
            FactValue::Color { color: v, .. }
            | FactValue::Shape { shape: v, .. }
            | FactValue::Orientation { orientation: v, .. } => {
                self.vocab(anchor.vh_type()).canonical().any(|t| t != v)
            }
            // A CHECK token cannot name an OCR subject, so only record-level text qualifies.
            FactValue::Ocr { text, subject } => subject.is_none() && !self.ocr_positions(text).is_empty(),
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty choice")
}

fn number_words(lexicons: &Lexicons, n: u32) -> String {
    lexicons.number_word(n).map_or_else(|| n.to_string(), str::to_string)
}

fn article(noun: &str) -> &'static str {
    if noun.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

/// Picks an anchor and asserts a value guaranteed to differ from it.
///
/// The anchor is a seeded uniform choice among perturbable anchors of the
/// scene's type, falling back to all perturbable anchors. Present objects
/// are checked through an absent distractor noun, which is added to the
/// returned anchors as `present = false`.
pub fn generate_counterfactual(
    scene: &SceneRecord,
    anchors: &AnchorSet,
    rng_seed: u64,
    lexicons: &Lexicons,
    templates: &Templates,
) -> Result<Counterfactual, AugmentError> {
    let id = scene.record_id.as_str();
    if anchors.is_empty() {
        return Err(AugmentError::invalid(id, "no anchors"));
    }
    let ctx = Ctx {
        scene,
        lexicons,
        templates,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let of_type: Vec<&FactualAnchor> = anchors
        .iter()
        .filter(|a| a.vh_type() == scene.vh_type && ctx.can_perturb(a))
        .collect();
    let candidates = if of_type.is_empty() {
        anchors.iter().filter(|a| ctx.can_perturb(a)).collect()
    } else {
        of_type
    };
    if candidates.is_empty() {
        return Err(AugmentError::ExhaustedPerturbations {
            record_id: id.to_string(),
            reason: "no anchor admits a distinct value".to_string(),
        });
    }
    let chosen = *pick(&mut rng, &candidates);

    let mut anchors = anchors.clone();
    let mut target_anchor = chosen.anchor_id().to_string();
    let mut vars: Vec<(&str, String)> = Vec::new();
    let tpl = templates.counterfactual(chosen.vh_type());
    let mut question = tpl.question.clone();
    let mut answer = tpl.answer.clone();
    let question_subject;

    let claim = match chosen.value() {
        FactValue::Counting { count, subject } => {
            let n = i64::from(*count);
            let options: Vec<u32> = [-2i64, -1, 1, 2]
                .iter()
                .map(|d| n + d)
                .filter(|v| *v >= 0)
                .map(|v| v as u32)
                .collect();
            let claimed = *pick(&mut rng, &options);
            let noun = scene.target(lexicons).name.clone();
            if claimed == 1 {
                if let Some(q) = &tpl.question_one {
                    question = q.clone();
                }
            }
            match (*count, &tpl.answer_zero, &tpl.answer_one) {
                (0, Some(a), _) | (1, _, Some(a)) => answer = a.clone(),
                _ => {}
            }
            vars.push(("subject_plural", lexicons.plural(&noun)));
            vars.push(("subject_article", article(&noun).to_string()));
            vars.push(("subject", noun.clone()));
            vars.push(("claimed", claimed.to_string()));
            vars.push(("claimed_words", number_words(lexicons, claimed)));
            vars.push(("truth", count.to_string()));
            vars.push(("truth_words", number_words(lexicons, *count)));
            question_subject = Some(noun);
            FactValue::Counting {
                count: claimed,
                subject: subject.clone(),
            }
        }
        FactValue::Existence { subject, present } => {
            let noun = if *present {
                let pool = ctx.distractors();
                let d = pick(&mut rng, &pool).to_string();
                let absent = FactualAnchor::new(FactValue::Existence {
                    subject: d.clone(),
                    present: false,
                })
                .map_err(|e| AugmentError::invalid(id, e.to_string()))?;
                target_anchor = absent.anchor_id().to_string();
                anchors = anchors.with(absent).map_err(|e| AugmentError::invalid(id, e.to_string()))?;
                d
            } else {
                subject.clone()
            };
            vars.push(("subject_plural", lexicons.plural(&noun)));
            vars.push(("subject_article", article(&noun).to_string()));
            vars.push(("subject", noun.clone()));
            question_subject = Some(noun.clone());
            FactValue::Existence {
                subject: noun,
                present: true,
            }
        }
        FactValue::Color { subject, color: truth }
        | FactValue::Shape { subject, shape: truth }
        | FactValue::Orientation {
            subject,
            orientation: truth,
        } => {
            let others: Vec<&str> = ctx.vocab(chosen.vh_type()).canonical().filter(|t| t != truth).collect();
            let claimed = pick(&mut rng, &others).to_string();
            vars.push(("subject_plural", lexicons.plural(subject)));
            vars.push(("subject_article", article(subject).to_string()));
            vars.push(("subject", subject.clone()));
            vars.push(("claimed", claimed.clone()));
            vars.push(("truth", truth.clone()));
            question_subject = Some(subject.clone());
            let subject = subject.clone();
            match chosen.vh_type() {
                VhType::Color => FactValue::Color { subject, color: claimed },
                VhType::Shape => FactValue::Shape { subject, shape: claimed },
                _ => FactValue::Orientation {
                    subject,
                    orientation: claimed,
                },
            }
        }
        FactValue::Ocr { text, subject } => {
            let mut words: Vec<String> = text.split(' ').map(str::to_string).collect();
            let pos = *pick(&mut rng, &ctx.ocr_positions(text));
            let subs: Vec<&String> = templates.ocr_substitutions().iter().filter(|s| **s != words[pos]).collect();
            words[pos] = pick(&mut rng, &subs).to_string();
            let claimed = words.join(" ");
            vars.push(("claimed", claimed.clone()));
            vars.push(("truth", text.clone()));
            question_subject = None;
            FactValue::Ocr {
                text: claimed,
                subject: subject.clone(),
            }
        }
        FactValue::Size {
            subject_a,
            subject_b,
            relation,
        } => {
            let claimed = if relation.inverse() != *relation {
                relation.inverse()
            } else {
                let others: Vec<SizeRelation> = SizeRelation::ALL.into_iter().filter(|r| r != relation).collect();
                *pick(&mut rng, &others)
            };
            vars.push(("subject_a", subject_a.clone()));
            vars.push(("subject_b", subject_b.clone()));
            vars.push(("claimed", templates.size_phrase(claimed).to_string()));
            vars.push(("truth", templates.size_phrase(*relation).to_string()));
            question_subject = None;
            FactValue::Size {
                subject_a: subject_a.clone(),
                subject_b: subject_b.clone(),
                relation: claimed,
            }
        }
        FactValue::Position {
            subject_a,
            subject_b,
            relation,
        } => {
            let claimed = match relation.inverse() {
                Some(inv) => inv,
                None => {
                    let others: Vec<PositionRelation> =
                        PositionRelation::ALL.into_iter().filter(|r| r != relation).collect();
                    *pick(&mut rng, &others)
                }
            };
            vars.push(("subject_a", subject_a.clone()));
            vars.push(("subject_b", subject_b.clone()));
            vars.push(("claimed", templates.position_phrase(claimed).to_string()));
            vars.push(("truth", templates.position_phrase(*relation).to_string()));
            question_subject = None;
            FactValue::Position {
                subject_a: subject_a.clone(),
                subject_b: subject_b.clone(),
                relation: claimed,
            }
        }
    };

    let refs: Vec<(&str, &str)> = vars.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let prompt = render(&question, &refs)?;
    let expected_answer = render(&answer, &refs)?;
    Ok(Counterfactual {
        prompt,
        expected_answer,
        target_anchor,
        check_token: dsl::check_token(&claim),
        claim,
        anchors,
        question_subject,
    })
}

/// Draws a uniform float in [0, 1) for the keep/skip decision of a record.
pub(crate) fn draw_unit(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).gen::<f64>()
}
