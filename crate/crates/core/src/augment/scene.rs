use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::extract::normalize_ocr;
use crate::fact::{AnchorSet, FactValue, FactualAnchor, PositionRelation, SizeRelation, VhType};
use crate::lexicon::Lexicons;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub name: String,
    pub count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl SceneObject {
    pub fn new(name: &str, count: u32) -> Self {
        SceneObject {
            name: name.to_string(),
            count,
            color: None,
            shape: None,
            orientation: None,
            text: None,
        }
    }

    fn has_attributes(&self) -> bool {
        self.color.is_some() || self.shape.is_some() || self.orientation.is_some() || self.text.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RelationKind {
    Size,
    Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRelation {
    pub subject_a: String,
    pub subject_b: String,
    pub kind: RelationKind,
    pub relation: String,
}

/// Structured ground truth for one image plus its question and reference answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub record_id: String,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub relations: Vec<SceneRelation>,
    pub question: String,
    pub answer: String,
    pub vh_type: VhType,
    /// Object the question is about. Inferred from the question when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_object: Option<String>,
}

fn canonical_attr<'l>(
    vocab: &'l crate::lexicon::TokenLexicon,
    record_id: &str,
    kind: &str,
    raw: &str,
) -> Result<&'l str, AugmentError> {
    vocab
        .canonicalize(&raw.to_lowercase())
        .ok_or_else(|| AugmentError::invalid(record_id, format!("unknown {kind} {raw:?}")))
}

impl SceneRecord {
    /// Checks names, attribute tokens and relation references against the lexicons.
    pub fn validate(&self, lexicons: &Lexicons) -> Result<(), AugmentError> {
        let id = self.record_id.as_str();
        if id.trim().is_empty() {
            return Err(AugmentError::invalid(id, "record_id is empty"));
        }
        if self.objects.is_empty() {
            return Err(AugmentError::invalid(id, "scene has no objects to anchor"));
        }
        if self.question.trim().is_empty() {
            return Err(AugmentError::invalid(id, "question is empty"));
        }
        if self.answer.trim().is_empty() {
            return Err(AugmentError::invalid(id, "answer is empty"));
        }
        let mut names = HashSet::new();
        for obj in &self.objects {
            if !lexicons.is_noun(&obj.name) {
                return Err(AugmentError::invalid(id, format!("object {:?} is not a lexicon noun", obj.name)));
            }
            if !names.insert(obj.name.as_str()) {
                return Err(AugmentError::invalid(id, format!("duplicate object {:?}", obj.name)));
            }
            if obj.count == 0 && obj.has_attributes() {
                return Err(AugmentError::invalid(id, format!("absent object {:?} carries attributes", obj.name)));
            }
            if let Some(c) = &obj.color {
                canonical_attr(lexicons.colors(), id, "color", c)?;
            }
            if let Some(s) = &obj.shape {
                canonical_attr(lexicons.shapes(), id, "shape", s)?;
            }
            if let Some(o) = &obj.orientation {
                canonical_attr(lexicons.orientations(), id, "orientation", o)?;
            }
            if let Some(t) = &obj.text {
                if normalize_ocr(t).is_empty() {
                    return Err(AugmentError::invalid(id, format!("text of {:?} is empty after normalization", obj.name)));
                }
            }
        }
        for rel in &self.relations {
            for name in [&rel.subject_a, &rel.subject_b] {
                match self.objects.iter().find(|o| &o.name == name) {
                    None => return Err(AugmentError::invalid(id, format!("relation references undeclared object {name:?}"))),
                    Some(o) if o.count == 0 => {
                        return Err(AugmentError::invalid(id, format!("relation references absent object {name:?}")))
                    }
                    Some(_) => {}
                }
            }
            if rel.subject_a == rel.subject_b {
                return Err(AugmentError::invalid(id, format!("relation relates {:?} to itself", rel.subject_a)));
            }
            let known = match rel.kind {
                RelationKind::Size => SizeRelation::from_token(&rel.relation).is_some(),
                RelationKind::Position => PositionRelation::from_token(&rel.relation).is_some(),
            };
            if !known {
                return Err(AugmentError::invalid(id, format!("unknown {:?} relation {:?}", rel.kind, rel.relation)));
            }
        }
        if let Some(t) = &self.target_object {
            if !names.contains(t.as_str()) {
                return Err(AugmentError::invalid(id, format!("target object {t:?} is not declared")));
            }
        }
        Ok(())
    }

    /// The questioned object: `target_object`, else the first object named in
    /// the question, else the first object.
    pub fn target(&self, lexicons: &Lexicons) -> &SceneObject {
        if let Some(t) = &self.target_object {
            if let Some(o) = self.objects.iter().find(|o| &o.name == t) {
                return o;
            }
        }
        let lower = self.question.to_lowercase();
        for word in lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            if let Some(noun) = lexicons.canonical_noun(word) {
                if let Some(o) = self.objects.iter().find(|o| o.name == noun) {
                    return o;
                }
            }
        }
        &self.objects[0]
    }

    /// Object whose text becomes the record-level OCR fact.
    fn ocr_owner(&self, lexicons: &Lexicons) -> Option<&str> {
        let target = self.target(lexicons);
        if target.text.is_some() {
            return Some(&target.name);
        }
        self.objects.iter().find(|o| o.text.is_some()).map(|o| o.name.as_str())
    }
}

/// Anchors for every stated fact of a valid scene, in object order then relation order.
///
/// Per object: existence, the record count (questioned object only), color,
/// shape, orientation, text. The questioned object's text (or the first text
/// in the scene) is record-level; other texts are bound to their object.
pub fn derive_anchors(scene: &SceneRecord, lexicons: &Lexicons) -> Result<AnchorSet, AugmentError> {
    scene.validate(lexicons)?;
    let id = scene.record_id.as_str();
    let target = scene.target(lexicons).name.clone();
    let ocr_owner = scene.ocr_owner(lexicons).map(str::to_string);
    let mut values = Vec::new();
    for obj in &scene.objects {
        let subject = obj.name.clone();
        values.push(FactValue::Existence {
            subject: subject.clone(),
            present: obj.count > 0,
        });
        if obj.name == target {
            values.push(FactValue::Counting {
                count: obj.count,
                subject: None,
            });
        }
        if let Some(c) = &obj.color {
            values.push(FactValue::Color {
                subject: subject.clone(),
                color: canonical_attr(lexicons.colors(), id, "color", c)?.to_string(),
            });
        }
        if let Some(s) = &obj.shape {
            values.push(FactValue::Shape {
                subject: subject.clone(),
                shape: canonical_attr(lexicons.shapes(), id, "shape", s)?.to_string(),
            });
        }
        if let Some(o) = &obj.orientation {
            values.push(FactValue::Orientation {
                subject: subject.clone(),
                orientation: canonical_attr(lexicons.orientations(), id, "orientation", o)?.to_string(),
            });
        }
        if let Some(t) = &obj.text {
            let global = ocr_owner.as_deref() == Some(obj.name.as_str());
            values.push(FactValue::Ocr {
                text: normalize_ocr(t),
                subject: if global { None } else { Some(subject.clone()) },
            });
        }
    }
    for rel in &scene.relations {
        let (subject_a, subject_b) = (rel.subject_a.clone(), rel.subject_b.clone());
        values.push(match rel.kind {
            RelationKind::Size => FactValue::Size {
                subject_a,
                subject_b,
                relation: SizeRelation::from_token(&rel.relation).expect("validated"),
            },
            RelationKind::Position => FactValue::Position {
                subject_a,
                subject_b,
                relation: PositionRelation::from_token(&rel.relation).expect("validated"),
            },
        });
    }
    let anchors = values
        .into_iter()
        .map(FactualAnchor::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| AugmentError::invalid(id, e.to_string()))?;
    AnchorSet::new(anchors).map_err(|e| AugmentError::invalid(id, e.to_string()))
}

#[cfg(test)]
pub(crate) fn scene(record_id: &str, vh_type: VhType, question: &str, objects: Vec<SceneObject>) -> SceneRecord {
    SceneRecord {
        record_id: record_id.to_string(),
        objects,
        relations: Vec::new(),
        question: question.to_string(),
        answer: "ok".to_string(),
        vh_type,
        target_object: None,
    }
}
