//! Visual-hallucination types and the typed fact values shared across the toolkit.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Subject used for record-global facts (counts and OCR text without a subject).
pub const GLOBAL_SUBJECT: &str = "_record";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FactError {
    #[error("invalid {field} token {value:?}: expected a lowercase alphanumeric word")]
    InvalidToken { field: &'static str, value: String },
    #[error("OCR text must be non-empty and normalized, got {0:?}")]
    InvalidOcr(String),
    #[error("relation subjects must differ, got {0:?} twice")]
    SameSubjects(String),
    #[error("anchor set must contain at least one anchor")]
    EmptyAnchorSet,
    #[error("duplicate anchor key {0}")]
    DuplicateKey(AnchorKey),
    #[error("duplicate anchor id {0:?}")]
    DuplicateId(String),
    #[error("anchor type {declared} does not match value type {actual}")]
    TypeTagMismatch { declared: VhType, actual: VhType },
}

/// The eight visual-hallucination categories, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VhType {
    Existence,
    Shape,
    Color,
    Orientation,
    Ocr,
    Size,
    Position,
    Counting,
}

impl VhType {
    pub const ALL: [VhType; 8] = [
        VhType::Existence,
        VhType::Shape,
        VhType::Color,
        VhType::Orientation,
        VhType::Ocr,
        VhType::Size,
        VhType::Position,
        VhType::Counting,
    ];

    /// Uppercase wire token used by the anchor notation.
    pub fn token(self) -> &'static str {
        match self {
            VhType::Existence => "EXISTENCE",
            VhType::Shape => "SHAPE",
            VhType::Color => "COLOR",
            VhType::Orientation => "ORIENTATION",
            VhType::Ocr => "OCR",
            VhType::Size => "SIZE",
            VhType::Position => "POSITION",
            VhType::Counting => "COUNT",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.token() == token)
    }

    /// Lowercase key used in configuration files (`[scoring.gamma] counting = 1.0`).
    pub fn config_key(self) -> &'static str {
        match self {
            VhType::Existence => "existence",
            VhType::Shape => "shape",
            VhType::Color => "color",
            VhType::Orientation => "orientation",
            VhType::Ocr => "ocr",
            VhType::Size => "size",
            VhType::Position => "position",
            VhType::Counting => "counting",
        }
    }

    pub fn from_config_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.config_key() == key)
    }

    /// Accepts the wire token or the config key, case-insensitively.
    pub fn parse_loose(s: &str) -> Option<Self> {
        let upper = s.trim().to_ascii_uppercase();
        Self::from_token(&upper).or_else(|| Self::from_config_key(&upper.to_ascii_lowercase()))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            VhType::Existence => "Existence",
            VhType::Shape => "Shape",
            VhType::Color => "Color",
            VhType::Orientation => "Orientation",
            VhType::Ocr => "OCR",
            VhType::Size => "Size",
            VhType::Position => "Position",
            VhType::Counting => "Counting",
        }
    }
}

impl fmt::Display for VhType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl Serialize for VhType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for VhType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        VhType::parse_loose(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown hallucination type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SizeRelation {
    Larger,
    Smaller,
    Equal,
}

impl SizeRelation {
    pub const ALL: [SizeRelation; 3] = [SizeRelation::Larger, SizeRelation::Smaller, SizeRelation::Equal];

    pub fn token(self) -> &'static str {
        match self {
            SizeRelation::Larger => "LARGER",
            SizeRelation::Smaller => "SMALLER",
            SizeRelation::Equal => "EQUAL",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.token() == token)
    }

    /// Relation that holds after swapping the two subjects.
    pub fn inverse(self) -> Self {
        match self {
            SizeRelation::Larger => SizeRelation::Smaller,
            SizeRelation::Smaller => SizeRelation::Larger,
            SizeRelation::Equal => SizeRelation::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PositionRelation {
    LeftOf,
    RightOf,
    Above,
    Below,
    Inside,
    On,
}

impl PositionRelation {
    pub const ALL: [PositionRelation; 6] = [
        PositionRelation::LeftOf,
        PositionRelation::RightOf,
        PositionRelation::Above,
        PositionRelation::Below,
        PositionRelation::Inside,
        PositionRelation::On,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PositionRelation::LeftOf => "LEFT_OF",
            PositionRelation::RightOf => "RIGHT_OF",
            PositionRelation::Above => "ABOVE",
            PositionRelation::Below => "BELOW",
            PositionRelation::Inside => "INSIDE",
            PositionRelation::On => "ON",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.token() == token)
    }

    /// Relation that holds after swapping the two subjects. `INSIDE` and `ON`
    /// have no inverse within the relation set.
    pub fn inverse(self) -> Option<Self> {
        match self {
            PositionRelation::LeftOf => Some(PositionRelation::RightOf),
            PositionRelation::RightOf => Some(PositionRelation::LeftOf),
            PositionRelation::Above => Some(PositionRelation::Below),
            PositionRelation::Below => Some(PositionRelation::Above),
            PositionRelation::Inside | PositionRelation::On => None,
        }
    }
}

/// Key that pairs claims with anchors: the type plus a subject (or ordered
/// subject pair, or [`GLOBAL_SUBJECT`]).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnchorKey {
    pub vh_type: VhType,
    pub subject: String,
}

impl AnchorKey {
    /// For relational keys, the key with the subject pair swapped.
    pub fn flipped(&self) -> Option<AnchorKey> {
        let (a, b) = self.subject.split_once('|')?;
        Some(AnchorKey {
            vh_type: self.vh_type,
            subject: format!("{b}|{a}"),
        })
    }
}

impl fmt::Display for AnchorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.vh_type, self.subject)
    }
}

/// A typed ground-truth or claimed fact value. Tokens are canonical lowercase words.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactValue {
    Existence { subject: String, present: bool },
    Shape { subject: String, shape: String },
    Color { subject: String, color: String },
    Orientation { subject: String, orientation: String },
    Ocr { text: String, subject: Option<String> },
    Size { subject_a: String, subject_b: String, relation: SizeRelation },
    Position { subject_a: String, subject_b: String, relation: PositionRelation },
    Counting { count: u32, subject: Option<String> },
}

/// A single canonical word: lowercase ASCII letters and digits, starting with a letter.
pub fn is_canonical_token(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

fn check_token(field: &'static str, value: &str) -> Result<(), FactError> {
    if is_canonical_token(value) {
        Ok(())
    } else {
        Err(FactError::InvalidToken {
            field,
            value: value.to_string(),
        })
    }
}

impl FactValue {
    pub fn vh_type(&self) -> VhType {
        match self {
            FactValue::Existence { .. } => VhType::Existence,
            FactValue::Shape { .. } => VhType::Shape,
            FactValue::Color { .. } => VhType::Color,
            FactValue::Orientation { .. } => VhType::Orientation,
            FactValue::Ocr { .. } => VhType::Ocr,
            FactValue::Size { .. } => VhType::Size,
            FactValue::Position { .. } => VhType::Position,
            FactValue::Counting { .. } => VhType::Counting,
        }
    }

    /// The single subject, if this value type carries one.
    pub fn subject(&self) -> Option<&str> {
        match self {
            FactValue::Existence { subject, .. }
            | FactValue::Shape { subject, .. }
            | FactValue::Color { subject, .. }
            | FactValue::Orientation { subject, .. } => Some(subject),
            FactValue::Ocr { subject, .. } | FactValue::Counting { subject, .. } => subject.as_deref(),
            FactValue::Size { .. } | FactValue::Position { .. } => None,
        }
    }

    /// The ordered subject pair of a relational value.
    pub fn subject_pair(&self) -> Option<(&str, &str)> {
        match self {
            FactValue::Size { subject_a, subject_b, .. } | FactValue::Position { subject_a, subject_b, .. } => {
                Some((subject_a, subject_b))
            }
            _ => None,
        }
    }

    /// Checks structural well-formedness (token shapes, non-empty OCR, distinct relation subjects).
    pub fn validate(&self) -> Result<(), FactError> {
        match self {
            FactValue::Existence { subject, .. } => check_token("subject", subject),
            FactValue::Shape { subject, shape } => {
                check_token("subject", subject)?;
                check_token("shape", shape)
            }
            FactValue::Color { subject, color } => {
                check_token("subject", subject)?;
                check_token("color", color)
            }
            FactValue::Orientation { subject, orientation } => {
                check_token("subject", subject)?;
                check_token("orientation", orientation)
            }
            FactValue::Ocr { text, subject } => {
                if let Some(s) = subject {
                    check_token("subject", s)?;
                }
                // Case must survive the uppercase wire form.
                if text.is_empty()
                    || crate::extract::normalize_ocr(text) != *text
                    || text.to_uppercase().to_lowercase() != *text
                {
                    return Err(FactError::InvalidOcr(text.clone()));
                }
                Ok(())
            }
            FactValue::Size { subject_a, subject_b, .. } | FactValue::Position { subject_a, subject_b, .. } => {
                check_token("subject", subject_a)?;
                check_token("subject", subject_b)?;
                if subject_a == subject_b {
                    return Err(FactError::SameSubjects(subject_a.clone()));
                }
                Ok(())
            }
            FactValue::Counting { subject, .. } => match subject {
                Some(s) => check_token("subject", s),
                None => Ok(()),
            },
        }
    }

    pub fn key(&self) -> AnchorKey {
        let subject = match self.subject_pair() {
            Some((a, b)) => format!("{a}|{b}"),
            None => self.subject().unwrap_or(GLOBAL_SUBJECT).to_string(),
        };
        AnchorKey {
            vh_type: self.vh_type(),
            subject,
        }
    }
}

/// One ground-truth structured fact attached to a record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactualAnchor {
    vh_type: VhType,
    value: FactValue,
    anchor_id: String,
}

impl FactualAnchor {
    /// Builds an anchor whose id is derived from its key, e.g. `counting` or `color:ball`.
    pub fn new(value: FactValue) -> Result<Self, FactError> {
        let id = default_anchor_id(&value.key());
        Self::with_id(value, id)
    }

    pub fn with_id(value: FactValue, anchor_id: impl Into<String>) -> Result<Self, FactError> {
        value.validate()?;
        Ok(FactualAnchor {
            vh_type: value.vh_type(),
            value,
            anchor_id: anchor_id.into(),
        })
    }

    /// Builds an anchor from an explicit type tag, rejecting a tag that disagrees with the value.
    pub fn typed(vh_type: VhType, value: FactValue) -> Result<Self, FactError> {
        if value.vh_type() != vh_type {
            return Err(FactError::TypeTagMismatch {
                declared: vh_type,
                actual: value.vh_type(),
            });
        }
        Self::new(value)
    }

    pub fn vh_type(&self) -> VhType {
        self.vh_type
    }

    pub fn value(&self) -> &FactValue {
        &self.value
    }

    pub fn anchor_id(&self) -> &str {
        &self.anchor_id
    }

    pub fn key(&self) -> AnchorKey {
        self.value.key()
    }
}

/// Pairing key of an anchor.
pub fn anchor_key(anchor: &FactualAnchor) -> AnchorKey {
    anchor.key()
}

fn default_anchor_id(key: &AnchorKey) -> String {
    if key.subject == GLOBAL_SUBJECT {
        key.vh_type.config_key().to_string()
    } else {
        format!("{}:{}", key.vh_type.config_key(), key.subject)
    }
}

/// Ordered, key-unique collection of anchors for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSet {
    anchors: Vec<FactualAnchor>,
}

impl AnchorSet {
    /// Rejects empty input, duplicate ids and duplicate keys. Relational keys
    /// are compared as unordered pairs, so `dog|cat` and `cat|dog` collide.
    pub fn new(anchors: Vec<FactualAnchor>) -> Result<Self, FactError> {
        if anchors.is_empty() {
            return Err(FactError::EmptyAnchorSet);
        }
        let mut keys = HashSet::new();
        let mut ids = HashSet::new();
        for anchor in &anchors {
            let key = anchor.key();
            if keys.contains(&key) || key.flipped().is_some_and(|f| keys.contains(&f)) {
                return Err(FactError::DuplicateKey(key));
            }
            if !ids.insert(anchor.anchor_id().to_string()) {
                return Err(FactError::DuplicateId(anchor.anchor_id().to_string()));
            }
            keys.insert(key);
        }
        Ok(AnchorSet { anchors })
    }

    pub fn anchors(&self) -> &[FactualAnchor] {
        &self.anchors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FactualAnchor> {
        self.anchors.iter()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn get(&self, anchor_id: &str) -> Option<&FactualAnchor> {
        self.anchors.iter().find(|a| a.anchor_id() == anchor_id)
    }

    /// Returns a new set with `anchor` appended.
    pub fn with(&self, anchor: FactualAnchor) -> Result<AnchorSet, FactError> {
        let mut anchors = self.anchors.clone();
        anchors.push(anchor);
        AnchorSet::new(anchors)
    }
}

impl<'a> IntoIterator for &'a AnchorSet {
    type Item = &'a FactualAnchor;
    type IntoIter = std::slice::Iter<'a, FactualAnchor>;

    fn into_iter(self) -> Self::IntoIter {
        self.anchors.iter()
    }
}

/// Half-open character range `[start, end)` into an answer text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    /// The characters this span covers, or `None` when out of bounds.
    pub fn slice<'t>(&self, text: &'t str) -> Option<&'t str> {
        let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
        let start = indices.nth(self.start)?;
        let end = if self.end == self.start {
            start
        } else {
            indices.nth(self.end - self.start - 1)?
        };
        Some(&text[start..end])
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A factual assertion extracted from generated text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Claim {
    vh_type: VhType,
    value: FactValue,
    source_span: Span,
}

impl Claim {
    pub fn new(value: FactValue, source_span: Span) -> Self {
        Claim {
            vh_type: value.vh_type(),
            value,
            source_span,
        }
    }

    pub fn vh_type(&self) -> VhType {
        self.vh_type
    }

    pub fn value(&self) -> &FactValue {
        &self.value
    }

    pub fn source_span(&self) -> Span {
        self.source_span
    }

    pub fn key(&self) -> AnchorKey {
        self.value.key()
    }
}
