//! Bracketed fact-anchor notation.
//!
//! Grammar (tokens are uppercase on the wire, lowercase in the model):
//!
//! ```text
//! token   := "[" head ":" ws body "]"
//! head    := "FACT" | "CHECK_" typetok | "FACT_" typetok
//! body    := typetok ["_" SUBJECT] ws "=" ws (VALUE | "?")   for head "FACT"
//!          | VALUE | "?"                                      for "CHECK_*" / "FACT_*"
//! typetok := EXISTENCE|SHAPE|COLOR|ORIENTATION|OCR|SIZE|POSITION|COUNT
//! ```
//!
//! `ws` is optional spaces or tabs; whitespace is accepted only after `:` and
//! around `=`. A `?` value makes a query token. `CHECK_*` tokens may not be
//! queries.
//!
//! Relational facts carry the relation in the subject segment with value
//! `TRUE`, e.g. `[FACT: POSITION_DOG_LEFT_OF_CAT=TRUE]`. Value-only forms
//! (`CHECK_*`, `FACT_*`) carry the triple in the value:
//! `[CHECK_POSITION: DOG_RIGHT_OF_CAT]`. Other value-only tokens take their
//! subject from context, e.g. `[CHECK_COLOR: RED] (Is this ball red?)`.

use std::fmt;

use thiserror::Error;

use crate::extract::normalize_ocr;
use crate::fact::{FactError, FactValue, FactualAnchor, PositionRelation, SizeRelation, Span, VhType};
use crate::lexicon::Lexicons;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("malformed token at character {position}: {reason}")]
    MalformedToken { position: usize, reason: String },
    #[error("value {payload:?} is not valid for {vh_type}: {reason}")]
    TypeMismatch {
        vh_type: VhType,
        payload: String,
        reason: String,
    },
    #[error("{0} token needs a subject")]
    MissingSubject(VhType),
    #[error("expected a FACT token, found {0}")]
    NotAFact(TokenKind),
    #[error("query tokens carry no value")]
    QueryHasNoValue,
    #[error(transparent)]
    Fact(#[from] FactError),
}

impl DslError {
    fn malformed(position: usize, reason: impl Into<String>) -> Self {
        DslError::MalformedToken {
            position,
            reason: reason.into(),
        }
    }

    fn mismatch(vh_type: VhType, payload: &str, reason: impl Into<String>) -> Self {
        DslError::TypeMismatch {
            vh_type,
            payload: payload.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Fact,
    Check,
    Query,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Fact => "FACT",
            TokenKind::Check => "CHECK",
            TokenKind::Query => "QUERY",
        })
    }
}

/// One parsed bracketed token. `subject` is lowercased; `payload` is kept as written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DslToken {
    pub kind: TokenKind,
    pub vh_type: VhType,
    pub subject: Option<String>,
    pub payload: String,
}

impl fmt::Display for DslToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let payload = self.payload.to_uppercase();
        match self.kind {
            TokenKind::Check => write!(f, "[CHECK_{}: {}]", self.vh_type.token(), payload),
            TokenKind::Fact | TokenKind::Query => {
                write!(f, "[FACT: {}", self.vh_type.token())?;
                if let Some(subject) = &self.subject {
                    write!(f, "_{}", subject.to_uppercase())?;
                }
                write!(f, "={payload}]")
            }
        }
    }
}

fn is_ws(c: char) -> bool {
    c == ' ' || c == '\t'
}

/// Parses a single bracketed token such as `[FACT: COUNT=2]`.
pub fn parse_token(text: &str) -> Result<DslToken, DslError> {
    let chars: Vec<char> = text.chars().collect();
    if chars.first() != Some(&'[') {
        return Err(DslError::malformed(0, "expected '['"));
    }
    let last = chars.len() - 1;
    if last == 0 || chars[last] != ']' {
        return Err(DslError::malformed(chars.len(), "unbalanced brackets: missing ']'"));
    }
    if let Some(i) = chars[1..last].iter().position(|&c| c == '[' || c == ']') {
        return Err(DslError::malformed(i + 1, "unbalanced brackets"));
    }

    let colon = (1..last)
        .find(|&i| chars[i] == ':')
        .ok_or_else(|| DslError::malformed(1, "missing ':'"))?;
    let head: String = chars[1..colon].iter().collect();
    let (value_only, head_type, head_kind) = if head == "FACT" {
        (false, None, TokenKind::Fact)
    } else if let Some(t) = head.strip_prefix("CHECK_") {
        (true, Some(t.to_string()), TokenKind::Check)
    } else if let Some(t) = head.strip_prefix("FACT_") {
        (true, Some(t.to_string()), TokenKind::Fact)
    } else {
        return Err(DslError::malformed(1, format!("unknown head {head:?}")));
    };

    let mut body_start = colon + 1;
    while body_start < last && is_ws(chars[body_start]) {
        body_start += 1;
    }

    if value_only {
        let type_text = head_type.unwrap_or_default();
        let type_pos = 1 + head.len() - type_text.len();
        let vh_type = VhType::from_token(&type_text)
            .ok_or_else(|| DslError::malformed(type_pos, format!("unknown type token {type_text:?}")))?;
        let payload = value_text(&chars, body_start, last)?;
        let kind = match (head_kind, payload == "?") {
            (TokenKind::Check, true) => {
                return Err(DslError::malformed(body_start, "CHECK tokens cannot be queries"))
            }
            (_, true) => TokenKind::Query,
            (kind, false) => kind,
        };
        return Ok(DslToken {
            kind,
            vh_type,
            subject: None,
            payload,
        });
    }

    let eq = (body_start..last)
        .find(|&i| chars[i] == '=')
        .ok_or_else(|| DslError::malformed(body_start, "missing '='"))?;
    let mut left_end = eq;
    while left_end > body_start && is_ws(chars[left_end - 1]) {
        left_end -= 1;
    }
    let left: String = chars[body_start..left_end].iter().collect();
    if left.is_empty() {
        return Err(DslError::malformed(body_start, "missing type token"));
    }
    if let Some(i) = left.chars().position(char::is_whitespace) {
        return Err(DslError::malformed(body_start + i, "unexpected whitespace"));
    }
    let (type_text, subject) = match left.split_once('_') {
        Some((t, s)) => (t, Some(s)),
        None => (left.as_str(), None),
    };
    let vh_type = VhType::from_token(type_text)
        .ok_or_else(|| DslError::malformed(body_start, format!("unknown type token {type_text:?}")))?;
    let subject = match subject {
        Some(s) => {
            let subject_pos = body_start + type_text.chars().count() + 1;
            if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(DslError::malformed(subject_pos, format!("bad subject {s:?}")));
            }
            Some(s.to_ascii_lowercase())
        }
        None => None,
    };

    let mut value_start = eq + 1;
    while value_start < last && is_ws(chars[value_start]) {
        value_start += 1;
    }
    let payload = value_text(&chars, value_start, last)?;
    let kind = if payload == "?" { TokenKind::Query } else { TokenKind::Fact };
    Ok(DslToken {
        kind,
        vh_type,
        subject,
        payload,
    })
}

fn value_text(chars: &[char], start: usize, end: usize) -> Result<String, DslError> {
    if start >= end {
        return Err(DslError::malformed(start, "empty value"));
    }
    if is_ws(chars[end - 1]) {
        return Err(DslError::malformed(end - 1, "trailing whitespace before ']'"));
    }
    if let Some(i) = chars[start..end].iter().position(|&c| c == '=' || c == '\n') {
        return Err(DslError::malformed(start + i, "unexpected character in value"));
    }
    Ok(chars[start..end].iter().collect())
}

/// Finds every bracketed token in free text, e.g. an instruction.
/// Returns the character span of each token.
pub fn find_tokens(text: &str) -> Result<Vec<(Span, DslToken)>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '[' => {
                let close = (i + 1..chars.len()).find(|&j| chars[j] == '[' || chars[j] == ']');
                match close {
                    Some(j) if chars[j] == ']' => {
                        let token_text: String = chars[i..=j].iter().collect();
                        let token = parse_token(&token_text).map_err(|e| shift(e, i))?;
                        out.push((Span::new(i, j + 1), token));
                        i = j + 1;
                    }
                    _ => return Err(DslError::malformed(i, "unbalanced brackets: '[' is never closed")),
                }
            }
            ']' => return Err(DslError::malformed(i, "unbalanced brackets: stray ']'")),
            _ => i += 1,
        }
    }
    Ok(out)
}

fn shift(err: DslError, offset: usize) -> DslError {
    match err {
        DslError::MalformedToken { position, reason } => DslError::MalformedToken {
            position: position + offset,
            reason,
        },
        other => other,
    }
}

fn noun(lexicons: &Lexicons, vh_type: VhType, word: &str) -> Result<String, DslError> {
    lexicons
        .canonical_noun(word)
        .map(str::to_string)
        .ok_or_else(|| DslError::mismatch(vh_type, word, "unknown noun"))
}

fn parse_bool(vh_type: VhType, payload: &str) -> Result<bool, DslError> {
    match payload.to_ascii_uppercase().as_str() {
        "TRUE" => Ok(true),
        "FALSE" => Ok(false),
        _ => Err(DslError::mismatch(vh_type, payload, "expected TRUE or FALSE")),
    }
}

fn parse_triple(vh_type: VhType, text: &str) -> Result<(&str, String, &str), DslError> {
    let parts: Vec<&str> = text.split('_').collect();
    if parts.len() < 3 || parts.iter().any(|p| p.is_empty()) {
        return Err(DslError::mismatch(vh_type, text, "expected SUBJECT_RELATION_SUBJECT"));
    }
    let relation = parts[1..parts.len() - 1].join("_").to_ascii_uppercase();
    Ok((parts[0], relation, parts[parts.len() - 1]))
}

/// Builds the typed value a FACT or CHECK token asserts. `context_subject`
/// fills a missing subject for Existence, Color, Shape and Orientation.
pub fn token_value(token: &DslToken, context_subject: Option<&str>, lexicons: &Lexicons) -> Result<FactValue, DslError> {
    if token.kind == TokenKind::Query {
        return Err(DslError::QueryHasNoValue);
    }
    let vh_type = token.vh_type;
    let payload = token.payload.as_str();
    let required_subject = || -> Result<String, DslError> {
        let s = token
            .subject
            .as_deref()
            .or(context_subject)
            .ok_or(DslError::MissingSubject(vh_type))?;
        noun(lexicons, vh_type, &s.to_ascii_lowercase())
    };
    let optional_subject = || -> Result<Option<String>, DslError> {
        token.subject.as_deref().map(|s| noun(lexicons, vh_type, s)).transpose()
    };
    let lower = payload.to_lowercase();

    let value = match vh_type {
        VhType::Counting => {
            if !payload.bytes().all(|b| b.is_ascii_digit()) {
                return Err(DslError::mismatch(vh_type, payload, "expected a digit string"));
            }
            let count = payload
                .parse::<u32>()
                .map_err(|_| DslError::mismatch(vh_type, payload, "count out of range"))?;
            FactValue::Counting {
                count,
                subject: optional_subject()?,
            }
        }
        VhType::Existence => FactValue::Existence {
            subject: required_subject()?,
            present: parse_bool(vh_type, payload)?,
        },
        VhType::Color => FactValue::Color {
            subject: required_subject()?,
            color: lexicons
                .colors()
                .canonicalize(&lower)
                .ok_or_else(|| DslError::mismatch(vh_type, payload, "unknown color"))?
                .to_string(),
        },
        VhType::Shape => FactValue::Shape {
            subject: required_subject()?,
            shape: lexicons
                .shapes()
                .canonicalize(&lower)
                .ok_or_else(|| DslError::mismatch(vh_type, payload, "unknown shape"))?
                .to_string(),
        },
        VhType::Orientation => FactValue::Orientation {
            subject: required_subject()?,
            orientation: lexicons
                .orientations()
                .canonicalize(&lower)
                .ok_or_else(|| DslError::mismatch(vh_type, payload, "unknown orientation"))?
                .to_string(),
        },
        VhType::Ocr => {
            let text = normalize_ocr(payload);
            if text.is_empty() {
                return Err(DslError::mismatch(vh_type, payload, "OCR text is empty after normalization"));
            }
            FactValue::Ocr {
                text,
                subject: optional_subject()?,
            }
        }
        VhType::Size | VhType::Position => {
            let triple_text = match &token.subject {
                Some(subject) => {
                    if !parse_bool(vh_type, payload)? {
                        return Err(DslError::mismatch(vh_type, payload, "negated relations are not representable"));
                    }
                    subject.clone()
                }
                None => lower.clone(),
            };
            let (a, relation, b) = parse_triple(vh_type, &triple_text)?;
            let subject_a = noun(lexicons, vh_type, a)?;
            let subject_b = noun(lexicons, vh_type, b)?;
            if vh_type == VhType::Size {
                let relation = SizeRelation::from_token(&relation)
                    .ok_or_else(|| DslError::mismatch(vh_type, &triple_text, "unknown size relation"))?;
                FactValue::Size {
                    subject_a,
                    subject_b,
                    relation,
                }
            } else {
                let relation = PositionRelation::from_token(&relation)
                    .ok_or_else(|| DslError::mismatch(vh_type, &triple_text, "unknown position relation"))?;
                FactValue::Position {
                    subject_a,
                    subject_b,
                    relation,
                }
            }
        }
    };
    value.validate()?;
    Ok(value)
}

/// Converts a FACT token into an anchor.
pub fn to_anchor(token: &DslToken, context_subject: Option<&str>, lexicons: &Lexicons) -> Result<FactualAnchor, DslError> {
    if token.kind != TokenKind::Fact {
        return Err(DslError::NotAFact(token.kind));
    }
    Ok(FactualAnchor::new(token_value(token, context_subject, lexicons)?)?)
}

/// Parses a complete anchor string such as `[FACT: EXISTENCE_APPLE=TRUE]`.
pub fn parse_anchor(text: &str, lexicons: &Lexicons) -> Result<FactualAnchor, DslError> {
    to_anchor(&parse_token(text)?, None, lexicons)
}

fn relation_segment(value: &FactValue) -> Option<String> {
    match value {
        FactValue::Size {
            subject_a,
            subject_b,
            relation,
        } => Some(format!("{}_{}_{}", subject_a, relation.token(), subject_b)),
        FactValue::Position {
            subject_a,
            subject_b,
            relation,
        } => Some(format!("{}_{}_{}", subject_a, relation.token(), subject_b)),
        _ => None,
    }
}

/// Wire text of the value part, as it appears after `=` or in a CHECK body.
fn value_payload(value: &FactValue) -> String {
    match value {
        FactValue::Counting { count, .. } => count.to_string(),
        FactValue::Existence { present, .. } => if *present { "TRUE" } else { "FALSE" }.to_string(),
        FactValue::Color { color: v, .. }
        | FactValue::Shape { shape: v, .. }
        | FactValue::Orientation { orientation: v, .. }
        | FactValue::Ocr { text: v, .. } => v.to_uppercase(),
        FactValue::Size { .. } | FactValue::Position { .. } => "TRUE".to_string(),
    }
}

/// Canonical anchor text, e.g. `[FACT: COUNT=2]` or `[FACT: POSITION_DOG_LEFT_OF_CAT=TRUE]`.
pub fn serialize(anchor: &FactualAnchor) -> String {
    serialize_value(anchor.value())
}

pub fn serialize_value(value: &FactValue) -> String {
    let subject = relation_segment(value).or_else(|| value.subject().map(str::to_string));
    let mut out = format!("[FACT: {}", value.vh_type().token());
    if let Some(s) = subject {
        out.push('_');
        out.push_str(&s.to_uppercase());
    }
    out.push('=');
    out.push_str(&value_payload(value));
    out.push(']');
    out
}

/// Query token for a type: `[FACT: COUNT=?]`.
pub fn query_token(vh_type: VhType) -> String {
    format!("[FACT: {}=?]", vh_type.token())
}

/// Counter-factual check token asserting `value`, e.g. `[CHECK_COLOR: RED]`.
/// The single subject (if any) is not encoded; relational triples are.
pub fn check_token(value: &FactValue) -> String {
    let payload = match relation_segment(value) {
        Some(triple) => triple.to_uppercase(),
        None => value_payload(value),
    };
    format!("[CHECK_{}: {}]", value.vh_type().token(), payload)
}
