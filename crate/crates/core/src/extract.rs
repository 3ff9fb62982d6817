//! Deterministic rule-based claim extraction from answer text.
//!
//! Rules, applied per sentence (split on `.`, `?`, `!` followed by whitespace)
//! and per clause (split on `,`, `;`, `:`, "and", "but"):
//!
//! * Counting: every cardinal (digit string or number word) in a sentence that
//!   mentions a known noun, opens with "there is/are", or starts a clause with
//!   the cardinal ("Two."). The first one by position is the one that pairs.
//! * Existence: "there is/are ... <noun>", "no <noun>", "(I don't) see <noun>";
//!   a negation cue in the clause makes the claim `present = false`. A leading
//!   "Yes,"/"No," answers an existence question when the caller supplies the
//!   question subject.
//! * Color/Shape/Orientation: "<noun> is <attribute>" and "<attribute> <noun>".
//! * Size/Position: "<noun> [is] <phrase> [the] <noun>" using the relation phrase maps.
//! * OCR: text inside single or double quotes, normalized.
//!
//! Claims other than Existence are dropped in a negated clause. Text inside
//! quotes only feeds the OCR rule. Counting claims carry no subject.

use thiserror::Error;

use crate::fact::{Claim, FactValue, Span, VhType};
use crate::lexicon::Lexicons;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("answer text for record {0:?} is empty")]
    EmptyAnswer(String),
}

/// What the answered question asked about; lets a bare "Yes."/"No." become a claim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionContext {
    pub vh_type: VhType,
    pub subject: Option<String>,
}

/// A model's generated answer for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerText {
    text: String,
    record_id: String,
    question: Option<QuestionContext>,
}

impl AnswerText {
    pub fn new(record_id: impl Into<String>, text: impl Into<String>) -> Result<Self, ExtractError> {
        let text = text.into();
        let record_id = record_id.into();
        if text.trim().is_empty() {
            return Err(ExtractError::EmptyAnswer(record_id));
        }
        Ok(AnswerText {
            text,
            record_id,
            question: None,
        })
    }

    pub fn with_question(mut self, vh_type: VhType, subject: Option<String>) -> Self {
        self.question = Some(QuestionContext { vh_type, subject });
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn question(&self) -> Option<&QuestionContext> {
        self.question.as_ref()
    }
}

/// Case-folds, strips punctuation and collapses whitespace.
pub fn normalize_ocr(raw: &str) -> String {
    let folded: String = raw
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone)]
struct Word {
    text: String,
    start: usize,
    end: usize,
    sentence: usize,
    clause: usize,
}

#[derive(Debug, Clone)]
struct Quote {
    inner: String,
    open: usize,
    close: usize,
    clause: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Yes,
    No,
}

struct Segmented {
    words: Vec<Word>,
    quotes: Vec<Quote>,
    polarity: Option<(Polarity, Span)>,
}

const DOUBLE_OPEN: [char; 2] = ['"', '\u{201C}'];
const SINGLE_OPEN: [char; 2] = ['\'', '\u{2018}'];

fn closing_for(c: char) -> &'static [char] {
    match c {
        '"' => &['"'],
        '\u{201C}' => &['\u{201D}', '"'],
        '\'' => &['\''],
        '\u{2018}' => &['\u{2019}', '\''],
        _ => &[],
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn find_quote_close(chars: &[char], open: usize) -> Option<usize> {
    let closers = closing_for(chars[open]);
    let single = SINGLE_OPEN.contains(&chars[open]);
    (open + 1..chars.len()).find(|&j| {
        closers.contains(&chars[j])
            && j > open + 1
            && (!single || chars.get(j + 1).is_none_or(|&n| !is_word_char(n)))
    })
}

fn segment(text: &str) -> Segmented {
    let chars: Vec<char> = text.chars().collect();
    let mut words = Vec::new();
    let mut quotes = Vec::new();
    let mut sentence = 0;
    let mut clause = 0;
    let mut p = 0;
    while p < chars.len() {
        let c = chars[p];
        let quote_open = DOUBLE_OPEN.contains(&c)
            || (SINGLE_OPEN.contains(&c)
                && (p == 0 || !is_word_char(chars[p - 1]))
                && chars.get(p + 1).is_some_and(|n| !n.is_whitespace()));
        if quote_open {
            if let Some(close) = find_quote_close(&chars, p) {
                quotes.push(Quote {
                    inner: chars[p + 1..close].iter().collect(),
                    open: p,
                    close,
                    clause,
                });
                p = close + 1;
                continue;
            }
        }
        if is_word_char(c) {
            let start = p;
            while p < chars.len()
                && (is_word_char(chars[p])
                    || (is_apostrophe(chars[p]) && chars.get(p + 1).is_some_and(|&n| is_word_char(n))))
            {
                p += 1;
            }
            let raw: String = chars[start..p].iter().collect();
            let lowered = raw.to_lowercase().replace('\u{2019}', "'");
            if lowered == "and" || lowered == "but" {
                clause += 1;
            } else {
                words.push(Word {
                    text: lowered,
                    start,
                    end: p,
                    sentence,
                    clause,
                });
            }
            continue;
        }
        match c {
            '.' | '?' | '!' if chars.get(p + 1).is_none_or(|n| n.is_whitespace()) => {
                sentence += 1;
                clause += 1;
            }
            ',' | ';' | ':' => clause += 1,
            _ => {}
        }
        p += 1;
    }

    // A leading "Yes,"/"No." is an answer polarity, not an in-clause negation.
    let mut polarity = None;
    if let Some(first) = words.first() {
        let followed_by_break = chars
            .get(first.end)
            .is_none_or(|&c| matches!(c, ',' | '.' | '!' | ';'));
        let kind = match first.text.as_str() {
            "yes" => Some(Polarity::Yes),
            "no" => Some(Polarity::No),
            _ => None,
        };
        if let (Some(kind), true) = (kind, followed_by_break) {
            polarity = Some((kind, Span::new(first.start, first.end)));
            words.remove(0);
        }
    }
    Segmented { words, quotes, polarity }
}

const EXISTENTIAL_COPULAS: [&str; 8] = ["is", "are", "was", "were", "isn't", "aren't", "wasn't", "weren't"];
const COPULAS: [&str; 9] = ["is", "are", "was", "were", "looks", "look", "appears", "appear", "seems"];
const RELATION_VERBS: [&str; 16] = [
    "is", "are", "was", "were", "sits", "sit", "sitting", "lies", "lying", "stands", "standing", "located",
    "placed", "positioned", "appears", "seems",
];
const DETERMINERS: [&str; 12] = [
    "a", "an", "the", "some", "any", "only", "just", "exactly", "several", "many", "few", "more",
];

struct Extractor<'a> {
    lex: &'a Lexicons,
    seg: Segmented,
    claims: Vec<Claim>,
    question: Option<QuestionContext>,
}

impl<'a> Extractor<'a> {
    fn clause_negated(&self, clause: usize) -> bool {
        self.seg
            .words
            .iter()
            .filter(|w| w.clause == clause)
            .any(|w| self.lex.is_negation(&w.text))
    }

    fn push(&mut self, value: FactValue, start: usize, end: usize) {
        // Two rules can read the same words ("there are no cats").
        let span = Span::new(start, end);
        let overlapping = self
            .claims
            .iter()
            .any(|c| *c.value() == value && c.source_span().overlaps(&span));
        if !overlapping {
            self.claims.push(Claim::new(value, span));
        }
    }

    fn noun_at(&self, i: usize) -> Option<String> {
        self.seg
            .words
            .get(i)
            .and_then(|w| self.lex.canonical_noun(&w.text))
            .map(str::to_string)
    }

    /// Skips determiners, cardinals, attributes and negation words within a clause,
    /// returning the index of the first noun and whether a zero cardinal was skipped.
    fn scan_to_noun(&self, from: usize, clause: usize) -> Option<(usize, bool)> {
        let words = &self.seg.words;
        let mut zero = false;
        let mut i = from;
        while i < words.len() && words[i].clause == clause {
            let t = words[i].text.as_str();
            if self.lex.canonical_noun(t).is_some() {
                return Some((i, zero));
            }
            if let Some(n) = self.lex.cardinal(t) {
                zero |= n == 0;
            } else if !(DETERMINERS.contains(&t) || self.lex.is_attribute(t) || self.lex.is_negation(t) || t == "of") {
                return None;
            }
            i += 1;
        }
        None
    }

    fn existence(&mut self) {
        let n = self.seg.words.len();
        for i in 0..n {
            let (clause, text, start) = {
                let w = &self.seg.words[i];
                (w.clause, w.text.clone(), w.start)
            };
            let same_clause = |j: usize| self.seg.words.get(j).is_some_and(|w| w.clause == clause);
            let negated = self.clause_negated(clause);

            // there is / there are / there's
            let after = if text == "there's" {
                Some(i + 1)
            } else if text == "there"
                && same_clause(i + 1)
                && EXISTENTIAL_COPULAS.contains(&self.seg.words[i + 1].text.as_str())
            {
                Some(i + 2)
            } else {
                None
            };
            if let Some(from) = after {
                if let Some((k, zero)) = self.scan_to_noun(from, clause) {
                    let subject = self.noun_at(k).unwrap();
                    let end = self.seg.words[k].end;
                    self.push(
                        FactValue::Existence {
                            subject,
                            present: !negated && !zero,
                        },
                        start,
                        end,
                    );
                }
                continue;
            }

            if text == "no" || text == "without" {
                if let Some((k, _)) = self.scan_to_noun(i + 1, clause) {
                    let subject = self.noun_at(k).unwrap();
                    let end = self.seg.words[k].end;
                    self.push(FactValue::Existence { subject, present: false }, start, end);
                }
                continue;
            }

            if text == "see" || text == "sees" {
                if let Some((k, _)) = self.scan_to_noun(i + 1, clause) {
                    let subject = self.noun_at(k).unwrap();
                    let clause_start = self
                        .seg
                        .words
                        .iter()
                        .find(|w| w.clause == clause)
                        .map_or(start, |w| w.start);
                    let end = self.seg.words[k].end;
                    self.push(FactValue::Existence { subject, present: !negated }, clause_start, end);
                }
            }
        }

        if let (Some((polarity, span)), Some(q)) = (self.seg.polarity, self.question.clone()) {
            if q.vh_type == VhType::Existence {
                if let Some(subject) = q.subject.as_deref().and_then(|s| self.lex.canonical_noun(s)) {
                    let subject = subject.to_string();
                    self.push(
                        FactValue::Existence {
                            subject,
                            present: polarity == Polarity::Yes,
                        },
                        span.start,
                        span.end,
                    );
                }
            }
        }
    }

    fn counting(&mut self) {
        let words = &self.seg.words;
        let sentences: Vec<usize> = {
            let mut s: Vec<usize> = words.iter().map(|w| w.sentence).collect();
            s.dedup();
            s
        };
        let mut found = Vec::new();
        for sentence in sentences {
            let idx: Vec<usize> = (0..words.len()).filter(|&i| words[i].sentence == sentence).collect();
            let has_noun = idx.iter().any(|&i| self.lex.canonical_noun(&words[i].text).is_some());
            let existential = idx.iter().any(|&i| {
                words[i].text == "there's"
                    || (words[i].text == "there"
                        && words
                            .get(i + 1)
                            .is_some_and(|n| n.sentence == sentence && EXISTENTIAL_COPULAS.contains(&n.text.as_str())))
            });
            for &i in &idx {
                // "there are no apples" states a count of zero.
                if existential
                    && words[i].text == "no"
                    && words
                        .get(i + 1)
                        .is_some_and(|n| {
                            n.clause == words[i].clause
                                && self.lex.canonical_noun(&n.text).is_some_and(|c| c != n.text)
                        })
                {
                    found.push((0, words[i].start, words[i].end));
                    continue;
                }
                let Some(count) = self.lex.cardinal(&words[i].text) else {
                    continue;
                };
                let clause = words[i].clause;
                let leads_clause = i == 0 || words[i - 1].clause != clause;
                if !(has_noun || existential || leads_clause) || self.clause_negated(clause) {
                    continue;
                }
                if words[i].text == "one"
                    && i > 0
                    && words[i - 1].clause == clause
                    && (["the", "this", "that", "which", "each", "every", "another"].contains(&words[i - 1].text.as_str())
                        || self.lex.is_attribute(&words[i - 1].text))
                {
                    continue;
                }
                found.push((count, words[i].start, words[i].end));
            }
        }
        for (count, start, end) in found {
            self.push(FactValue::Counting { count, subject: None }, start, end);
        }
    }

    fn attribute_values(&self, word: &str, subject: &str) -> Vec<FactValue> {
        let mut out = Vec::new();
        if let Some(c) = self.lex.colors().canonicalize(word) {
            out.push(FactValue::Color {
                subject: subject.to_string(),
                color: c.to_string(),
            });
        }
        if let Some(s) = self.lex.shapes().canonicalize(word) {
            out.push(FactValue::Shape {
                subject: subject.to_string(),
                shape: s.to_string(),
            });
        }
        if let Some(o) = self.lex.orientations().canonicalize(word) {
            out.push(FactValue::Orientation {
                subject: subject.to_string(),
                orientation: o.to_string(),
            });
        }
        out
    }

    fn attributes(&mut self) {
        let n = self.seg.words.len();
        let mut found = Vec::new();
        for i in 0..n {
            let w = &self.seg.words[i];
            if self.clause_negated(w.clause) {
                continue;
            }
            let clause = w.clause;
            let in_clause = |j: usize| self.seg.words.get(j).filter(|w| w.clause == clause);

            // <attribute> [<attribute>...] <noun>
            if self.lex.is_attribute(&w.text) {
                let mut j = i + 1;
                while in_clause(j).is_some_and(|x| self.lex.is_attribute(&x.text)) {
                    j += 1;
                }
                if let Some(noun) = in_clause(j).and_then(|x| self.lex.canonical_noun(&x.text)) {
                    for v in self.attribute_values(&w.text, noun) {
                        found.push((v, w.start, self.seg.words[j].end));
                    }
                }
            }

            // <noun> is [a|an|very] <attribute> [<attribute>...]
            if let Some(noun) = self.lex.canonical_noun(&w.text) {
                if in_clause(i + 1).is_some_and(|x| COPULAS.contains(&x.text.as_str())) {
                    let mut j = i + 2;
                    while in_clause(j).is_some_and(|x| matches!(x.text.as_str(), "a" | "an" | "very" | "all")) {
                        j += 1;
                    }
                    while let Some(x) = in_clause(j) {
                        let values = self.attribute_values(&x.text, noun);
                        if values.is_empty() {
                            break;
                        }
                        for v in values {
                            found.push((v, w.start, x.end));
                        }
                        j += 1;
                    }
                }
            }
        }
        for (v, s, e) in found {
            self.push(v, s, e);
        }
    }

    fn match_phrase(&self, at: usize, clause: usize, phrase: &[String]) -> bool {
        phrase.iter().enumerate().all(|(k, p)| {
            self.seg
                .words
                .get(at + k)
                .is_some_and(|w| w.clause == clause && &w.text == p)
        })
    }

    fn relations(&mut self) {
        let n = self.seg.words.len();
        let mut found = Vec::new();
        for i in 0..n {
            let w = &self.seg.words[i];
            let clause = w.clause;
            let Some(a) = self.lex.canonical_noun(&w.text) else {
                continue;
            };
            if self.clause_negated(clause) {
                continue;
            }
            let mut j = i + 1;
            while self
                .seg
                .words
                .get(j)
                .is_some_and(|x| x.clause == clause && RELATION_VERBS.contains(&x.text.as_str()))
            {
                j += 1;
            }
            let size = self
                .lex
                .size_comparatives()
                .iter()
                .find(|p| self.match_phrase(j, clause, &p.words))
                .map(|p| (p.words.len(), Err(p.relation)));
            let position = self
                .lex
                .spatial_relations()
                .iter()
                .find(|p| self.match_phrase(j, clause, &p.words))
                .map(|p| (p.words.len(), Ok(p.relation)));
            // Prefer the longer phrase when both maps match.
            let matched = match (size, position) {
                (Some(s), Some(p)) => Some(if s.0 >= p.0 { s } else { p }),
                (s, p) => s.or(p),
            };
            let Some((len, relation)) = matched else {
                continue;
            };
            let Some((k, _)) = self.scan_to_noun(j + len, clause) else {
                continue;
            };
            let b = self.lex.canonical_noun(&self.seg.words[k].text).unwrap();
            if a == b {
                continue;
            }
            let value = match relation {
                Err(relation) => FactValue::Size {
                    subject_a: a.to_string(),
                    subject_b: b.to_string(),
                    relation,
                },
                Ok(relation) => FactValue::Position {
                    subject_a: a.to_string(),
                    subject_b: b.to_string(),
                    relation,
                },
            };
            found.push((value, w.start, self.seg.words[k].end));
        }
        for (v, s, e) in found {
            self.push(v, s, e);
        }
    }

    fn ocr(&mut self) {
        let mut found = Vec::new();
        for q in &self.seg.quotes {
            if self.clause_negated(q.clause) {
                continue;
            }
            let text = normalize_ocr(&q.inner);
            if !text.is_empty() {
                found.push((FactValue::Ocr { text, subject: None }, q.open, q.close + 1));
            }
        }
        for (v, s, e) in found {
            self.push(v, s, e);
        }
    }
}

/// Extracts typed claims in left-to-right span order.
pub fn extract_claims(answer: &AnswerText, lexicons: &Lexicons) -> Vec<Claim> {
    extract_from_text(answer.text(), answer.question(), lexicons)
}

/// As [`extract_claims`] for raw text; empty text yields no claims.
pub fn extract_from_text(text: &str, question: Option<&QuestionContext>, lexicons: &Lexicons) -> Vec<Claim> {
    let mut ex = Extractor {
        lex: lexicons,
        seg: segment(text),
        claims: Vec::new(),
        question: question.cloned(),
    };
    ex.existence();
    ex.counting();
    ex.attributes();
    ex.relations();
    ex.ocr();
    let mut claims = ex.claims;
    claims.sort_by(|a, b| (a.source_span(), a.value()).cmp(&(b.source_span(), b.value())));
    claims.dedup();
    claims
}
