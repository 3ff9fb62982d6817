//! Lexicons that drive claim extraction and canonicalize fact tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::fact::{is_canonical_token, PositionRelation, SizeRelation};

const DEFAULT_LEXICONS: &str = include_str!("../data/lexicons.toml");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon file is not valid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid lexicon: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLexicons {
    nouns: RawNouns,
    colors: RawTokens,
    shapes: RawTokens,
    orientations: RawOrientations,
    spatial_relations: BTreeMap<String, String>,
    size_comparatives: BTreeMap<String, String>,
    number_words: BTreeMap<String, u32>,
    negation: RawNegation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNouns {
    canonical: Vec<String>,
    #[serde(default)]
    irregular_plurals: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTokens {
    canonical: Vec<String>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrientations {
    canonical: Vec<String>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
    #[serde(default)]
    opposites: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNegation {
    cues: Vec<String>,
}

/// A closed vocabulary with a synonym map onto its canonical tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenLexicon {
    canonical: BTreeSet<String>,
    synonyms: BTreeMap<String, String>,
}

impl TokenLexicon {
    fn build(name: &str, canonical: Vec<String>, synonyms: BTreeMap<String, String>) -> Result<Self, LexiconError> {
        let canonical: BTreeSet<String> = canonical.into_iter().collect();
        if canonical.is_empty() {
            return Err(LexiconError::Invalid(format!("{name}: canonical list is empty")));
        }
        for token in &canonical {
            if !is_canonical_token(token) {
                return Err(LexiconError::Invalid(format!("{name}: bad canonical token {token:?}")));
            }
        }
        for (from, to) in &synonyms {
            if !is_canonical_token(from) {
                return Err(LexiconError::Invalid(format!("{name}: bad synonym {from:?}")));
            }
            if !canonical.contains(to) {
                return Err(LexiconError::Invalid(format!(
                    "{name}: synonym {from:?} targets non-canonical {to:?}"
                )));
            }
            if canonical.contains(from) && from != to {
                return Err(LexiconError::Invalid(format!(
                    "{name}: canonical token {from:?} is remapped to {to:?}"
                )));
            }
        }
        Ok(TokenLexicon { canonical, synonyms })
    }

    /// Canonical form of `word`, or `None` when it is outside the vocabulary.
    pub fn canonicalize(&self, word: &str) -> Option<&str> {
        if let Some(c) = self.canonical.get(word) {
            return Some(c);
        }
        self.synonyms.get(word).map(String::as_str)
    }

    pub fn canonical(&self) -> impl Iterator<Item = &str> {
        self.canonical.iter().map(String::as_str)
    }

    pub fn contains_canonical(&self, token: &str) -> bool {
        self.canonical.contains(token)
    }

    pub fn synonyms(&self) -> impl Iterator<Item = (&str, &str)> {
        self.synonyms.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

/// A multi-word phrase mapped to a relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase<R> {
    pub words: Vec<String>,
    pub relation: R,
}

/// All vocabularies used by extraction. Read-only after loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    nouns: BTreeSet<String>,
    irregular_plurals: BTreeMap<String, String>,
    colors: TokenLexicon,
    shapes: TokenLexicon,
    orientations: TokenLexicon,
    opposites: BTreeMap<String, String>,
    spatial_relations: Vec<Phrase<PositionRelation>>,
    size_comparatives: Vec<Phrase<SizeRelation>>,
    number_words: BTreeMap<String, u32>,
    negation_cues: BTreeSet<String>,
}

fn parse_phrases<R: Copy>(
    name: &str,
    raw: BTreeMap<String, String>,
    lookup: impl Fn(&str) -> Option<R>,
) -> Result<Vec<Phrase<R>>, LexiconError> {
    let mut phrases = Vec::with_capacity(raw.len());
    for (phrase, rel) in raw {
        let relation =
            lookup(&rel).ok_or_else(|| LexiconError::Invalid(format!("{name}: unknown relation {rel:?}")))?;
        let words: Vec<String> = phrase.split_whitespace().map(str::to_string).collect();
        if words.is_empty() || words.iter().any(|w| !is_canonical_token(w)) {
            return Err(LexiconError::Invalid(format!("{name}: bad phrase {phrase:?}")));
        }
        phrases.push(Phrase { words, relation });
    }
    // Longest phrases match first.
    phrases.sort_by(|a, b| b.words.len().cmp(&a.words.len()).then_with(|| a.words.cmp(&b.words)));
    Ok(phrases)
}

impl Lexicons {
    /// The lexicons shipped with the toolkit.
    pub fn default_fixture() -> Self {
        Self::from_toml_str(DEFAULT_LEXICONS).expect("shipped lexicons are valid")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, LexiconError> {
        let raw: RawLexicons = toml::from_str(text)?;

        let nouns: BTreeSet<String> = raw.nouns.canonical.into_iter().collect();
        if nouns.is_empty() {
            return Err(LexiconError::Invalid("nouns: canonical list is empty".into()));
        }
        if let Some(bad) = nouns.iter().find(|n| !is_canonical_token(n)) {
            return Err(LexiconError::Invalid(format!("nouns: bad token {bad:?}")));
        }
        for (plural, singular) in &raw.nouns.irregular_plurals {
            if !is_canonical_token(plural) || !nouns.contains(singular) {
                return Err(LexiconError::Invalid(format!(
                    "nouns: irregular plural {plural:?} -> {singular:?} does not target a known noun"
                )));
            }
        }

        let colors = TokenLexicon::build("colors", raw.colors.canonical, raw.colors.synonyms)?;
        let shapes = TokenLexicon::build("shapes", raw.shapes.canonical, raw.shapes.synonyms)?;
        let orientations =
            TokenLexicon::build("orientations", raw.orientations.canonical, raw.orientations.synonyms)?;
        for (a, b) in &raw.orientations.opposites {
            if !orientations.contains_canonical(a) || !orientations.contains_canonical(b) || a == b {
                return Err(LexiconError::Invalid(format!("orientations: bad opposite pair {a:?} -> {b:?}")));
            }
            if raw.orientations.opposites.get(b) != Some(a) {
                return Err(LexiconError::Invalid(format!(
                    "orientations: opposites must be an involution ({a:?} -> {b:?} lacks the reverse)"
                )));
            }
        }

        let spatial_relations = parse_phrases("spatial_relations", raw.spatial_relations, PositionRelation::from_token)?;
        let size_comparatives = parse_phrases("size_comparatives", raw.size_comparatives, SizeRelation::from_token)?;

        for word in raw.number_words.keys() {
            if !is_canonical_token(word) {
                return Err(LexiconError::Invalid(format!("number_words: bad word {word:?}")));
            }
        }
        let negation_cues: BTreeSet<String> = raw.negation.cues.into_iter().collect();
        if negation_cues.iter().any(|c| c.is_empty() || c.chars().any(char::is_whitespace)) {
            return Err(LexiconError::Invalid("negation: cues must be single non-empty words".into()));
        }

        Ok(Lexicons {
            nouns,
            irregular_plurals: raw.nouns.irregular_plurals,
            colors,
            shapes,
            orientations,
            opposites: raw.orientations.opposites,
            spatial_relations,
            size_comparatives,
            number_words: raw.number_words,
            negation_cues,
        })
    }

    pub fn nouns(&self) -> impl Iterator<Item = &str> {
        self.nouns.iter().map(String::as_str)
    }

    pub fn is_noun(&self, token: &str) -> bool {
        self.nouns.contains(token)
    }

    /// Maps a (possibly plural) word onto its canonical noun.
    pub fn canonical_noun(&self, word: &str) -> Option<&str> {
        if let Some(n) = self.nouns.get(word) {
            return Some(n);
        }
        if let Some(n) = self.irregular_plurals.get(word) {
            return Some(n);
        }
        let mut candidates = Vec::with_capacity(3);
        if let Some(stem) = word.strip_suffix("ies") {
            candidates.push(format!("{stem}y"));
        }
        if let Some(stem) = word.strip_suffix("es") {
            candidates.push(stem.to_string());
        }
        if let Some(stem) = word.strip_suffix('s') {
            candidates.push(stem.to_string());
        }
        candidates.into_iter().find_map(|c| self.nouns.get(&c).map(String::as_str))
    }

    /// English plural of a canonical noun, consistent with [`Lexicons::canonical_noun`].
    pub fn plural(&self, noun: &str) -> String {
        if let Some((plural, _)) = self.irregular_plurals.iter().find(|(_, s)| s.as_str() == noun) {
            return plural.clone();
        }
        let ends_consonant_y = noun.ends_with('y')
            && noun
                .chars()
                .rev()
                .nth(1)
                .is_some_and(|c| !matches!(c, 'a' | 'e' | 'i' | 'o' | 'u'));
        if ends_consonant_y {
            format!("{}ies", &noun[..noun.len() - 1])
        } else if ["s", "x", "z", "ch", "sh"].iter().any(|s| noun.ends_with(s)) {
            format!("{noun}es")
        } else {
            format!("{noun}s")
        }
    }

    pub fn colors(&self) -> &TokenLexicon {
        &self.colors
    }

    pub fn shapes(&self) -> &TokenLexicon {
        &self.shapes
    }

    pub fn orientations(&self) -> &TokenLexicon {
        &self.orientations
    }

    pub fn opposite_orientation(&self, orientation: &str) -> Option<&str> {
        self.opposites.get(orientation).map(String::as_str)
    }

    pub fn spatial_relations(&self) -> &[Phrase<PositionRelation>] {
        &self.spatial_relations
    }

    pub fn size_comparatives(&self) -> &[Phrase<SizeRelation>] {
        &self.size_comparatives
    }

    /// Value of a cardinal word or digit string.
    pub fn cardinal(&self, word: &str) -> Option<u32> {
        if !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit()) {
            return word.parse().ok();
        }
        self.number_words.get(word).copied()
    }

    /// Spelled-out form of `n`, when the lexicon has one.
    pub fn number_word(&self, n: u32) -> Option<&str> {
        self.number_words
            .iter()
            .find(|(_, v)| **v == n)
            .map(|(w, _)| w.as_str())
    }

    /// Whether `word` is a negation cue; cues starting with `n'` also match as suffixes (`don't`).
    pub fn is_negation(&self, word: &str) -> bool {
        self.negation_cues.contains(word)
            || self
                .negation_cues
                .iter()
                .any(|cue| cue.starts_with("n'") && word.len() > cue.len() && word.ends_with(cue.as_str()))
    }

    /// True when `word` belongs to any attribute vocabulary (color, shape, orientation).
    pub fn is_attribute(&self, word: &str) -> bool {
        self.colors.canonicalize(word).is_some()
            || self.shapes.canonicalize(word).is_some()
            || self.orientations.canonicalize(word).is_some()
    }
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::default_fixture()
    }
}
