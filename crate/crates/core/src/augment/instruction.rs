use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::counterfactual::Counterfactual;
use super::scene::SceneRecord;
use super::templates::Templates;
use crate::dsl;
use crate::fact::VhType;

/// Whether instructions carry the bracketed fact tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Style {
    #[default]
    Full,
    NoFactTokens,
}

impl FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Style::Full),
            "bare" | "no_fact_tokens" => Ok(Style::NoFactTokens),
            other => Err(format!("unknown style {other:?} (expected full or bare)")),
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Full => "full",
            Style::NoFactTokens => "bare",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InstructionMode<'a> {
    Original,
    Counterfactual(&'a Counterfactual),
}

/// `[FACT: COUNT=?] (How many apples are in the image?)` or, for a
/// counter-factual, `[CHECK_COLOR: RED] (Is this ball red?)`. The bare style
/// drops the token and the parentheses. Position instructions get the
/// configured suffix.
pub fn format_instruction(scene: &SceneRecord, mode: InstructionMode<'_>, style: Style, templates: &Templates) -> String {
    let (token, question, vh_type) = match mode {
        InstructionMode::Original => (dsl::query_token(scene.vh_type), scene.question.trim(), scene.vh_type),
        InstructionMode::Counterfactual(cf) => (cf.check_token.clone(), cf.prompt.as_str(), cf.claim.vh_type()),
    };
    let mut out = match style {
        Style::Full => format!("{token} ({question})"),
        Style::NoFactTokens => question.to_string(),
    };
    if vh_type == VhType::Position && templates.original.append_position_suffix {
        out.push(' ');
        out.push_str(&templates.original.position_suffix);
    }
    out
}
