//! Runtime settings from an optional TOML file.
//!
//! ```toml
//! [scoring]
//! lambda = 1.0
//! [scoring.gamma]
//! counting = 2.0
//!
//! [lexicons]
//! path = "lexicons.toml"
//!
//! [augment]
//! templates = "templates.toml"
//! seed = 42
//! counterfactual_ratio = 1.0
//! style = "full"
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::augment::{AugmentConfig, Style, TemplateError, Templates};
use crate::lexicon::{LexiconError, Lexicons};
use crate::scoring::{ConfigError, ScoringConfig, ScoringSection};

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "GVF_CONFIG";

const DEFAULT_LEXICONS: &str = include_str!("../data/lexicons.toml");
const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.toml");

#[derive(Debug, Error)]
pub enum SettingsError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error(transparent)]
    Scoring(#[from] ConfigError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid setting: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconSection {
    path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AugmentSection {
    templates: Option<PathBuf>,
    seed: Option<u64>,
    counterfactual_ratio: Option<f64>,
    style: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    scoring: ScoringSection,
    #[serde(default)]
    lexicons: LexiconSection,
    #[serde(default)]
    augment: AugmentSection,
}

/// Effective settings after the config file and command-line overrides.
#[derive(Debug, Clone)]
pub struct Settings {
    pub scoring: ScoringConfig,
    pub lexicons: Lexicons,
    pub templates: Templates,
    pub augment: AugmentConfig,
    lexicon_text: String,
    template_text: String,
}

fn read(path: &Path) -> Result<String, SettingsError> {
    std::fs::read_to_string(path).map_err(|source| SettingsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct HashInput<'a> {
    scoring: ScoringSection,
    augment: &'a AugmentConfig,
    lexicons: String,
    templates: String,
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            scoring: ScoringConfig::default(),
            lexicons: Lexicons::default_fixture(),
            templates: Templates::default_fixture(),
            augment: AugmentConfig::default(),
            lexicon_text: DEFAULT_LEXICONS.to_string(),
            template_text: DEFAULT_TEMPLATES.to_string(),
        }
    }
}

impl Settings {
    /// Loads `path`, or the shipped defaults when `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, SettingsError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = read(path)?;
        let file: ConfigFile = toml::from_str(&text).map_err(|source| SettingsError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let lexicon_text = match &file.lexicons.path {
            Some(p) => read(&resolve(p))?,
            None => DEFAULT_LEXICONS.to_string(),
        };
        let lexicons = Lexicons::from_toml_str(&lexicon_text)?;
        let template_text = match &file.augment.templates {
            Some(p) => read(&resolve(p))?,
            None => DEFAULT_TEMPLATES.to_string(),
        };
        let templates = Templates::from_toml_str(&template_text, &lexicons)?;

        let mut augment = AugmentConfig::default();
        if let Some(seed) = file.augment.seed {
            augment.seed = seed;
        }
        if let Some(r) = file.augment.counterfactual_ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(SettingsError::Invalid(format!("counterfactual_ratio must lie in [0, 1], got {r}")));
            }
            augment.counterfactual_ratio = r;
        }
        if let Some(s) = &file.augment.style {
            augment.style = s.parse::<Style>().map_err(SettingsError::Invalid)?;
        }

        Ok(Settings {
            scoring: ScoringConfig::from_section(&file.scoring)?,
            lexicons,
            templates,
            augment,
            lexicon_text,
            template_text,
        })
    }

    /// Config path from an explicit flag, else from `GVF_CONFIG`.
    pub fn locate(flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    /// SHA-256 over the effective settings, echoed in provenance headers.
    pub fn hash(&self) -> String {
        let input = HashInput {
            scoring: self.scoring.to_section(),
            augment: &self.augment,
            lexicons: sha_hex(self.lexicon_text.as_bytes()),
            templates: sha_hex(self.template_text.as_bytes()),
        };
        sha_hex(serde_json::to_string(&input).expect("hash input serializes").as_bytes())
    }
}
