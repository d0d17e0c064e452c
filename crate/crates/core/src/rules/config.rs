//! Declarative profile configuration in TOML:
//!
//! ```toml
//! [profile.zulu]
//! classifiers = ["i", "isi", "ama"]
//!
//! [profile.hausa-nigeria]
//! language = "hausa"
//! direction = "nigeria"
//!
//! [profile.plain-latin]
//! alphabet = ["a-z", "0-9", "\u0300-\u036F"]
//! extra_valid_tokens = ["&"]
//! ```
//!
//! A table name that is a built-in language needs no `language` key. Tables
//! for other languages must give an alphabet and get no rules.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{Direction, Language, LanguageProfile, ProfileOptions, Result, RuleError};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub language: Option<String>,
    pub direction: Option<String>,
    pub classifiers: Option<Vec<String>>,
    pub extra_valid_tokens: Option<Vec<String>>,
    /// Entries are single scalars (`"x"`) or inclusive ranges (`"a-z"`).
    pub alphabet: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    profile: BTreeMap<String, ProfileConfig>,
}

fn parse_range(s: &str) -> Result<(char, char)> {
    let cs: Vec<char> = s.chars().collect();
    match cs.as_slice() {
        [c] => Ok((*c, *c)),
        [lo, '-', hi] if lo <= hi => Ok((*lo, *hi)),
        [lo, '-', hi] => Err(RuleError::InvalidRange(*lo, *hi)),
        _ => Err(RuleError::Config(format!("bad alphabet entry {s:?}"))),
    }
}

impl ProfileConfig {
    pub fn build(&self, name: &str) -> Result<LanguageProfile> {
        let lang_name = self.language.as_deref().unwrap_or(name);
        let direction = self
            .direction
            .as_deref()
            .map(Direction::from_str)
            .transpose()?;
        let alphabet = self
            .alphabet
            .as_ref()
            .map(|a| a.iter().map(|s| parse_range(s)).collect::<Result<Vec<_>>>())
            .transpose()?;
        match Language::from_str(lang_name) {
            Ok(lang) => LanguageProfile::with_options(
                lang,
                &ProfileOptions {
                    direction,
                    classifiers: self.classifiers.clone(),
                    extra_valid_tokens: self.extra_valid_tokens.clone(),
                    alphabet,
                },
            ),
            Err(e) => {
                let Some(alphabet) = alphabet else {
                    return Err(e);
                };
                if self.classifiers.is_some() {
                    return Err(RuleError::Config(format!(
                        "classifiers only apply to zulu, not {lang_name}"
                    )));
                }
                LanguageProfile::new(
                    lang_name,
                    alphabet,
                    self.extra_valid_tokens.clone().unwrap_or_default(),
                    None,
                    direction,
                )
            }
        }
    }
}

/// Parses a TOML document into named profiles.
pub fn parse_profiles(text: &str) -> Result<BTreeMap<String, LanguageProfile>> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| RuleError::Config(e.to_string()))?;
    file.profile
        .iter()
        .map(|(name, cfg)| Ok((name.clone(), cfg.build(name)?)))
        .collect()
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<BTreeMap<String, LanguageProfile>> {
    parse_profiles(&std::fs::read_to_string(path)?)
}
