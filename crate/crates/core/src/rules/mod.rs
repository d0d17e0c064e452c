//! Per-language profiles (alphabet, extra valid tokens, orthographic
//! direction) and the rewrite cascades that implement each language's
//! normalization rules.

mod cascades;
mod config;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::fst::{compile_rewrite, Applier, Fst, FstError, RewriteRule};

pub use cascades::{
    afrikaans_cascade, amharic_cascade, hausa_cascade, igbo_cascade, malagasy_cascade,
    zulu_cascade, AMHARIC_NON_PREFERRED, DEFAULT_ZULU_CLASSIFIERS,
};
pub use config::{load_profiles, parse_profiles, ProfileConfig};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("unknown direction {0:?}")]
    UnknownDirection(String),
    #[error("direction {direction} does not apply to {language}")]
    DirectionMismatch {
        language: String,
        direction: Direction,
    },
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("invalid alphabet range {0:?}..{1:?}")]
    InvalidRange(char, char),
    #[error("extra valid token {0:?} is empty or contains whitespace")]
    InvalidExtraToken(String),
    #[error("classifier list is empty")]
    NoClassifiers,
    #[error("classifier {0:?} must be a non-empty lowercase string without whitespace")]
    InvalidClassifier(String),
    #[error("profile config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] FstError),
}

pub type Result<T> = std::result::Result<T, RuleError>;

/// The languages with built-in profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    Amharic,
    Zulu,
    Malagasy,
    Afrikaans,
    Hausa,
    Igbo,
    Somali,
    Swahili,
}

impl Language {
    pub const ALL: [Language; 8] = [
        Language::Amharic,
        Language::Zulu,
        Language::Malagasy,
        Language::Afrikaans,
        Language::Hausa,
        Language::Igbo,
        Language::Somali,
        Language::Swahili,
    ];

    /// ISO 639-1 code.
    pub fn code(self) -> &'static str {
        match self {
            Language::Amharic => "am",
            Language::Zulu => "zu",
            Language::Malagasy => "mg",
            Language::Afrikaans => "af",
            Language::Hausa => "ha",
            Language::Igbo => "ig",
            Language::Somali => "so",
            Language::Swahili => "sw",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::Amharic => "amharic",
            Language::Zulu => "zulu",
            Language::Malagasy => "malagasy",
            Language::Afrikaans => "afrikaans",
            Language::Hausa => "hausa",
            Language::Igbo => "igbo",
            Language::Somali => "somali",
            Language::Swahili => "swahili",
        }
    }

    /// Directions this language accepts, first one being the default.
    pub fn directions(self) -> &'static [Direction] {
        match self {
            Language::Hausa => &[Direction::Niger, Direction::Nigeria],
            Language::Igbo => &[Direction::Onwu, Direction::NewStandard],
            _ => &[],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_lowercase();
        Language::ALL
            .into_iter()
            .find(|l| l.code() == s || l.name() == s)
            .ok_or(RuleError::UnknownLanguage(s))
    }
}

/// Which orthographic standard a cascade converts *into*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Hausa as written in Niger: `'y` becomes `ƴ`.
    Niger,
    /// Hausa as written in Nigeria: `ƴ` becomes `'y`.
    Nigeria,
    /// Igbo Ọnwụ alphabet: `ö ü ñ` become `ọ ụ ṅ`.
    Onwu,
    /// Igbo New Standard Alphabet: `ọ ụ ṅ` become `ö ü ñ`.
    NewStandard,
}

impl Direction {
    pub fn language(self) -> Language {
        match self {
            Direction::Niger | Direction::Nigeria => Language::Hausa,
            Direction::Onwu | Direction::NewStandard => Language::Igbo,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Niger => "niger",
            Direction::Nigeria => "nigeria",
            Direction::Onwu => "onwu",
            Direction::NewStandard => "new_standard",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "niger" => Ok(Direction::Niger),
            "nigeria" => Ok(Direction::Nigeria),
            "onwu" => Ok(Direction::Onwu),
            "new_standard" | "newstandard" => Ok(Direction::NewStandard),
            _ => Err(RuleError::UnknownDirection(s.to_string())),
        }
    }
}

/// An ordered list of compiled rewrite rules, applied one after another.
#[derive(Debug, Clone)]
pub struct RuleCascade {
    language: String,
    direction: Option<Direction>,
    transducers: Vec<Fst>,
    appliers: Vec<Applier>,
}

impl RuleCascade {
    /// Compiles `rules` over Σ*.
    pub fn compile(
        language: &str,
        direction: Option<Direction>,
        rules: &[RewriteRule],
    ) -> Result<Self> {
        let sigma = Fst::sigma_star();
        let transducers = rules
            .iter()
            .map(|r| compile_rewrite(r, &sigma))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_transducers(language, direction, transducers)
    }

    /// Wraps already compiled functional transducers.
    pub fn from_transducers(
        language: &str,
        direction: Option<Direction>,
        transducers: Vec<Fst>,
    ) -> Result<Self> {
        let appliers = transducers
            .iter()
            .map(Applier::new)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if appliers.iter().any(|a| !a.is_functional()) {
            return Err(FstError::AmbiguousRule.into());
        }
        Ok(RuleCascade {
            language: language.to_string(),
            direction,
            transducers,
            appliers,
        })
    }

    pub fn empty(language: &str) -> Self {
        RuleCascade {
            language: language.to_string(),
            direction: None,
            transducers: Vec::new(),
            appliers: Vec::new(),
        }
    }

    pub fn apply(&self, s: &str) -> std::result::Result<String, FstError> {
        let mut cur = s.to_string();
        for a in &self.appliers {
            cur = a.apply(&cur)?;
        }
        Ok(cur)
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn direction(&self) -> Option<Direction> {
        self.direction
    }

    pub fn transducers(&self) -> &[Fst] {
        &self.transducers
    }

    pub fn len(&self) -> usize {
        self.appliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.appliers.is_empty()
    }
}

/// Lowercase Latin letters (basic, Latin-1, extended, IPA, additional),
/// ASCII digits and combining diacritics.
pub const LATIN_ALPHABET: &[(char, char)] = &[
    ('0', '9'),
    ('a', 'z'),
    ('\u{DF}', '\u{F6}'),
    ('\u{F8}', '\u{2AF}'),
    ('\u{300}', '\u{36F}'),
    ('\u{1E00}', '\u{1EFF}'),
];

/// Assigned Ethiopic syllables and combining marks, plus ASCII digits.
/// Ethiopic punctuation and numerals are left out.
pub const ETHIOPIC_ALPHABET: &[(char, char)] = &[
    ('0', '9'),
    ('\u{1200}', '\u{1248}'),
    ('\u{124A}', '\u{124D}'),
    ('\u{1250}', '\u{1256}'),
    ('\u{1258}', '\u{1258}'),
    ('\u{125A}', '\u{125D}'),
    ('\u{1260}', '\u{1288}'),
    ('\u{128A}', '\u{128D}'),
    ('\u{1290}', '\u{12B0}'),
    ('\u{12B2}', '\u{12B5}'),
    ('\u{12B8}', '\u{12BE}'),
    ('\u{12C0}', '\u{12C0}'),
    ('\u{12C2}', '\u{12C5}'),
    ('\u{12C8}', '\u{12D6}'),
    ('\u{12D8}', '\u{1310}'),
    ('\u{1312}', '\u{1315}'),
    ('\u{1318}', '\u{135A}'),
    ('\u{135D}', '\u{135F}'),
];

/// Per-language settings for token filtering and rule application.
#[derive(Debug, Clone)]
pub struct LanguageProfile {
    language: String,
    alphabet: Vec<(char, char)>,
    extra_valid_tokens: BTreeSet<String>,
    cascade: Option<Arc<RuleCascade>>,
    direction: Option<Direction>,
}

/// Overrides applied on top of a built-in profile.
#[derive(Debug, Clone, Default)]
pub struct ProfileOptions {
    pub direction: Option<Direction>,
    pub classifiers: Option<Vec<String>>,
    pub extra_valid_tokens: Option<Vec<String>>,
    pub alphabet: Option<Vec<(char, char)>>,
}

impl LanguageProfile {
    pub fn new(
        language: &str,
        alphabet: Vec<(char, char)>,
        extra_valid_tokens: impl IntoIterator<Item = String>,
        cascade: Option<RuleCascade>,
        direction: Option<Direction>,
    ) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(RuleError::EmptyAlphabet);
        }
        if let Some(&(lo, hi)) = alphabet.iter().find(|(lo, hi)| lo > hi) {
            return Err(RuleError::InvalidRange(lo, hi));
        }
        let extra_valid_tokens: BTreeSet<String> = extra_valid_tokens.into_iter().collect();
        if let Some(t) = extra_valid_tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(RuleError::InvalidExtraToken(t.clone()));
        }
        if let Some(d) = direction {
            if Language::from_str(language).ok() != Some(d.language()) {
                return Err(RuleError::DirectionMismatch {
                    language: language.to_string(),
                    direction: d,
                });
            }
        }
        let mut alphabet = alphabet;
        alphabet.sort();
        Ok(LanguageProfile {
            language: language.to_string(),
            alphabet,
            extra_valid_tokens,
            cascade: cascade.map(Arc::new),
            direction,
        })
    }

    /// The built-in profile for `language` with default options.
    pub fn builtin(language: Language) -> Result<Self> {
        Self::with_options(language, &ProfileOptions::default())
    }

    pub fn with_direction(language: Language, direction: Direction) -> Result<Self> {
        Self::with_options(
            language,
            &ProfileOptions {
                direction: Some(direction),
                ..Default::default()
            },
        )
    }

    pub fn with_options(language: Language, opts: &ProfileOptions) -> Result<Self> {
        let direction = match (opts.direction, language.directions().first()) {
            (Some(d), _) if d.language() != language => {
                return Err(RuleError::DirectionMismatch {
                    language: language.name().into(),
                    direction: d,
                })
            }
            (Some(d), _) => Some(d),
            (None, Some(&d)) => Some(d),
            (None, None) => None,
        };
        if opts.classifiers.is_some() && language != Language::Zulu {
            return Err(RuleError::Config(format!(
                "classifiers only apply to zulu, not {language}"
            )));
        }
        let cascade = match language {
            Language::Amharic => Some(amharic_cascade()?),
            Language::Zulu => {
                let cls: Vec<String> = opts.classifiers.clone().unwrap_or_else(|| {
                    DEFAULT_ZULU_CLASSIFIERS
                        .iter()
                        .map(|s| s.to_string())
                        .collect()
                });
                Some(zulu_cascade(&cls)?)
            }
            Language::Malagasy => Some(malagasy_cascade()?),
            Language::Afrikaans => Some(afrikaans_cascade()?),
            Language::Hausa => Some(hausa_cascade(
                direction.expect("hausa has a default direction"),
            )?),
            Language::Igbo => Some(igbo_cascade(
                direction.expect("igbo has a default direction"),
            )?),
            Language::Somali | Language::Swahili => None,
        };
        let alphabet = opts.alphabet.clone().unwrap_or_else(|| match language {
            Language::Amharic => ETHIOPIC_ALPHABET.to_vec(),
            _ => LATIN_ALPHABET.to_vec(),
        });
        let extra = opts
            .extra_valid_tokens
            .clone()
            .unwrap_or_else(|| match language {
                Language::Malagasy => vec!["@".to_string()],
                _ => Vec::new(),
            });
        Self::new(language.name(), alphabet, extra, cascade, direction)
    }

    /// A language-neutral Latin profile with no rules.
    pub fn generic() -> Self {
        Self::new("generic", LATIN_ALPHABET.to_vec(), Vec::new(), None, None)
            .expect("static profile")
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn alphabet(&self) -> &[(char, char)] {
        &self.alphabet
    }

    pub fn in_alphabet(&self, c: char) -> bool {
        let i = self.alphabet.partition_point(|&(lo, _)| lo <= c);
        self.alphabet[..i].iter().any(|&(_, hi)| c <= hi)
    }

    pub fn extra_valid_tokens(&self) -> &BTreeSet<String> {
        &self.extra_valid_tokens
    }

    pub fn cascade(&self) -> Option<&RuleCascade> {
        self.cascade.as_deref()
    }

    pub fn direction(&self) -> Option<Direction> {
        self.direction
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_names_and_codes() {
        assert_eq!("mg".parse::<Language>().unwrap(), Language::Malagasy);
        assert_eq!("Zulu".parse::<Language>().unwrap(), Language::Zulu);
        assert!("yoruba".parse::<Language>().is_err());
        assert_eq!(
            "new-standard".parse::<Direction>().unwrap(),
            Direction::NewStandard
        );
    }

    #[test]
    fn profile_invariants() {
        assert!(matches!(
            LanguageProfile::new("x", vec![], Vec::new(), None, None),
            Err(RuleError::EmptyAlphabet)
        ));
        assert!(matches!(
            LanguageProfile::new("x", vec![('a', 'z')], vec!["a b".to_string()], None, None),
            Err(RuleError::InvalidExtraToken(_))
        ));
        assert!(matches!(
            LanguageProfile::new(
                "zulu",
                vec![('a', 'z')],
                Vec::new(),
                None,
                Some(Direction::Niger)
            ),
            Err(RuleError::DirectionMismatch { .. })
        ));
        assert!(matches!(
            LanguageProfile::with_direction(Language::Hausa, Direction::Onwu),
            Err(RuleError::DirectionMismatch { .. })
        ));
    }

    #[test]
    fn builtin_profiles() {
        for l in Language::ALL {
            let p = LanguageProfile::builtin(l).unwrap();
            assert_eq!(
                p.direction().is_some(),
                matches!(l, Language::Hausa | Language::Igbo)
            );
            assert_eq!(
                p.cascade().is_none(),
                matches!(l, Language::Somali | Language::Swahili)
            );
        }
        let mg = LanguageProfile::builtin(Language::Malagasy).unwrap();
        assert!(mg.extra_valid_tokens().contains("@"));
        assert!(mg.in_alphabet('ñ') && mg.in_alphabet('7') && !mg.in_alphabet('с'));
        let am = LanguageProfile::builtin(Language::Amharic).unwrap();
        assert!(am.in_alphabet('ሀ') && !am.in_alphabet('\u{12BF}') && !am.in_alphabet('a'));
    }
}
