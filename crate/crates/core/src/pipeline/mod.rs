//! The six-step normalizer:
//!
//! 1. language-agnostic preprocessing ([`preprocess`]),
//! 2. token or sentence filtering ([`filter`]),
//! 3. language-specific rules ([`apply_language_rules`]),
//! 4. punctuation detachment ([`detach_punctuation`]),
//! 5. freestanding punctuation deletion ([`delete_freestanding_punct`]),
//! 6. whitespace collapsing ([`collapse_whitespace`]).
//!
//! The reserved token `<UNK>` passes through every step untouched.

mod steps;
mod tokens;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;
use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::fst::FstError;
use crate::rules::LanguageProfile;

pub use steps::{
    collapse_whitespace, delete_freestanding_punct, detach_punctuation, is_detachable, is_punct,
    preprocess, APOSTROPHE_LIKE,
};
pub use tokens::{invalid_tokens, is_number, is_time, is_valid_token, is_web_address};

/// Placeholder for an invalid token in token mode.
pub const UNK: &str = "<UNK>";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input is not valid UTF-8: {0}")]
    InvalidUtf8(#[from] std::str::Utf8Error),
    #[error("rule application failed: {0}")]
    Engine(#[from] FstError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FilterMode {
    /// Reject the whole sentence if any token is invalid.
    #[default]
    Sentence,
    /// Replace each invalid token with `<UNK>`.
    Token,
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::Sentence => "sentence",
            FilterMode::Token => "token",
        })
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sentence" => Ok(FilterMode::Sentence),
            "token" => Ok(FilterMode::Token),
            _ => Err(format!(
                "unknown filter mode {s:?} (expected sentence or token)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Kept,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedSentence {
    pub text: String,
    pub status: Status,
    /// Tokens replaced by `<UNK>`; always 0 in sentence mode.
    pub replaced_tokens: usize,
}

impl NormalizedSentence {
    pub fn is_kept(&self) -> bool {
        self.status == Status::Kept
    }
}

/// Step 1 on raw bytes.
pub fn preprocess_bytes(bytes: &[u8]) -> Result<String> {
    Ok(preprocess(std::str::from_utf8(bytes)?))
}

/// Step 2. Rejected sentences come back unchanged.
pub fn filter(s: &str, profile: &LanguageProfile, mode: FilterMode) -> NormalizedSentence {
    match mode {
        FilterMode::Sentence => {
            let ok = s.split_whitespace().all(|t| is_valid_token(t, profile));
            NormalizedSentence {
                text: s.to_string(),
                status: if ok { Status::Kept } else { Status::Rejected },
                replaced_tokens: 0,
            }
        }
        FilterMode::Token => {
            let mut replaced = 0;
            let text = steps::map_tokens(s, |t| {
                if is_valid_token(t, profile) {
                    t.to_string()
                } else {
                    replaced += 1;
                    UNK.to_string()
                }
            });
            NormalizedSentence {
                text,
                status: Status::Kept,
                replaced_tokens: replaced,
            }
        }
    }
}

/// Step 3: the profile's cascade, applied between `<UNK>` tokens. An
/// inserted combining mark is moved into canonical order.
pub fn apply_language_rules(
    s: &str,
    profile: &LanguageProfile,
) -> std::result::Result<String, FstError> {
    let Some(cascade) = profile.cascade().filter(|c| !c.is_empty()) else {
        return Ok(s.to_string());
    };
    let out: String = steps::unk_pieces(s)
        .map(|p| {
            if p == UNK {
                Ok(p.to_string())
            } else {
                cascade.apply(p)
            }
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(if is_nfc(&out) {
        out
    } else {
        out.nfc().collect()
    })
}

/// The intermediate strings of one normalization, one per step that ran.
/// A sentence rejected at step 2 has two entries. When rules are disabled
/// the step-3 entry repeats step 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<String>,
    pub result: NormalizedSentence,
}

/// A profile plus settings: everything needed to normalize sentences.
#[derive(Debug, Clone)]
pub struct Normalizer {
    profile: LanguageProfile,
    mode: FilterMode,
    rules: bool,
}

impl Normalizer {
    /// All six steps.
    pub fn new(profile: LanguageProfile, mode: FilterMode) -> Self {
        Normalizer {
            profile,
            mode,
            rules: true,
        }
    }

    /// Every step except the language-specific rules.
    pub fn base(profile: LanguageProfile, mode: FilterMode) -> Self {
        Normalizer {
            profile,
            mode,
            rules: false,
        }
    }

    pub fn profile(&self) -> &LanguageProfile {
        &self.profile
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn applies_rules(&self) -> bool {
        self.rules
    }

    pub fn trace(&self, s: &str) -> Result<Trace> {
        let s1 = preprocess(s);
        let filtered = filter(&s1, &self.profile, self.mode);
        if filtered.status == Status::Rejected {
            let result = NormalizedSentence {
                text: s1.clone(),
                ..filtered.clone()
            };
            return Ok(Trace {
                steps: vec![s1, filtered.text],
                result,
            });
        }
        let s2 = filtered.text;
        let s3 = if self.rules {
            apply_language_rules(&s2, &self.profile)?
        } else {
            s2.clone()
        };
        let s4 = detach_punctuation(&s3);
        let s5 = delete_freestanding_punct(&s4);
        let s6 = collapse_whitespace(&s5);
        let result = NormalizedSentence {
            text: s6.clone(),
            status: Status::Kept,
            replaced_tokens: filtered.replaced_tokens,
        };
        Ok(Trace {
            steps: vec![s1, s2, s3, s4, s5, s6],
            result,
        })
    }

    /// Rejected sentences keep their step-1 text.
    pub fn normalize(&self, s: &str) -> Result<NormalizedSentence> {
        Ok(self.trace(s)?.result)
    }

    pub fn normalize_all<S: AsRef<str> + Sync>(
        &self,
        sentences: &[S],
    ) -> Result<Vec<NormalizedSentence>> {
        sentences
            .par_iter()
            .map(|s| self.normalize(s.as_ref()))
            .collect()
    }
}

/// All six steps with `profile`.
pub fn normalize(
    s: &str,
    profile: &LanguageProfile,
    mode: FilterMode,
) -> Result<NormalizedSentence> {
    Normalizer::new(profile.clone(), mode).normalize(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Language;

    fn malagasy() -> LanguageProfile {
        LanguageProfile::builtin(Language::Malagasy).unwrap()
    }

    #[test]
    fn derivation_table() {
        let t = Normalizer::new(malagasy(), FilterMode::Token)
            .trace("Собака @ FIRY IZAO?")
            .unwrap();
        assert_eq!(
            t.steps,
            [
                "собака @ firy izao?",
                "<UNK> @ firy izao?",
                "<UNK> amin'ny firy izao?",
                "<UNK> amin'ny firy izao ?",
                "<UNK> amin'ny firy izao ",
                "<UNK> amin'ny firy izao",
            ]
        );
        assert_eq!(t.result.replaced_tokens, 1);
    }

    #[test]
    fn filter_modes() {
        let mg = malagasy();
        let kept = filter("firy izao", &mg, FilterMode::Sentence);
        assert_eq!(
            (kept.text.as_str(), kept.status),
            ("firy izao", Status::Kept)
        );
        let rej = filter("собака @ firy izao?", &mg, FilterMode::Sentence);
        assert_eq!(
            (rej.text.as_str(), rej.status),
            ("собака @ firy izao?", Status::Rejected)
        );
        let zu = LanguageProfile::builtin(Language::Zulu).unwrap();
        assert_eq!(
            filter("1,234,567 cows", &zu, FilterMode::Sentence).status,
            Status::Rejected
        );
        let tok = filter("a  собака\tb", &mg, FilterMode::Token);
        assert_eq!(tok.text, "a  <UNK>\tb");
    }

    #[test]
    fn whole_pipeline() {
        let g = LanguageProfile::generic();
        assert_eq!(
            normalize("John arrived.", &g, FilterMode::Sentence)
                .unwrap()
                .text,
            "john arrived"
        );
        let empty = normalize("", &g, FilterMode::Sentence).unwrap();
        assert_eq!((empty.text.as_str(), empty.status), ("", Status::Kept));
        let af = LanguageProfile::builtin(Language::Afrikaans).unwrap();
        assert_eq!(
            normalize("\u{2019}T was goed.", &af, FilterMode::Sentence)
                .unwrap()
                .text,
            "het was goed"
        );
        let base = Normalizer::base(af, FilterMode::Sentence);
        assert_eq!(base.normalize("'t was goed.").unwrap().text, "'t was goed");
        let so = LanguageProfile::builtin(Language::Somali).unwrap();
        assert_eq!(
            apply_language_rules("Waa maxay?", &so).unwrap(),
            "Waa maxay?"
        );
    }

    #[test]
    fn rejected_skips_later_steps() {
        let t = Normalizer::new(malagasy(), FilterMode::Sentence)
            .trace("Собака @ FIRY IZAO?")
            .unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.result.status, Status::Rejected);
        assert_eq!(t.result.text, "собака @ firy izao?");
    }

    #[test]
    fn bytes_must_be_utf8() {
        assert!(matches!(
            preprocess_bytes(b"ok\xff"),
            Err(PipelineError::InvalidUtf8(_))
        ));
        assert_eq!(preprocess_bytes("ÀB".as_bytes()).unwrap(), "àb");
    }
}
