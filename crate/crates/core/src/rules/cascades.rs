use unicode_normalization::UnicodeNormalization;

use super::{Direction, Result, RuleCascade, RuleError};
use crate::fst::{
    char_class, concat, literal, optional, star, string_map, token_end, token_start, union, Fst,
    RewriteRule,
};

/// Zulu noun-class prefixes that may be hyphenated onto vowel-initial stems.
pub const DEFAULT_ZULU_CLASSIFIERS: [&str; 18] = [
    "i", "u", "a", "o", "e", "um", "im", "in", "isi", "izi", "ama", "aba", "ubu", "uku", "ulu",
    "izin", "imi", "ili",
];

/// Ethiopic series collapsed by the Amharic cascade, as
/// `(first, last, first target)`. Members map by their offset in the series.
const AMHARIC_SERIES: [(u32, u32, u32); 6] = [
    (0x1210, 0x1217, 0x1200), // ሐ -> ሀ
    (0x1280, 0x1287, 0x1200), // ኀ -> ሀ
    (0x1288, 0x1288, 0x1207), // ኈ has no order-aligned ሀ form
    (0x12B8, 0x12BE, 0x1200), // ኸ -> ሀ
    (0x12D0, 0x12D6, 0x12A0), // ዐ -> አ
    (0x1340, 0x1347, 0x1338), // ፀ -> ጸ
];

/// Scalar ranges that never survive the Amharic cascade.
pub const AMHARIC_NON_PREFERRED: [(char, char); 5] = [
    ('\u{1210}', '\u{1217}'),
    ('\u{1280}', '\u{1288}'),
    ('\u{12B8}', '\u{12BF}'),
    ('\u{12D0}', '\u{12D7}'),
    ('\u{1340}', '\u{1347}'),
];

fn scalar(cp: u32) -> char {
    char::from_u32(cp).expect("static code point")
}

fn map_rule(pairs: &[(String, String)]) -> Result<RewriteRule> {
    let borrowed: Vec<(&str, &str)> = pairs
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    Ok(RewriteRule::context_free(string_map(&borrowed))?)
}

pub fn amharic_cascade() -> Result<RuleCascade> {
    let pairs: Vec<(String, String)> = AMHARIC_SERIES
        .iter()
        .flat_map(|&(lo, hi, to)| {
            (lo..=hi).map(move |cp| (scalar(cp).to_string(), scalar(to + cp - lo).to_string()))
        })
        .collect();
    RuleCascade::compile("amharic", None, &[map_rule(&pairs)?])
}

/// Deletes a hyphen between a token-initial classifier and a vowel.
pub fn zulu_cascade(classifiers: &[String]) -> Result<RuleCascade> {
    if classifiers.is_empty() {
        return Err(RuleError::NoClassifiers);
    }
    let mut prefixes = Fst::empty();
    for c in classifiers {
        if c.is_empty() || c.chars().any(|ch| ch.is_whitespace() || ch.is_uppercase()) {
            return Err(RuleError::InvalidClassifier(c.clone()));
        }
        prefixes = union(&prefixes, &literal(c));
    }
    let left = concat(&token_start(), &prefixes);
    let vowels = char_class(&[('a', 'a'), ('e', 'e'), ('i', 'i'), ('o', 'o'), ('u', 'u')])?;
    let rule = RewriteRule::new(string_map(&[("-", "")]), left, vowels)?;
    RuleCascade::compile("zulu", None, &[rule])
}

/// `ñ` becomes `n̈`; a standalone `@` becomes `amin'ny`.
pub fn malagasy_cascade() -> Result<RuleCascade> {
    let tilde = RewriteRule::context_free(string_map(&[("\u{F1}", "n\u{308}")]))?;
    let at = RewriteRule::new(string_map(&[("@", "amin'ny")]), token_start(), token_end())?;
    RuleCascade::compile("malagasy", None, &[tilde, at])
}

/// Punctuation that may hug a contraction before it is detached.
const OPENING: [(char, char); 4] = [
    ('(', '('),
    ('"', '"'),
    ('\u{AB}', '\u{AB}'),
    ('\u{201C}', '\u{201C}'),
];
const CLOSING: [(char, char); 10] = [
    ('!', '!'),
    ('"', '"'),
    (')', ')'),
    (',', ','),
    ('.', '.'),
    (':', ';'),
    ('?', '?'),
    ('\u{BB}', '\u{BB}'),
    ('\u{201D}', '\u{201D}'),
    ('\u{2026}', '\u{2026}'),
];

/// `'t` becomes `het` and `'k` becomes `ek` when they stand alone as tokens.
pub fn afrikaans_cascade() -> Result<RuleCascade> {
    let left = concat(&token_start(), &optional(&char_class(&OPENING)?));
    let right = concat(&star(&char_class(&CLOSING)?), &token_end());
    let rule = RewriteRule::new(string_map(&[("'t", "het"), ("'k", "ek")]), left, right)?;
    RuleCascade::compile("afrikaans", None, &[rule])
}

pub fn hausa_cascade(direction: Direction) -> Result<RuleCascade> {
    let pairs = match direction {
        Direction::Niger => [("'y", "\u{1B4}")],
        Direction::Nigeria => [("\u{1B4}", "'y")],
        d => {
            return Err(RuleError::DirectionMismatch {
                language: "hausa".into(),
                direction: d,
            })
        }
    };
    let rule = RewriteRule::context_free(string_map(&pairs))?;
    RuleCascade::compile("hausa", Some(direction), &[rule])
}

/// Tone marks that can precompose with the affected Igbo letters.
const IGBO_MARKS: [char; 5] = ['\u{300}', '\u{301}', '\u{302}', '\u{304}', '\u{30C}'];

pub fn igbo_cascade(direction: Direction) -> Result<RuleCascade> {
    let onwu = [
        ("\u{F6}", "\u{1ECD}"),
        ("\u{FC}", "\u{1EE5}"),
        ("\u{F1}", "\u{1E45}"),
    ];
    let base: Vec<(&str, &str)> = match direction {
        Direction::Onwu => onwu.to_vec(),
        Direction::NewStandard => onwu.iter().map(|&(a, b)| (b, a)).collect(),
        d => {
            return Err(RuleError::DirectionMismatch {
                language: "igbo".into(),
                direction: d,
            })
        }
    };
    let mut pairs: Vec<(String, String)> = base
        .iter()
        .map(|&(a, b)| (a.to_string(), b.to_string()))
        .collect();
    // A tone mark may be fused into the letter on either side, e.g.
    // ü + acute = ǘ; match and emit the NFC form.
    for &(src, tgt) in &base {
        for m in IGBO_MARKS {
            pairs.push((
                format!("{src}{m}").nfc().collect(),
                format!("{tgt}{m}").nfc().collect(),
            ));
        }
    }
    RuleCascade::compile("igbo", Some(direction), &[map_rule(&pairs)?])
}
