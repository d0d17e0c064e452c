use unicode_general_category::{get_general_category, GeneralCategory as G};
use unicode_normalization::UnicodeNormalization;

use super::UNK;

/// Scalars that step 1 rewrites to U+0027.
pub const APOSTROPHE_LIKE: [char; 6] = [
    '\u{2018}', '\u{2019}', '\u{02BC}', '\u{02B9}', '\u{00B4}', '\u{0060}',
];

/// Unicode punctuation (P*) or symbol (S*).
pub fn is_punct(c: char) -> bool {
    matches!(
        get_general_category(c),
        G::ConnectorPunctuation
            | G::DashPunctuation
            | G::OpenPunctuation
            | G::ClosePunctuation
            | G::InitialPunctuation
            | G::FinalPunctuation
            | G::OtherPunctuation
            | G::MathSymbol
            | G::CurrencySymbol
            | G::ModifierSymbol
            | G::OtherSymbol
    )
}

/// Punctuation that detaches from a token; apostrophe and hyphen stay put.
pub fn is_detachable(c: char) -> bool {
    c != '\'' && c != '-' && is_punct(c)
}

/// Splits `s` around the reserved token, keeping it as its own piece.
pub(crate) fn unk_pieces(s: &str) -> impl Iterator<Item = &str> {
    let mut rest = s;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        match rest.find(UNK) {
            Some(0) => {
                rest = &rest[UNK.len()..];
                Some(UNK)
            }
            Some(i) => {
                let (a, b) = rest.split_at(i);
                rest = b;
                Some(a)
            }
            None => Some(std::mem::take(&mut rest)),
        }
    })
}

/// Rewrites every whitespace-delimited token with `f`, leaving the
/// whitespace between tokens as it was.
pub(crate) fn map_tokens(s: &str, mut f: impl FnMut(&str) -> String) -> String {
    let mut out = String::with_capacity(s.len());
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(b)) => {
                out.push_str(&f(&s[b..i]));
                out.push(c);
                start = None;
            }
            (true, None) => out.push(c),
            (false, None) => start = Some(i),
            (false, Some(_)) => {}
        }
    }
    if let Some(b) = start {
        out.push_str(&f(&s[b..]));
    }
    out
}

fn preprocess_piece(s: &str) -> String {
    s.to_lowercase()
        .nfc()
        .map(|c| {
            if APOSTROPHE_LIKE.contains(&c) {
                '\''
            } else {
                c
            }
        })
        .collect()
}

/// Step 1: lowercase, NFC, and unify apostrophes. The reserved token is
/// left as is.
pub fn preprocess(s: &str) -> String {
    unk_pieces(s)
        .map(|p| {
            if p == UNK {
                p.to_string()
            } else {
                preprocess_piece(p)
            }
        })
        .collect()
}

fn detach_piece(p: &str, out: &mut Vec<String>) {
    let lead = p.find(|c: char| !is_detachable(c)).unwrap_or(p.len());
    if lead == p.len() {
        out.push(p.to_string());
        return;
    }
    let trail = p.rfind(|c: char| !is_detachable(c)).map_or(p.len(), |i| {
        i + p[i..].chars().next().map_or(0, char::len_utf8)
    });
    for part in [&p[..lead], &p[lead..trail], &p[trail..]] {
        if !part.is_empty() {
            out.push(part.to_string());
        }
    }
}

/// Step 4: splits the leading and trailing punctuation run of each token
/// into tokens of their own.
pub fn detach_punctuation(s: &str) -> String {
    map_tokens(s, |tok| {
        let mut parts = Vec::new();
        for p in unk_pieces(tok) {
            if p == UNK {
                parts.push(p.to_string());
            } else {
                detach_piece(p, &mut parts);
            }
        }
        parts.join(" ")
    })
}

/// Step 5: removes tokens made only of punctuation, keeping their spacing.
pub fn delete_freestanding_punct(s: &str) -> String {
    map_tokens(s, |tok| {
        if tok != UNK && tok.chars().all(is_punct) {
            String::new()
        } else {
            tok.to_string()
        }
    })
}

/// Step 6: single spaces between tokens, none at the ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
