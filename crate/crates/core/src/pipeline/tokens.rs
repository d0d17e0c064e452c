//! The valid-token grammar of step 2.

use std::sync::OnceLock;

use regex::Regex;

use super::steps::{is_detachable, is_punct};
use super::UNK;
use crate::rules::LanguageProfile;

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

/// Up to six integer digits, grouped by commas or not, and up to four
/// decimals.
pub fn is_number(s: &str) -> bool {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"^(?:[0-9]{1,6}|[0-9]{1,3},[0-9]{3})(?:\.[0-9]{1,4})?$").is_match(s)
}

/// `H:MM`, `HH:MM` or `HH:MM:SS` on a 24-hour clock.
pub fn is_time(s: &str) -> bool {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"^(?:[01]?[0-9]|2[0-3]):[0-5][0-9](?::[0-5][0-9])?$").is_match(s)
}

pub fn is_web_address(s: &str) -> bool {
    static URL: OnceLock<Regex> = OnceLock::new();
    static EMAIL: OnceLock<Regex> = OnceLock::new();
    re(&URL, r"^(?:[a-z][a-z0-9+.\-]*://|www\.)[^\s]+$").is_match(s)
        || re(
            &EMAIL,
            r"^[\p{L}\p{N}._\-]+@[\p{L}\p{N}\-]+(?:\.[\p{L}\p{N}\-]+)*\.\p{L}{2,}$",
        )
        .is_match(s)
}

fn is_word(s: &str, profile: &LanguageProfile) -> bool {
    s.chars()
        .all(|c| c == '\'' || c == '-' || profile.in_alphabet(c))
        && s.chars().any(|c| c.is_alphabetic())
}

/// Whether `tok` (one whitespace-free token) is valid for `profile`.
pub fn is_valid_token(tok: &str, profile: &LanguageProfile) -> bool {
    if tok == UNK || profile.extra_valid_tokens().contains(tok) || is_web_address(tok) {
        return true;
    }
    if tok.chars().all(is_punct) {
        return true;
    }
    let core = tok.trim_matches(is_detachable);
    profile.extra_valid_tokens().contains(core)
        || is_web_address(core)
        || is_time(core)
        || is_number(core)
        || is_word(core, profile)
}

/// The tokens of `s` that fail the grammar, in order.
pub fn invalid_tokens<'a>(s: &'a str, profile: &LanguageProfile) -> Vec<&'a str> {
    s.split_whitespace()
        .filter(|t| !is_valid_token(t, profile))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Language;

    #[test]
    fn numbers_and_times() {
        for ok in ["7", "123456", "1,234", "999,999", "3.1415", "12.5"] {
            assert!(is_number(ok), "{ok}");
        }
        for bad in ["1234567", "1,234,567", "1,23", "1.23456", ".5", "1.", "١٢"] {
            assert!(!is_number(bad), "{bad}");
        }
        for ok in ["9:30", "09:30", "23:59:59", "0:00"] {
            assert!(is_time(ok), "{ok}");
        }
        for bad in ["24:00", "9:60", "930", "12:3"] {
            assert!(!is_time(bad), "{bad}");
        }
    }

    #[test]
    fn addresses() {
        assert!(is_web_address("https://mg.wikipedia.org/wiki/x"));
        assert!(is_web_address("www.example.com"));
        assert!(is_web_address("user@site.mg"));
        assert!(!is_web_address("user@site"));
        assert!(!is_web_address("@"));
    }

    #[test]
    fn token_grammar() {
        let mg = LanguageProfile::builtin(Language::Malagasy).unwrap();
        let zu = LanguageProfile::builtin(Language::Zulu).unwrap();
        assert!(!is_valid_token("собака", &mg));
        assert!(is_valid_token("@", &mg));
        assert!(is_valid_token("izao?", &mg));
        assert!(is_valid_token("\u{AB}amin'ny\u{BB},", &mg));
        assert!(is_valid_token("i-afrika", &zu));
        assert!(is_valid_token("<UNK>", &zu));
        assert!(is_valid_token("(1,234.50)", &zu));
        assert!(is_valid_token("10:45,", &zu));
        assert!(is_valid_token("covid19", &zu));
        assert!(is_valid_token("\u{2014}", &zu));
        assert!(!is_valid_token("1234567", &zu));
        assert!(!is_valid_token("a.b", &zu));
        assert!(!is_valid_token("x@y", &zu));
        let am = LanguageProfile::builtin(Language::Amharic).unwrap();
        assert!(is_valid_token("ሰላም\u{1362}", &am));
        assert!(!is_valid_token("hello", &am));
        assert_eq!(
            invalid_tokens("a 1234567 b собака", &zu),
            ["1234567", "собака"]
        );
    }
}
