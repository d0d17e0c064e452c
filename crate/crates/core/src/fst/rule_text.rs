//! Line-oriented rule syntax:
//!
//! ```text
//! LHS -> RHS / LEFT _ RIGHT
//! ```
//!
//! The context part is optional and either context may be empty. Patterns
//! are small regular expressions: literals, `[a-z]` classes, `.` (any
//! scalar), `( | )` grouping, postfix `* + ?`, and `#` for the string
//! boundary inside contexts. Unescaped whitespace is ignored; write a space
//! as `\s`. `\u{XXXX}` names a scalar by code point and `\` escapes any
//! other character. Blank lines and lines starting with `//` are skipped.

use super::{
    char_class, closure_plus, concat, cross, literal, optional, star, union, Fst, FstError, Result,
};
use super::{RewriteRule, BOS, EOS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lhs,
    Rhs,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Lit(char),
    Meta(char),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>> {
    let err = |m: &str| FstError::Syntax {
        line,
        message: m.to_string(),
    };
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('s') => out.push(Tok::Lit(' ')),
                Some('u') if chars.peek() == Some(&'{') => {
                    chars.next();
                    let hex: String = chars.by_ref().take_while(|&c| c != '}').collect();
                    let cp =
                        u32::from_str_radix(&hex, 16).map_err(|_| err("bad \\u{..} escape"))?;
                    out.push(Tok::Lit(
                        char::from_u32(cp).ok_or_else(|| err("\\u{..} is not a scalar value"))?,
                    ));
                }
                Some(other) => out.push(Tok::Lit(other)),
                None => return Err(err("dangling escape")),
            },
            c if c.is_whitespace() => {}
            '|' | '*' | '+' | '?' | '(' | ')' | '[' | ']' | '.' | '#' | '_' | '/' => {
                out.push(Tok::Meta(c))
            }
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                out.push(Tok::Meta('>'));
            }
            c => out.push(Tok::Lit(c)),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    side: Side,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, m: &str) -> FstError {
        FstError::Syntax {
            line: self.line,
            message: m.to_string(),
        }
    }

    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn alt(&mut self) -> Result<Fst> {
        let mut f = self.seq()?;
        while self.peek() == Some(Tok::Meta('|')) {
            self.pos += 1;
            f = union(&f, &self.seq()?);
        }
        Ok(f)
    }

    fn seq(&mut self) -> Result<Fst> {
        let mut f = Fst::epsilon();
        while let Some(t) = self.peek() {
            if matches!(t, Tok::Meta('|') | Tok::Meta(')')) {
                break;
            }
            let atom = self.postfix()?;
            f = concat(&f, &atom);
        }
        Ok(f)
    }

    fn postfix(&mut self) -> Result<Fst> {
        let mut f = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Meta('*')) => f = star(&f),
                Some(Tok::Meta('+')) => f = closure_plus(&f),
                Some(Tok::Meta('?')) => f = optional(&f),
                _ => return Ok(f),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<Fst> {
        let t = self
            .peek()
            .ok_or_else(|| self.err("unexpected end of pattern"))?;
        self.pos += 1;
        match t {
            Tok::Lit(c) => Ok(literal(&c.to_string())),
            Tok::Meta('.') => Ok(Fst::any_char()),
            Tok::Meta('#') => match self.side {
                Side::Left => Ok(literal(&BOS.to_string())),
                Side::Right => Ok(literal(&EOS.to_string())),
                _ => Err(self.err("'#' is only allowed in contexts")),
            },
            Tok::Meta('(') => {
                let f = self.alt()?;
                if self.peek() != Some(Tok::Meta(')')) {
                    return Err(self.err("missing ')'"));
                }
                self.pos += 1;
                Ok(f)
            }
            Tok::Meta('[') => self.class(),
            Tok::Meta(m) => Err(self.err(&format!("unexpected '{m}'"))),
        }
    }

    fn class(&mut self) -> Result<Fst> {
        let mut ranges = Vec::new();
        loop {
            let lo = match self.peek() {
                Some(Tok::Meta(']')) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Lit(c)) => c,
                Some(Tok::Meta(m)) => m,
                None => return Err(self.err("unterminated class")),
            };
            self.pos += 1;
            if self.peek() == Some(Tok::Lit('-')) {
                if let Some(Tok::Lit(hi)) = self.toks.get(self.pos + 1).copied() {
                    self.pos += 2;
                    ranges.push((lo, hi));
                    continue;
                }
            }
            ranges.push((lo, lo));
        }
        char_class(&ranges).map_err(|e| self.err(&e.to_string()))
    }
}

fn pattern(toks: &[Tok], side: Side, line: usize) -> Result<Fst> {
    let mut p = Parser {
        toks,
        pos: 0,
        side,
        line,
    };
    let f = p.alt()?;
    if p.pos != toks.len() {
        return Err(p.err("trailing input in pattern"));
    }
    Ok(f)
}

fn split_at_meta(toks: &[Tok], m: char) -> Option<(&[Tok], &[Tok])> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        match t {
            Tok::Meta('(') | Tok::Meta('[') => depth += 1,
            Tok::Meta(')') | Tok::Meta(']') => depth -= 1,
            Tok::Meta(c) if *c == m && depth == 0 => return Some((&toks[..i], &toks[i + 1..])),
            _ => {}
        }
    }
    None
}

/// Parses one rule line. `line` is used for error positions only.
pub fn parse_rule(text: &str, line: usize) -> Result<RewriteRule> {
    let toks = tokenize(text, line)?;
    let syntax = |m: &str| FstError::Syntax {
        line,
        message: m.to_string(),
    };
    let (lhs, rest) = split_at_meta(&toks, '>').ok_or_else(|| syntax("expected '->'"))?;
    let (rhs, ctx) = match split_at_meta(rest, '/') {
        Some((r, c)) => (r, Some(c)),
        None => (rest, None),
    };
    let upper = pattern(lhs, Side::Lhs, line)?;
    let lower = pattern(rhs, Side::Rhs, line)?;
    let tau = cross(&upper, &lower).map_err(|e| syntax(&e.to_string()))?;
    let (left, right) = match ctx {
        None => (Fst::epsilon(), Fst::epsilon()),
        Some(c) => {
            let (l, r) = split_at_meta(c, '_').ok_or_else(|| syntax("expected '_' in context"))?;
            (
                pattern(l, Side::Left, line)?,
                pattern(r, Side::Right, line)?,
            )
        }
    };
    RewriteRule::new(tau, left, right)
}

/// Parses every rule in `text`, one per line.
pub fn parse_rules(text: &str) -> Result<Vec<RewriteRule>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with("//")
        })
        .map(|(i, l)| parse_rule(l, i + 1))
        .collect()
}
