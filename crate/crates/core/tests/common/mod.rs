//! Shared naive oracle for the rewrite engine.

use textnorm::fst::{compile_rewrite, literal, string_map, Fst, RewriteRule, BOS, EOS};

/// A rule whose contexts are literal strings, optionally anchored to the
/// ends of the input.
#[derive(Debug, Clone)]
pub struct SimpleRule {
    pub map: Vec<(String, String)>,
    pub left: String,
    pub left_anchored: bool,
    pub right: String,
    pub right_anchored: bool,
}

impl SimpleRule {
    pub fn compile(&self) -> Fst {
        let pairs: Vec<(&str, &str)> = self
            .map
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let bos = BOS.to_string();
        let eos = EOS.to_string();
        let left = if self.left_anchored {
            literal(&format!("{bos}{}", self.left))
        } else {
            literal(&self.left)
        };
        let right = if self.right_anchored {
            literal(&format!("{}{eos}", self.right))
        } else {
            literal(&self.right)
        };
        let rule = RewriteRule::new(string_map(&pairs), left, right).unwrap();
        compile_rewrite(&rule, &Fst::sigma_star()).unwrap()
    }

    fn left_ok(&self, before: &[char]) -> bool {
        let l: Vec<char> = self.left.chars().collect();
        if self.left_anchored {
            before == l.as_slice()
        } else {
            before.ends_with(&l)
        }
    }

    fn right_ok(&self, after: &[char]) -> bool {
        let r: Vec<char> = self.right.chars().collect();
        if self.right_anchored {
            after == r.as_slice()
        } else {
            after.starts_with(&r)
        }
    }

    /// Scan left to right; at each position take the longest source whose
    /// contexts hold on the input, else copy one scalar.
    pub fn oracle(&self, s: &str) -> String {
        let x: Vec<char> = s.chars().collect();
        let mut out = String::new();
        let mut i = 0;
        while i < x.len() {
            let best = self
                .map
                .iter()
                .filter(|(u, _)| {
                    let u: Vec<char> = u.chars().collect();
                    x[i..].starts_with(&u)
                        && self.left_ok(&x[..i])
                        && self.right_ok(&x[i + u.len()..])
                })
                .max_by_key(|(u, _)| u.chars().count());
            match best {
                Some((u, v)) => {
                    out.push_str(v);
                    i += u.chars().count();
                }
                None => {
                    out.push(x[i]);
                    i += 1;
                }
            }
        }
        out
    }
}
