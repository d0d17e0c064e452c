//! Compilation of context-dependent rewrite rules `τ / λ _ ρ` into a single
//! functional transducer.
//!
//! Semantics are obligatory and leftmost-longest, with both contexts tested
//! against the input string: scanning left to right, at each position where
//! the input seen so far ends in `λ`, the longest `u ∈ dom(τ)` that is
//! followed by a string starting with `ρ` is replaced by `τ(u)`; scanning
//! resumes after `u`. Positions with no such match are copied. An empty
//! match inserts `τ(ε)` and copies the next scalar.
//!
//! The transducer is built as a product of deterministic machines for the
//! left context, the domain of `τ` and the right context, plus `τ` itself.
//! Lookahead is handled by guessing and carrying obligations forward:
//! positive ones (the right context must still occur) and negative ones (no
//! match may start at a copied position, no longer match may exist). A path
//! survives only if every guess was right, so exactly one path accepts.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::optimize::optimize;
use super::{
    concat, star, union, Applier, Arc, Fst, FstError, Label, Result, State, StateId, BOS, EOS,
};

/// An obligatory rewrite rule: `tau` applies where `left` ends just before
/// and `right` starts just after the match.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub tau: Fst,
    pub left: Fst,
    pub right: Fst,
}

impl RewriteRule {
    pub fn new(tau: Fst, left: Fst, right: Fst) -> Result<Self> {
        if !left.is_acceptor() || !right.is_acceptor() {
            return Err(FstError::NotAcceptor);
        }
        let domain = tau.project_input();
        if domain.trim().num_arcs() == 0 && !domain.accepts("") {
            return Err(FstError::InvalidRule(
                "replacement has an empty domain".into(),
            ));
        }
        if domain.accepts("") && (left.accepts("") || right.accepts("")) {
            return Err(FstError::InvalidRule(
                "replacement accepts the empty string; both contexts must be non-trivial".into(),
            ));
        }
        for c in [BOS, EOS] {
            if tau.alphabet().contains(&c) {
                return Err(FstError::InvalidRule(
                    "boundary markers may only occur in contexts".into(),
                ));
            }
        }
        Ok(RewriteRule { tau, left, right })
    }

    /// A rule that applies everywhere.
    pub fn context_free(tau: Fst) -> Result<Self> {
        Self::new(tau, Fst::epsilon(), Fst::epsilon())
    }
}

/// Deterministic machine with a transition table keyed by label.
struct Dfa {
    trans: Vec<HashMap<Label, StateId>>,
    finals: Vec<bool>,
    start: StateId,
}

impl Dfa {
    fn from_acceptor(f: &Fst) -> Dfa {
        let d = optimize(f);
        debug_assert!(d.is_acceptor());
        let trans = (0..d.num_states())
            .map(|s| d.arcs(s).iter().map(|a| (a.ilabel, a.next)).collect())
            .collect();
        let finals = (0..d.num_states()).map(|s| d.is_final(s)).collect();
        Dfa {
            trans,
            finals,
            start: d.start(),
        }
    }

    fn step(&self, s: StateId, l: Label) -> Option<StateId> {
        self.trans[s].get(&l).copied()
    }

    fn is_final(&self, s: StateId) -> bool {
        self.finals[s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Item {
    /// Running through the domain of `tau`.
    Dom(StateId),
    /// Running through the right context after a domain match.
    Right(StateId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Mode {
    Outside {
        after_empty: bool,
    },
    Inside {
        tau: StateId,
        dom: StateId,
        consumed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Config {
    sigma: StateId,
    left: StateId,
    mode: Mode,
    /// Negative lookahead: failure if any `Right` item reaches a final state.
    neg: Vec<Item>,
    /// Positive lookahead: right-context runs that must still succeed.
    pos: Vec<StateId>,
}

struct Machines {
    sigma: Dfa,
    left: Dfa,
    right: Dfa,
    dom: Dfa,
    tau: Fst,
    has_eos: bool,
}

impl Machines {
    fn closure(&self, mut items: Vec<Item>) -> Option<Vec<Item>> {
        let extra: Vec<Item> = items
            .iter()
            .filter_map(|it| match it {
                Item::Dom(d) if self.dom.is_final(*d) => Some(Item::Right(self.right.start)),
                _ => None,
            })
            .collect();
        items.extend(extra);
        items.sort();
        items.dedup();
        if items
            .iter()
            .any(|it| matches!(it, Item::Right(r) if self.right.is_final(*r)))
        {
            None
        } else {
            Some(items)
        }
    }

    fn step_items(&self, items: &[Item], l: Label) -> Vec<Item> {
        items
            .iter()
            .filter_map(|it| match *it {
                Item::Dom(d) => self.dom.step(d, l).map(Item::Dom),
                Item::Right(r) => self.right.step(r, l).map(Item::Right),
            })
            .collect()
    }

    fn step_pos(&self, pos: &[StateId], l: Label) -> Option<Vec<StateId>> {
        let mut out = Vec::with_capacity(pos.len());
        for &r in pos {
            let n = self.right.step(r, l)?;
            if !self.right.is_final(n) {
                out.push(n);
            }
        }
        out.sort();
        out.dedup();
        Some(out)
    }

    fn spawn(&self) -> Option<Vec<Item>> {
        self.closure(vec![Item::Dom(self.dom.start)])
    }

    /// Consumes one input scalar outside the match-local bookkeeping.
    fn consume(&self, c: &Config, l: Label, spawn: bool) -> Option<Config> {
        let sigma = self.sigma.step(c.sigma, l)?;
        let left = self.left.step(c.left, l)?;
        let mut neg = c.neg.clone();
        if spawn {
            neg.extend(self.spawn()?);
        }
        let neg = self.closure(self.step_items(&neg, l))?;
        let pos = self.step_pos(&c.pos, l)?;
        Some(Config {
            sigma,
            left,
            mode: c.mode,
            neg,
            pos,
        })
    }

    fn accepts_at_end(&self, c: &Config) -> bool {
        let Mode::Outside { after_empty } = c.mode else {
            return false;
        };
        if !self.sigma.is_final(c.sigma) {
            return false;
        }
        let eos = Label::Sym(EOS);
        for &r in &c.pos {
            let ok = self.has_eos
                && self
                    .right
                    .step(r, eos)
                    .is_some_and(|n| self.right.is_final(n));
            if !ok {
                return false;
            }
        }
        let mut neg = c.neg.clone();
        if !after_empty && self.left.is_final(c.left) {
            match self.spawn() {
                Some(items) => neg.extend(items),
                None => return false,
            }
        }
        if self.has_eos {
            let stepped = self.step_items(&neg, eos);
            if stepped
                .iter()
                .any(|it| matches!(it, Item::Right(r) if self.right.is_final(*r)))
            {
                return false;
            }
        }
        true
    }
}

/// Compiles `rule` into a functional transducer over `sigma`, an acceptor
/// for the strings the rule may be applied to (usually `Σ*`).
pub fn compile_rewrite(rule: &RewriteRule, sigma: &Fst) -> Result<Fst> {
    if !sigma.is_acceptor() {
        return Err(FstError::NotAcceptor);
    }
    if !rule.tau.is_functional() {
        return Err(FstError::AmbiguousRule);
    }

    let mut alphabet: BTreeSet<char> = BTreeSet::new();
    for f in [&rule.tau, &rule.left, &rule.right, sigma] {
        alphabet.extend(f.alphabet().iter().copied());
    }
    let widen = |f: &Fst| {
        let mut f = f.clone();
        f.widen_alphabet(&alphabet);
        f
    };
    let mut any = Fst::any_char();
    any.widen_alphabet(&alphabet);
    let has_bos = alphabet.contains(&BOS);
    let has_eos = alphabet.contains(&EOS);

    let tau = widen(&rule.tau).trim();
    let m = Machines {
        sigma: Dfa::from_acceptor(&widen(sigma)),
        left: Dfa::from_acceptor(&concat(&star(&any), &widen(&rule.left))),
        right: Dfa::from_acceptor(&widen(&rule.right)),
        dom: Dfa::from_acceptor(&tau.project_input()),
        tau,
        has_eos,
    };

    let left_start = if has_bos {
        // Σ*λ is complete, so the boundary step always exists.
        m.left
            .step(m.left.start, Label::Sym(BOS))
            .unwrap_or(m.left.start)
    } else {
        m.left.start
    };
    let inputs: Vec<Label> = alphabet
        .iter()
        .filter(|&&c| c != BOS && c != EOS)
        .map(|&c| Label::Sym(c))
        .chain(std::iter::once(Label::Other))
        .collect();

    let init = Config {
        sigma: m.sigma.start,
        left: left_start,
        mode: Mode::Outside { after_empty: false },
        neg: Vec::new(),
        pos: Vec::new(),
    };

    let mut states: Vec<State> = Vec::new();
    let mut index: HashMap<Config, StateId> = HashMap::new();
    let mut queue: VecDeque<Config> = VecDeque::new();
    let mut intern =
        |c: Config, states: &mut Vec<State>, queue: &mut VecDeque<Config>| -> StateId {
            if let Some(&id) = index.get(&c) {
                return id;
            }
            let id = states.len();
            states.push(State {
                arcs: Vec::new(),
                is_final: m.accepts_at_end(&c),
            });
            index.insert(c.clone(), id);
            queue.push_back(c);
            id
        };
    let start = intern(init, &mut states, &mut queue);
    // Ids are handed out in queue order, so the n-th popped config is state n.
    let mut src = 0;

    while let Some(c) = queue.pop_front() {
        let mut moves: Vec<(Label, Label, Config)> = Vec::new();
        match c.mode {
            Mode::Outside { after_empty } => {
                let left_holds = m.left.is_final(c.left);
                if !after_empty && left_holds {
                    let mut n = c.clone();
                    n.mode = Mode::Inside {
                        tau: m.tau.start(),
                        dom: m.dom.start,
                        consumed: false,
                    };
                    moves.push((Label::Eps, Label::Eps, n));
                }
                for &l in &inputs {
                    if let Some(mut n) = m.consume(&c, l, !after_empty && left_holds) {
                        n.mode = Mode::Outside { after_empty: false };
                        moves.push((l, l, n));
                    }
                }
            }
            Mode::Inside { tau, dom, consumed } => {
                for a in m.tau.arcs(tau) {
                    if a.ilabel == Label::Eps {
                        let mut n = c.clone();
                        n.mode = Mode::Inside {
                            tau: a.next,
                            dom,
                            consumed,
                        };
                        moves.push((Label::Eps, a.olabel, n));
                        continue;
                    }
                    let Some(dom2) = m.dom.step(dom, a.ilabel) else {
                        continue;
                    };
                    if let Some(mut n) = m.consume(&c, a.ilabel, false) {
                        n.mode = Mode::Inside {
                            tau: a.next,
                            dom: dom2,
                            consumed: true,
                        };
                        moves.push((a.ilabel, a.olabel, n));
                    }
                }
                if m.tau.is_final(tau) {
                    let mut n = c.clone();
                    n.mode = Mode::Outside {
                        after_empty: !consumed,
                    };
                    if !m.right.is_final(m.right.start) {
                        n.pos.push(m.right.start);
                        n.pos.sort();
                        n.pos.dedup();
                    }
                    // No longer match from the same start: runs on from the
                    // current domain state without the zero-length closure.
                    n.neg.push(Item::Dom(dom));
                    n.neg.sort();
                    n.neg.dedup();
                    moves.push((Label::Eps, Label::Eps, n));
                }
            }
        }
        for (il, ol, n) in moves {
            let dst = intern(n, &mut states, &mut queue);
            states[src].arcs.push(Arc::new(il, ol, dst));
        }
        src += 1;
    }

    let result = Fst::from_parts(states, start, alphabet).trim();
    let result = strip_boundaries(result);
    match Applier::new(&result) {
        Ok(app) if app.is_functional() => Ok(result),
        _ => Err(FstError::AmbiguousRule),
    }
}

/// Boundary markers are never read or written by the compiled machine; drop
/// them from the alphabet so `Other` stays meaningful for real input.
fn strip_boundaries(f: Fst) -> Fst {
    let (states, start, mut alphabet) = f.into_parts();
    alphabet.remove(&BOS);
    alphabet.remove(&EOS);
    Fst::from_parts(states, start, alphabet)
}

/// Scalars for which `char::is_whitespace` holds.
const WHITESPACE: [(char, char); 10] = [
    ('\t', '\r'),
    (' ', ' '),
    ('\u{85}', '\u{85}'),
    ('\u{A0}', '\u{A0}'),
    ('\u{1680}', '\u{1680}'),
    ('\u{2000}', '\u{200A}'),
    ('\u{2028}', '\u{2029}'),
    ('\u{202F}', '\u{202F}'),
    ('\u{205F}', '\u{205F}'),
    ('\u{3000}', '\u{3000}'),
];

fn whitespace() -> Fst {
    super::char_class(&WHITESPACE).expect("static class")
}

/// `(BOS | whitespace)`: a left context that holds at the start of a token.
pub fn token_start() -> Fst {
    union(&super::literal(&BOS.to_string()), &whitespace())
}

/// `(EOS | whitespace)`: a right context that holds at the end of a token.
pub fn token_end() -> Fst {
    union(&super::literal(&EOS.to_string()), &whitespace())
}
