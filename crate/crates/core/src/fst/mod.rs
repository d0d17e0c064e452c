//! A small unweighted finite-state transducer library over Unicode scalar
//! values.
//!
//! Every [`Fst`] carries an explicit alphabet: the set of scalars that appear
//! on its arcs. The [`Label::Other`] label stands for every scalar *outside*
//! that alphabet. Operations that combine two machines first widen both to
//! the union of their alphabets, so `Other` always means the same thing on
//! both sides. An arc `Other:Other` copies the scalar it reads; `Other:x`
//! and `Other:ε` replace or delete it.
//!
//! The engine is the substrate for context-dependent rewrite rules
//! ([`compile_rewrite`]), which are applied to strings with [`apply`].

mod apply;
mod ops;
mod optimize;
mod rewrite;
pub mod rule_text;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use apply::{apply, Applier};
pub use ops::{
    char_class, closure_plus, compose, concat, cross, literal, optional, star, string_map, union,
};
pub use optimize::optimize;
pub use rewrite::{compile_rewrite, token_end, token_start, RewriteRule};

pub type StateId = usize;

/// Left-context boundary marker: matches the position before the first scalar.
pub const BOS: char = '\u{FDD0}';
/// Right-context boundary marker: matches the position after the last scalar.
pub const EOS: char = '\u{FDD1}';

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FstError {
    #[error("character class has no ranges")]
    EmptyClass,
    #[error("invalid character range {0:?}..={1:?}")]
    InvalidRange(char, char),
    #[error("operand of cross is not an acceptor")]
    NotAcceptor,
    #[error("cross target may not contain OTHER arcs (unbounded output)")]
    UnboundedOutput,
    #[error("rewrite rule is ambiguous: compiled transducer is not functional")]
    AmbiguousRule,
    #[error("invalid rewrite rule: {0}")]
    InvalidRule(String),
    #[error("input is not in the domain of the transducer")]
    NoPath,
    #[error("transducer produced more than one output")]
    NonFunctional,
    #[error("rule syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, FstError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Eps,
    Sym(char),
    /// Any scalar outside the machine's alphabet.
    Other,
}

impl Label {
    pub fn is_eps(self) -> bool {
        self == Label::Eps
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Eps => f.write_str("<eps>"),
            Label::Other => f.write_str("<other>"),
            Label::Sym(c) => write!(f, "{}", c.escape_debug()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub ilabel: Label,
    pub olabel: Label,
    pub next: StateId,
}

impl Arc {
    pub fn new(ilabel: Label, olabel: Label, next: StateId) -> Self {
        Arc {
            ilabel,
            olabel,
            next,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct State {
    pub arcs: Vec<Arc>,
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fst {
    states: Vec<State>,
    start: StateId,
    alphabet: BTreeSet<char>,
}

impl Default for Fst {
    fn default() -> Self {
        Self::empty()
    }
}

impl Fst {
    /// The machine with one non-final state: accepts nothing.
    pub fn empty() -> Self {
        Fst {
            states: vec![State::default()],
            start: 0,
            alphabet: BTreeSet::new(),
        }
    }

    /// The machine accepting only the empty string.
    pub fn epsilon() -> Self {
        Fst {
            states: vec![State {
                arcs: Vec::new(),
                is_final: true,
            }],
            start: 0,
            alphabet: BTreeSet::new(),
        }
    }

    /// Identity over every string (`Σ*` with `Σ` = all scalars).
    pub fn sigma_star() -> Self {
        Fst {
            states: vec![State {
                arcs: vec![Arc::new(Label::Other, Label::Other, 0)],
                is_final: true,
            }],
            start: 0,
            alphabet: BTreeSet::new(),
        }
    }

    /// Acceptor for any single scalar.
    pub fn any_char() -> Self {
        let mut fst = Fst::empty();
        let end = fst.add_state(true);
        fst.add_arc(0, Arc::new(Label::Other, Label::Other, end));
        fst
    }

    pub fn add_state(&mut self, is_final: bool) -> StateId {
        self.states.push(State {
            arcs: Vec::new(),
            is_final,
        });
        self.states.len() - 1
    }

    /// Adds an arc. Explicit scalars on the arc join the alphabet; callers
    /// combining machines go through the `ops` functions, which keep
    /// `Other` consistent when the alphabet grows.
    pub fn add_arc(&mut self, from: StateId, arc: Arc) {
        debug_assert!(arc.next < self.states.len());
        debug_assert!(arc.olabel != Label::Other || arc.ilabel == Label::Other);
        for l in [arc.ilabel, arc.olabel] {
            if let Label::Sym(c) = l {
                self.alphabet.insert(c);
            }
        }
        self.states[from].arcs.push(arc);
    }

    pub fn set_final(&mut self, s: StateId, is_final: bool) {
        self.states[s].is_final = is_final;
    }

    pub fn set_start(&mut self, s: StateId) {
        self.start = s;
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(|s| s.arcs.len()).sum()
    }

    pub fn state(&self, s: StateId) -> &State {
        &self.states[s]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn arcs(&self, s: StateId) -> &[Arc] {
        &self.states[s].arcs
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.states[s].is_final
    }

    /// Explicit scalars of this machine. `Other` covers everything else.
    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    /// True when every arc has identical input and output labels.
    pub fn is_acceptor(&self) -> bool {
        self.states
            .iter()
            .flat_map(|s| &s.arcs)
            .all(|a| a.ilabel == a.olabel)
    }

    pub fn has_other(&self) -> bool {
        self.states
            .iter()
            .flat_map(|s| &s.arcs)
            .any(|a| a.ilabel == Label::Other || a.olabel == Label::Other)
    }

    /// Structural invariants: arcs target existing states, `Other` on the
    /// output side only as a copy of `Other` input.
    pub fn is_well_formed(&self) -> bool {
        self.start < self.states.len()
            && self.states.iter().flat_map(|s| &s.arcs).all(|a| {
                a.next < self.states.len() && (a.olabel != Label::Other || a.ilabel == Label::Other)
            })
    }

    /// Widens the alphabet to include `extra`. Each `Other`-input arc gets an
    /// explicit copy for every new scalar so the relation is unchanged.
    pub fn widen_alphabet(&mut self, extra: &BTreeSet<char>) {
        let new: Vec<char> = extra.difference(&self.alphabet).copied().collect();
        if new.is_empty() {
            return;
        }
        for state in &mut self.states {
            let mut added = Vec::new();
            for arc in state.arcs.iter().filter(|a| a.ilabel == Label::Other) {
                for &c in &new {
                    let olabel = if arc.olabel == Label::Other {
                        Label::Sym(c)
                    } else {
                        arc.olabel
                    };
                    added.push(Arc::new(Label::Sym(c), olabel, arc.next));
                }
            }
            state.arcs.extend(added);
        }
        self.alphabet.extend(new);
    }

    /// Swaps input and output labels. Fails when an `Other:x` arc would
    /// become `x:Other`.
    pub fn invert(&self) -> Result<Fst> {
        let mut out = self.clone();
        for state in &mut out.states {
            for arc in &mut state.arcs {
                if arc.ilabel == Label::Other && arc.olabel != Label::Other {
                    return Err(FstError::UnboundedOutput);
                }
                std::mem::swap(&mut arc.ilabel, &mut arc.olabel);
            }
        }
        Ok(out)
    }

    /// Acceptor for the input language.
    pub fn project_input(&self) -> Fst {
        let mut out = self.clone();
        for arc in out.states.iter_mut().flat_map(|s| s.arcs.iter_mut()) {
            arc.olabel = arc.ilabel;
        }
        out
    }

    /// Acceptor for the output language. `Other:x` arcs become `x:x`, and
    /// `Other:ε` arcs become `ε`.
    pub fn project_output(&self) -> Fst {
        let mut out = self.clone();
        for arc in out.states.iter_mut().flat_map(|s| s.arcs.iter_mut()) {
            arc.ilabel = arc.olabel;
        }
        out
    }

    /// Removes states that are not both reachable from the start and able to
    /// reach a final state. The start state is always kept.
    pub fn trim(&self) -> Fst {
        let n = self.states.len();
        let mut reach = vec![false; n];
        let mut stack = vec![self.start];
        reach[self.start] = true;
        while let Some(s) = stack.pop() {
            for a in &self.states[s].arcs {
                if !reach[a.next] {
                    reach[a.next] = true;
                    stack.push(a.next);
                }
            }
        }
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (s, st) in self.states.iter().enumerate() {
            for a in &st.arcs {
                rev[a.next].push(s);
            }
        }
        let mut coreach = vec![false; n];
        let mut stack: Vec<StateId> = (0..n).filter(|&s| self.states[s].is_final).collect();
        for &s in &stack {
            coreach[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !coreach[p] {
                    coreach[p] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<bool> = (0..n)
            .map(|s| (reach[s] && coreach[s]) || s == self.start)
            .collect();
        let mut map = vec![usize::MAX; n];
        let mut out = Fst {
            states: Vec::new(),
            start: 0,
            alphabet: self.alphabet.clone(),
        };
        for s in 0..n {
            if keep[s] {
                map[s] = out.states.len();
                out.states.push(State {
                    arcs: Vec::new(),
                    is_final: self.states[s].is_final,
                });
            }
        }
        out.start = map[self.start];
        for s in 0..n {
            if !keep[s] {
                continue;
            }
            let mut arcs: Vec<Arc> = self.states[s]
                .arcs
                .iter()
                .filter(|a| keep[a.next] && coreach[a.next])
                .map(|a| Arc::new(a.ilabel, a.olabel, map[a.next]))
                .collect();
            arcs.sort();
            arcs.dedup();
            out.states[map[s]].arcs = arcs;
        }
        out
    }

    /// True when some path reads `s` on the input side.
    pub fn accepts(&self, s: &str) -> bool {
        let mut current = self.eps_input_closure(std::iter::once(self.start).collect());
        for c in s.chars() {
            let label = self.input_label(c);
            let next: BTreeSet<StateId> = current
                .iter()
                .flat_map(|&q| self.states[q].arcs.iter())
                .filter(|a| a.ilabel == label)
                .map(|a| a.next)
                .collect();
            if next.is_empty() {
                return false;
            }
            current = self.eps_input_closure(next);
        }
        current.iter().any(|&q| self.states[q].is_final)
    }

    /// Maps a scalar to the label that reads it in this machine.
    pub fn input_label(&self, c: char) -> Label {
        if self.alphabet.contains(&c) {
            Label::Sym(c)
        } else {
            Label::Other
        }
    }

    fn eps_input_closure(&self, mut set: BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut stack: Vec<StateId> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for a in &self.states[s].arcs {
                if a.ilabel == Label::Eps && set.insert(a.next) {
                    stack.push(a.next);
                }
            }
        }
        set
    }

    /// Every output this machine produces for `s`, or an error if the set
    /// is infinite (an ε-input cycle emitting symbols).
    pub fn transduce(&self, s: &str) -> Result<BTreeSet<String>> {
        Applier::new(self)?.outputs(s)
    }

    /// Tests whether the relation maps each input to at most one output.
    pub fn is_functional(&self) -> bool {
        match Applier::new(self) {
            Ok(app) => app.is_functional(),
            Err(_) => false,
        }
    }

    /// Number of accepting paths, or `None` if a useful cycle exists.
    pub fn count_paths(&self) -> Option<u64> {
        let t = self.trim();
        let n = t.states.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(t: &Fst, s: StateId, mark: &mut [u8], memo: &mut [u64]) -> Option<u64> {
            match mark[s] {
                1 => return None,
                2 => return Some(memo[s]),
                _ => {}
            }
            mark[s] = 1;
            let mut total = u64::from(t.states[s].is_final);
            for a in &t.states[s].arcs {
                total += visit(t, a.next, mark, memo)?;
            }
            mark[s] = 2;
            memo[s] = total;
            Some(total)
        }
        let mut mark = vec![0u8; n];
        let mut memo = vec![0u64; n];
        visit(&t, t.start, &mut mark, &mut memo)
    }

    pub(crate) fn from_parts(states: Vec<State>, start: StateId, alphabet: BTreeSet<char>) -> Fst {
        Fst {
            states,
            start,
            alphabet,
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<State>, StateId, BTreeSet<char>) {
        (self.states, self.start, self.alphabet)
    }
}
