use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use super::{Fst, FstError, Label, Result, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Out {
    Char(char),
    /// Echo of the scalar read by the same `Other` arc.
    Copy,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RtArc {
    label: Label,
    out: Vec<Out>,
    next: StateId,
}

/// An ε-free form of an [`Fst`] ready for repeated application. Each arc
/// reads exactly one scalar and writes a (possibly empty) string; pending
/// ε-input output at the end of a path is kept as a per-state final string.
#[derive(Debug, Clone)]
pub struct Applier {
    alphabet: BTreeSet<char>,
    arcs: Vec<Vec<RtArc>>,
    finals: Vec<Vec<Vec<char>>>,
    start: StateId,
}

impl Applier {
    /// Fails with `NonFunctional` if some useful ε-input cycle writes output
    /// (the machine would have infinitely many outputs).
    pub fn new(fst: &Fst) -> Result<Self> {
        let t = fst.trim();
        let n = t.num_states();
        let eps_succ: Vec<Vec<StateId>> = (0..n)
            .map(|s| {
                t.arcs(s)
                    .iter()
                    .filter(|a| a.ilabel == Label::Eps)
                    .map(|a| a.next)
                    .collect()
            })
            .collect();
        for p in 0..n {
            for a in t
                .arcs(p)
                .iter()
                .filter(|a| a.ilabel == Label::Eps && a.olabel != Label::Eps)
            {
                if eps_reaches(&eps_succ, a.next, p) {
                    return Err(FstError::NonFunctional);
                }
            }
        }

        let mut arcs = vec![Vec::new(); n];
        let mut finals = vec![Vec::new(); n];
        for p in 0..n {
            let mut seen: HashSet<(StateId, Vec<char>)> = HashSet::new();
            let mut stack = vec![(p, Vec::new())];
            seen.insert((p, Vec::new()));
            while let Some((q, w)) = stack.pop() {
                if t.is_final(q) {
                    finals[p].push(w.clone());
                }
                for a in t.arcs(q) {
                    match a.ilabel {
                        Label::Eps => {
                            let mut w2 = w.clone();
                            if let Label::Sym(c) = a.olabel {
                                w2.push(c);
                            }
                            if seen.insert((a.next, w2.clone())) {
                                stack.push((a.next, w2));
                            }
                        }
                        label => {
                            let mut out: Vec<Out> = w.iter().map(|&c| Out::Char(c)).collect();
                            match a.olabel {
                                Label::Sym(c) => out.push(Out::Char(c)),
                                Label::Other => out.push(Out::Copy),
                                Label::Eps => {}
                            }
                            arcs[p].push(RtArc {
                                label,
                                out,
                                next: a.next,
                            });
                        }
                    }
                }
            }
            arcs[p].sort();
            arcs[p].dedup();
            finals[p].sort();
            finals[p].dedup();
        }
        Ok(Applier {
            alphabet: t.alphabet().clone(),
            arcs,
            finals,
            start: t.start(),
        })
    }

    fn label_of(&self, c: char) -> Label {
        if self.alphabet.contains(&c) {
            Label::Sym(c)
        } else {
            Label::Other
        }
    }

    fn arcs_for(&self, s: StateId, label: Label) -> &[RtArc] {
        let arcs = &self.arcs[s];
        let lo = arcs.partition_point(|a| a.label < label);
        let hi = arcs.partition_point(|a| a.label <= label);
        &arcs[lo..hi]
    }

    /// All outputs for `input`.
    pub fn outputs(&self, input: &str) -> Result<BTreeSet<String>> {
        let mut configs: HashSet<(StateId, String)> = HashSet::new();
        configs.insert((self.start, String::new()));
        for c in input.chars() {
            let label = self.label_of(c);
            let mut next = HashSet::with_capacity(configs.len());
            for (s, out) in &configs {
                for arc in self.arcs_for(*s, label) {
                    let mut o = out.clone();
                    for sym in &arc.out {
                        o.push(match *sym {
                            Out::Char(x) => x,
                            Out::Copy => c,
                        });
                    }
                    next.insert((arc.next, o));
                }
            }
            if next.is_empty() {
                return Ok(BTreeSet::new());
            }
            configs = next;
        }
        let mut results = BTreeSet::new();
        for (s, out) in configs {
            for fin in &self.finals[s] {
                let mut o = out.clone();
                o.extend(fin.iter());
                results.insert(o);
            }
        }
        Ok(results)
    }

    /// The unique output for `input`.
    pub fn apply(&self, input: &str) -> Result<String> {
        let mut outs = self.outputs(input)?.into_iter();
        match (outs.next(), outs.next()) {
            (None, _) => Err(FstError::NoPath),
            (Some(o), None) => Ok(o),
            (Some(_), Some(_)) => Err(FstError::NonFunctional),
        }
    }

    /// Functionality test on the squared machine: in the trimmed product of
    /// the transducer with itself, every state must carry a single output
    /// delay and final states must balance it.
    pub fn is_functional(&self) -> bool {
        let mut labels: Vec<Label> = self.alphabet.iter().map(|&c| Label::Sym(c)).collect();
        labels.push(Label::Other);

        type Pair = (StateId, StateId);
        let mut edges: HashMap<Pair, Vec<(Pair, usize, usize, Label)>> = HashMap::new();
        let mut seen: HashSet<Pair> = HashSet::new();
        let start = (self.start, self.start);
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some((p, q)) = queue.pop_front() {
            let mut out = Vec::new();
            for &l in &labels {
                let ap = self.arcs_for(p, l);
                let aq = self.arcs_for(q, l);
                let base_p = self.arcs[p].partition_point(|a| a.label < l);
                let base_q = self.arcs[q].partition_point(|a| a.label < l);
                for (i, x) in ap.iter().enumerate() {
                    for (j, y) in aq.iter().enumerate() {
                        let to = (x.next, y.next);
                        out.push((to, base_p + i, base_q + j, l));
                        if seen.insert(to) {
                            queue.push_back(to);
                        }
                    }
                }
            }
            edges.insert((p, q), out);
        }

        // Co-accessibility in the product.
        let mut rev: HashMap<Pair, Vec<Pair>> = HashMap::new();
        for (from, es) in &edges {
            for (to, ..) in es {
                rev.entry(*to).or_default().push(*from);
            }
        }
        let mut coacc: HashSet<Pair> = seen
            .iter()
            .filter(|(p, q)| !self.finals[*p].is_empty() && !self.finals[*q].is_empty())
            .copied()
            .collect();
        let mut stack: Vec<Pair> = coacc.iter().copied().collect();
        while let Some(s) = stack.pop() {
            if let Some(ps) = rev.get(&s) {
                for &p in ps {
                    if coacc.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
        if !coacc.contains(&start) {
            return true;
        }

        let mut delay: HashMap<Pair, (Vec<char>, Vec<char>)> = HashMap::new();
        delay.insert(start, (Vec::new(), Vec::new()));
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            let d = delay[&node].clone();
            if !self.finals[node.0].is_empty() && !self.finals[node.1].is_empty() {
                for f1 in &self.finals[node.0] {
                    for f2 in &self.finals[node.1] {
                        let a: Vec<char> = d.0.iter().chain(f1).copied().collect();
                        let b: Vec<char> = d.1.iter().chain(f2).copied().collect();
                        if a != b {
                            return false;
                        }
                    }
                }
            }
            for &(to, i, j, _) in &edges[&node] {
                if !coacc.contains(&to) {
                    continue;
                }
                let u = &self.arcs[node.0][i].out;
                let v = &self.arcs[node.1][j].out;
                let Some(nd) = advance(&d, u, v) else {
                    return false;
                };
                match delay.get(&to) {
                    Some(existing) if *existing != nd => return false,
                    Some(_) => {}
                    None => {
                        delay.insert(to, nd);
                        queue.push_back(to);
                    }
                }
            }
        }
        true
    }
}

/// New delay after both sides read one scalar and write `u` and `v`.
/// `None` means the two outputs have already diverged.
fn advance(d: &(Vec<char>, Vec<char>), u: &[Out], v: &[Out]) -> Option<(Vec<char>, Vec<char>)> {
    let s1: Vec<Out> =
        d.0.iter()
            .map(|&c| Out::Char(c))
            .chain(u.iter().copied())
            .collect();
    let s2: Vec<Out> =
        d.1.iter()
            .map(|&c| Out::Char(c))
            .chain(v.iter().copied())
            .collect();
    let m = s1.len().min(s2.len());
    if s1[..m] != s2[..m] {
        return None;
    }
    let rest = |s: &[Out]| -> Option<Vec<char>> {
        s.iter()
            .map(|o| match o {
                Out::Char(c) => Some(*c),
                // An echoed scalar left unmatched past its own step can be
                // chosen to differ from whatever the other side writes later.
                Out::Copy => None,
            })
            .collect()
    };
    Some((rest(&s1[m..])?, rest(&s2[m..])?))
}

fn eps_reaches(succ: &[Vec<StateId>], from: StateId, target: StateId) -> bool {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![from];
    while let Some(s) = stack.pop() {
        if s == target {
            return true;
        }
        if std::mem::replace(&mut seen[s], true) {
            continue;
        }
        stack.extend(succ[s].iter().copied());
    }
    false
}

/// The unique output of `fst` on `input`.
pub fn apply(fst: &Fst, input: &str) -> Result<String> {
    Applier::new(fst)?.apply(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{cross, literal, star, string_map, union, Arc};

    #[test]
    fn identity_application() {
        assert_eq!(apply(&Fst::sigma_star(), "abc").unwrap(), "abc");
        assert_eq!(apply(&Fst::sigma_star(), "").unwrap(), "");
    }

    #[test]
    fn no_path_and_non_functional() {
        assert_eq!(apply(&literal("a"), "b"), Err(FstError::NoPath));
        let two = union(
            &cross(&literal("a"), &literal("x")).unwrap(),
            &cross(&literal("a"), &literal("y")).unwrap(),
        );
        assert_eq!(apply(&two, "a"), Err(FstError::NonFunctional));
        assert!(!two.is_functional());
    }

    #[test]
    fn functional_with_delayed_output() {
        // "ab" -> "xy" written at different times on two paths.
        let early = string_map(&[("ab", "xy")]);
        let mut late = Fst::empty();
        let s1 = late.add_state(false);
        let s2 = late.add_state(false);
        let s3 = late.add_state(true);
        late.add_arc(0, Arc::new(Label::Sym('a'), Label::Eps, s1));
        late.add_arc(s1, Arc::new(Label::Sym('b'), Label::Sym('x'), s2));
        late.add_arc(s2, Arc::new(Label::Eps, Label::Sym('y'), s3));
        let u = union(&early, &late);
        assert!(u.is_functional());
        assert_eq!(apply(&u, "ab").unwrap(), "xy");
    }

    #[test]
    fn copy_delay_is_not_functional() {
        // Path 1 copies the scalar; path 2 deletes it and writes the next
        // copy: outputs differ whenever the two scalars differ.
        let mut f = Fst::empty();
        let a = f.add_state(false);
        let b = f.add_state(true);
        f.add_arc(0, Arc::new(Label::Other, Label::Other, a));
        f.add_arc(a, Arc::new(Label::Other, Label::Eps, b));
        let g = {
            let mut g = Fst::empty();
            let a = g.add_state(false);
            let b = g.add_state(true);
            g.add_arc(0, Arc::new(Label::Other, Label::Eps, a));
            g.add_arc(a, Arc::new(Label::Other, Label::Other, b));
            g
        };
        let u = union(&f, &g);
        assert!(!u.is_functional());
        assert_eq!(apply(&u, "pq"), Err(FstError::NonFunctional));
        assert_eq!(apply(&u, "pp").unwrap(), "p");
    }

    #[test]
    fn epsilon_output_cycle_rejected() {
        let mut f = Fst::epsilon();
        f.add_arc(0, Arc::new(Label::Eps, Label::Sym('x'), 0));
        assert!(matches!(Applier::new(&f), Err(FstError::NonFunctional)));
        let s = star(&literal(""));
        assert_eq!(apply(&s, "").unwrap(), "");
    }
}
