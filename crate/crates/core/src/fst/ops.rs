use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{Arc, Fst, FstError, Label, Result, State, StateId};

/// Acceptor for exactly `s`.
pub fn literal(s: &str) -> Fst {
    let mut fst = Fst::empty();
    let mut cur = fst.start();
    for c in s.chars() {
        let next = fst.add_state(false);
        fst.add_arc(cur, Arc::new(Label::Sym(c), Label::Sym(c), next));
        cur = next;
    }
    fst.set_final(cur, true);
    fst
}

/// Acceptor for the single-scalar strings whose scalar lies in one of the
/// inclusive `ranges`.
pub fn char_class(ranges: &[(char, char)]) -> Result<Fst> {
    if ranges.is_empty() {
        return Err(FstError::EmptyClass);
    }
    let mut fst = Fst::empty();
    let end = fst.add_state(true);
    let mut seen = BTreeSet::new();
    for &(lo, hi) in ranges {
        if lo > hi {
            return Err(FstError::InvalidRange(lo, hi));
        }
        for c in lo..=hi {
            if seen.insert(c) {
                fst.add_arc(0, Arc::new(Label::Sym(c), Label::Sym(c), end));
            }
        }
    }
    Ok(fst)
}

fn unify(a: &Fst, b: &Fst) -> (Fst, Fst) {
    let mut a = a.clone();
    let mut b = b.clone();
    let all: BTreeSet<char> = a.alphabet().union(b.alphabet()).copied().collect();
    a.widen_alphabet(&all);
    b.widen_alphabet(&all);
    (a, b)
}

/// Appends the states of `other` to `into`, returning the offset.
fn splice(into: &mut Vec<State>, other: Vec<State>) -> usize {
    let offset = into.len();
    for mut st in other {
        for a in &mut st.arcs {
            a.next += offset;
        }
        into.push(st);
    }
    offset
}

pub fn union(a: &Fst, b: &Fst) -> Fst {
    let (a, b) = unify(a, b);
    let (sa, start_a, alphabet) = a.into_parts();
    let (sb, start_b, _) = b.into_parts();
    let mut states = vec![State::default()];
    let oa = splice(&mut states, sa);
    let ob = splice(&mut states, sb);
    states[0]
        .arcs
        .push(Arc::new(Label::Eps, Label::Eps, start_a + oa));
    states[0]
        .arcs
        .push(Arc::new(Label::Eps, Label::Eps, start_b + ob));
    Fst::from_parts(states, 0, alphabet)
}

pub fn concat(a: &Fst, b: &Fst) -> Fst {
    let (a, b) = unify(a, b);
    let (mut states, start_a, alphabet) = a.into_parts();
    let (sb, start_b, _) = b.into_parts();
    let finals_a: Vec<StateId> = (0..states.len()).filter(|&s| states[s].is_final).collect();
    let ob = splice(&mut states, sb);
    for f in finals_a {
        states[f].is_final = false;
        states[f]
            .arcs
            .push(Arc::new(Label::Eps, Label::Eps, start_b + ob));
    }
    Fst::from_parts(states, start_a, alphabet)
}

/// Kleene closure.
pub fn star(a: &Fst) -> Fst {
    let (sa, start_a, alphabet) = a.clone().into_parts();
    let mut states = vec![State {
        arcs: Vec::new(),
        is_final: true,
    }];
    let oa = splice(&mut states, sa);
    states[0]
        .arcs
        .push(Arc::new(Label::Eps, Label::Eps, start_a + oa));
    for st in &mut states[oa..] {
        if st.is_final {
            st.arcs.push(Arc::new(Label::Eps, Label::Eps, 0));
        }
    }
    Fst::from_parts(states, 0, alphabet)
}

/// One or more repetitions.
pub fn closure_plus(a: &Fst) -> Fst {
    concat(a, &star(a))
}

pub fn optional(a: &Fst) -> Fst {
    union(a, &Fst::epsilon())
}

/// The string spelled by a machine with a single linear path, if any.
fn as_string(f: &Fst) -> Option<Vec<char>> {
    let t = f.trim();
    let mut out = Vec::new();
    let mut cur = t.start();
    let mut steps = 0;
    loop {
        let arcs = t.arcs(cur);
        match (arcs.len(), t.is_final(cur)) {
            (0, true) => return Some(out),
            (1, false) => match arcs[0].ilabel {
                Label::Sym(c) => {
                    out.push(c);
                    cur = arcs[0].next;
                }
                _ => return None,
            },
            _ => return None,
        }
        steps += 1;
        if steps > t.num_states() {
            return None;
        }
    }
}

/// Transducer mapping every string of `L(a)` to every string of `L(b)`.
pub fn cross(a: &Fst, b: &Fst) -> Result<Fst> {
    if !a.is_acceptor() || !b.is_acceptor() {
        return Err(FstError::NotAcceptor);
    }
    if b.has_other() {
        return Err(FstError::UnboundedOutput);
    }
    if let (Some(x), Some(y)) = (as_string(a), as_string(b)) {
        let xs: String = x.iter().collect();
        let ys: String = y.iter().collect();
        return Ok(string_map(&[(xs.as_str(), ys.as_str())]));
    }
    // `b` has no Other arcs, so widening only adds copies to `a`.
    let (a, b) = unify(a, b);
    let (mut states, start, alphabet) = a.into_parts();
    for arc in states.iter_mut().flat_map(|st| st.arcs.iter_mut()) {
        arc.olabel = Label::Eps;
    }
    let (mut sb, start_b, _) = b.into_parts();
    for arc in sb.iter_mut().flat_map(|st| st.arcs.iter_mut()) {
        arc.ilabel = Label::Eps;
    }
    let finals: Vec<StateId> = (0..states.len()).filter(|&s| states[s].is_final).collect();
    let ob = splice(&mut states, sb);
    for f in finals {
        states[f].is_final = false;
        states[f]
            .arcs
            .push(Arc::new(Label::Eps, Label::Eps, start_b + ob));
    }
    Ok(Fst::from_parts(states, start, alphabet))
}

/// Prefix-tree transducer for a finite list of `(input, output)` pairs.
/// Input and output are aligned scalar by scalar; the longer side finishes
/// with ε on the other tape.
pub fn string_map(pairs: &[(&str, &str)]) -> Fst {
    let mut fst = Fst::empty();
    let mut edges: HashMap<(StateId, Label, Label), StateId> = HashMap::new();
    for (input, output) in pairs {
        let ic: Vec<char> = input.chars().collect();
        let oc: Vec<char> = output.chars().collect();
        let len = ic.len().max(oc.len());
        let mut cur = fst.start();
        for i in 0..len {
            let il = ic.get(i).map_or(Label::Eps, |&c| Label::Sym(c));
            let ol = oc.get(i).map_or(Label::Eps, |&c| Label::Sym(c));
            cur = match edges.get(&(cur, il, ol)) {
                Some(&n) => n,
                None => {
                    let n = fst.add_state(false);
                    fst.add_arc(cur, Arc::new(il, ol, n));
                    edges.insert((cur, il, ol), n);
                    n
                }
            };
        }
        fst.set_final(cur, true);
    }
    fst
}

/// Relational composition: `(x, z)` such that `a` maps `x` to some `y` and
/// `b` maps `y` to `z`.
pub fn compose(a: &Fst, b: &Fst) -> Fst {
    let (a, b) = unify(a, b);
    let alphabet = a.alphabet().clone();
    let mut states: Vec<State> = Vec::new();
    let mut index: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut queue: VecDeque<(StateId, StateId)> = VecDeque::new();

    fn intern(
        key: (StateId, StateId),
        is_final: bool,
        states: &mut Vec<State>,
        index: &mut HashMap<(StateId, StateId), StateId>,
        queue: &mut VecDeque<(StateId, StateId)>,
    ) -> StateId {
        *index.entry(key).or_insert_with(|| {
            states.push(State {
                arcs: Vec::new(),
                is_final,
            });
            queue.push_back(key);
            states.len() - 1
        })
    }

    let start = intern(
        (a.start(), b.start()),
        a.is_final(a.start()) && b.is_final(b.start()),
        &mut states,
        &mut index,
        &mut queue,
    );
    while let Some((p, q)) = queue.pop_front() {
        let src = index[&(p, q)];
        let mut moves = Vec::new();
        for x in a.arcs(p) {
            if x.olabel == Label::Eps {
                moves.push((x.ilabel, Label::Eps, x.next, q));
                continue;
            }
            for y in b.arcs(q).iter().filter(|y| y.ilabel == x.olabel) {
                moves.push((x.ilabel, y.olabel, x.next, y.next));
            }
        }
        for y in b.arcs(q).iter().filter(|y| y.ilabel == Label::Eps) {
            moves.push((Label::Eps, y.olabel, p, y.next));
        }
        for (il, ol, np, nq) in moves {
            let fin = a.is_final(np) && b.is_final(nq);
            let dst = intern((np, nq), fin, &mut states, &mut index, &mut queue);
            states[src].arcs.push(Arc::new(il, ol, dst));
        }
    }
    Fst::from_parts(states, start, alphabet).trim()
}
