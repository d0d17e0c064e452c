use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Arc, Fst, Label, State, StateId};

/// Removes ε:ε arcs and trims. Acceptors are additionally determinized and
/// minimized, so equivalent acceptors optimize to machines of equal size.
pub fn optimize(t: &Fst) -> Fst {
    let t = rm_epsilon(&t.trim()).trim();
    if t.is_acceptor() {
        minimize(&determinize(&t)).trim()
    } else {
        t
    }
}

fn rm_epsilon(t: &Fst) -> Fst {
    let n = t.num_states();
    let mut states = Vec::with_capacity(n);
    for p in 0..n {
        let mut closure = BTreeSet::from([p]);
        let mut stack = vec![p];
        while let Some(q) = stack.pop() {
            for a in t.arcs(q) {
                if a.ilabel == Label::Eps && a.olabel == Label::Eps && closure.insert(a.next) {
                    stack.push(a.next);
                }
            }
        }
        let mut arcs: Vec<Arc> = closure
            .iter()
            .flat_map(|&q| t.arcs(q).iter())
            .filter(|a| !(a.ilabel == Label::Eps && a.olabel == Label::Eps))
            .copied()
            .collect();
        arcs.sort();
        arcs.dedup();
        states.push(State {
            arcs,
            is_final: closure.iter().any(|&q| t.is_final(q)),
        });
    }
    Fst::from_parts(states, t.start(), t.alphabet().clone())
}

/// Subset construction for an ε-free acceptor.
fn determinize(t: &Fst) -> Fst {
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut subsets: Vec<Vec<StateId>> = Vec::new();
    let mut states: Vec<State> = Vec::new();
    let start = vec![t.start()];
    index.insert(start.clone(), 0);
    subsets.push(start);
    states.push(State::default());
    let mut i = 0;
    while i < subsets.len() {
        let subset = subsets[i].clone();
        states[i].is_final = subset.iter().any(|&q| t.is_final(q));
        let mut by_label: BTreeMap<Label, BTreeSet<StateId>> = BTreeMap::new();
        for &q in &subset {
            for a in t.arcs(q) {
                by_label.entry(a.ilabel).or_default().insert(a.next);
            }
        }
        for (label, targets) in by_label {
            let key: Vec<StateId> = targets.into_iter().collect();
            let dst = match index.get(&key) {
                Some(&d) => d,
                None => {
                    let d = subsets.len();
                    index.insert(key.clone(), d);
                    subsets.push(key);
                    states.push(State::default());
                    d
                }
            };
            states[i].arcs.push(Arc::new(label, label, dst));
        }
        i += 1;
    }
    Fst::from_parts(states, 0, t.alphabet().clone())
}

/// Partition refinement on a deterministic acceptor.
fn minimize(t: &Fst) -> Fst {
    let n = t.num_states();
    let mut class: Vec<usize> = (0..n).map(|s| usize::from(t.is_final(s))).collect();
    loop {
        let mut sig_index: HashMap<(usize, Vec<(Label, usize)>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for s in 0..n {
            let mut sig: Vec<(Label, usize)> = t
                .arcs(s)
                .iter()
                .map(|a| (a.ilabel, class[a.next]))
                .collect();
            sig.sort();
            let len = sig_index.len();
            next[s] = *sig_index.entry((class[s], sig)).or_insert(len);
        }
        let old_count = class.iter().collect::<BTreeSet<_>>().len();
        let new_count = sig_index.len();
        class = next;
        if new_count == old_count {
            break;
        }
    }
    let count = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut states = vec![State::default(); count];
    let mut done = vec![false; count];
    for s in 0..n {
        let c = class[s];
        if done[c] {
            continue;
        }
        done[c] = true;
        states[c].is_final = t.is_final(s);
        states[c].arcs = t
            .arcs(s)
            .iter()
            .map(|a| Arc::new(a.ilabel, a.olabel, class[a.next]))
            .collect();
    }
    Fst::from_parts(states, class[t.start()], t.alphabet().clone())
}
