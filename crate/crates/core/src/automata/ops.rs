//! Product, containment and bounded reachability over safety automata.
//!
//! All searches iterate valuations in the scope's binary counting order and
//! states in insertion order, so witnesses and state numbering are
//! reproducible.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::automaton::{Edge, SafetyAutomaton, StateId};
use super::guard::Guard;
use super::valuation::{Trace, VarScope, MAX_VARS};
use super::AutomataError;

/// Synchronous product over the union of the input scopes.
///
/// States are the reachable tuples of input states, numbered in breadth-first
/// discovery order; a tuple is bad iff one of its coordinates is bad. Each
/// edge is the conjunction of one edge per input, and only satisfiable
/// conjunctions are kept, ordered lexicographically by the coordinate edge
/// indices (inputs in argument order).
pub fn product(automata: &[&SafetyAutomaton]) -> Result<SafetyAutomaton, AutomataError> {
    if automata.is_empty() {
        return Err(AutomataError::EmptyProduct);
    }
    let scope = VarScope::union(automata.iter().map(|a| a.vars()));
    if scope.len() > MAX_VARS {
        return Err(AutomataError::TooManyVariables { count: scope.len(), max: MAX_VARS });
    }
    let letters = scope.letter_count();
    let projections: Vec<Vec<usize>> =
        automata.iter().map(|a| scope.projection_table(a.vars())).collect();

    let initial: Vec<StateId> = automata.iter().map(|a| a.initial()).collect();
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let mut tuples: Vec<Vec<StateId>> = Vec::new();
    index.insert(initial.clone(), 0);
    tuples.push(initial);

    let mut edges: Vec<Vec<Edge>> = Vec::new();
    let mut table: Vec<u32> = Vec::new();
    let mut current = 0;
    while current < tuples.len() {
        let tuple = tuples[current].clone();
        // edge-index tuple enabled on each valuation
        let mut per_letter: Vec<Vec<usize>> = Vec::with_capacity(letters);
        for letter in 0..letters {
            per_letter.push(
                automata
                    .iter()
                    .zip(&tuple)
                    .zip(&projections)
                    .map(|((a, &s), proj)| a.edge_index(s, proj[letter]))
                    .collect(),
            );
        }
        let mut combos = per_letter.clone();
        combos.sort();
        combos.dedup();

        let mut state_edges = Vec::with_capacity(combos.len());
        for combo in &combos {
            let target: Vec<StateId> = automata
                .iter()
                .zip(&tuple)
                .zip(combo)
                .map(|((a, &s), &e)| a.edges(s)[e].target)
                .collect();
            let next_id = tuples.len();
            let target_id = *index.entry(target.clone()).or_insert_with(|| {
                tuples.push(target);
                next_id
            });
            let guard = Guard::and_all(
                automata
                    .iter()
                    .zip(&tuple)
                    .zip(combo)
                    .map(|((a, &s), &e)| a.edges(s)[e].guard.clone())
                    .collect(),
            );
            state_edges.push(Edge { guard, target: target_id });
        }
        for combo in &per_letter {
            table.push(combos.binary_search(combo).expect("combo present") as u32);
        }
        edges.push(state_edges);
        current += 1;
    }

    let states = tuples
        .iter()
        .map(|t| {
            let names: Vec<&str> = automata
                .iter()
                .zip(t)
                .map(|(a, &s)| a.state_names()[s].as_str())
                .collect();
            format!("({})", names.join(","))
        })
        .collect();
    let bad = tuples
        .iter()
        .map(|t| automata.iter().zip(t).any(|(a, &s)| a.is_bad(s)))
        .collect();
    Ok(SafetyAutomaton::from_parts(scope, states, 0, bad, edges, table))
}

type Pair = (StateId, StateId);
/// Parent node index and the letter taken from it.
type Back = Option<(usize, usize)>;

/// Outcome of a language containment check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContainmentResult {
    pub holds: bool,
    /// Shortest trace accepted by the left operand and rejected by the right.
    pub witness: Option<Trace>,
    /// Distinct state pairs discovered by the search.
    pub explored_pairs: usize,
    /// Deepest breadth-first layer reached.
    pub depth: usize,
}

/// Joint view of two automata over the union of their scopes.
struct Pairing<'a> {
    left: &'a SafetyAutomaton,
    right: &'a SafetyAutomaton,
    scope: VarScope,
    left_proj: Vec<usize>,
    right_proj: Vec<usize>,
}

impl<'a> Pairing<'a> {
    fn new(left: &'a SafetyAutomaton, right: &'a SafetyAutomaton) -> Result<Self, AutomataError> {
        let scope = VarScope::union([left.vars(), right.vars()]);
        if scope.len() > MAX_VARS {
            return Err(AutomataError::TooManyVariables { count: scope.len(), max: MAX_VARS });
        }
        let left_proj = scope.projection_table(left.vars());
        let right_proj = scope.projection_table(right.vars());
        Ok(Pairing { left, right, scope, left_proj, right_proj })
    }

    fn next(&self, (l, r): (StateId, StateId), letter: usize) -> (StateId, StateId) {
        (
            self.left.next(l, self.left_proj[letter]),
            self.right.next(r, self.right_proj[letter]),
        )
    }

    fn initial(&self) -> (StateId, StateId) {
        (self.left.initial(), self.right.initial())
    }
}

/// Decides `L(a) ⊆ L(b)` over the union of both scopes by breadth-first
/// search of the synchronized product for a pair that is good in `a` and
/// bad in `b`.
pub fn contains(a: &SafetyAutomaton, b: &SafetyAutomaton) -> Result<ContainmentResult, AutomataError> {
    let pairing = Pairing::new(a, b)?;
    let letters = pairing.scope.letter_count();
    let start = pairing.initial();
    // pair -> (parent pair index, letter, depth)
    let mut seen: HashMap<Pair, usize> = HashMap::new();
    let mut nodes: Vec<(Pair, Back, usize)> = Vec::new();
    seen.insert(start, 0);
    nodes.push((start, None, 0));
    let mut queue = VecDeque::from([0usize]);
    let mut depth = 0;

    while let Some(idx) = queue.pop_front() {
        let (pair, _, d) = nodes[idx];
        depth = depth.max(d);
        for letter in 0..letters {
            let succ = pairing.next(pair, letter);
            if a.is_bad(succ.0) {
                continue;
            }
            if b.is_bad(succ.1) {
                let mut letters_rev = vec![letter];
                let mut cur = idx;
                while let Some((parent, l)) = nodes[cur].1 {
                    letters_rev.push(l);
                    cur = parent;
                }
                letters_rev.reverse();
                return Ok(ContainmentResult {
                    holds: false,
                    witness: Some(Trace::from_letters(&pairing.scope, &letters_rev)),
                    explored_pairs: nodes.len(),
                    depth: d + 1,
                });
            }
            if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(succ) {
                slot.insert(nodes.len());
                nodes.push((succ, Some((idx, letter)), d + 1));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    Ok(ContainmentResult { holds: true, witness: None, explored_pairs: nodes.len(), depth })
}

/// `true` iff `a` accepts some trace of length exactly `h`.
pub fn has_trace_of_length(a: &SafetyAutomaton, h: usize) -> bool {
    let letters = a.vars().letter_count();
    let mut frontier = vec![false; a.num_states()];
    frontier[a.initial()] = true;
    for _ in 0..h {
        let mut next = vec![false; a.num_states()];
        let mut any = false;
        for s in (0..a.num_states()).filter(|&s| frontier[s]) {
            for letter in 0..letters {
                let t = a.next(s, letter);
                if !a.is_bad(t) {
                    next[t] = true;
                    any = true;
                }
            }
        }
        if !any {
            return false;
        }
        if next == frontier {
            // the reachable set has stabilised
            return true;
        }
        frontier = next;
    }
    true
}

/// The traces of length exactly `horizon` accepted by an operand, checked
/// against a second automaton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HorizonCheck {
    /// Some trace of length `horizon` is accepted by the operand.
    pub nonempty: bool,
    /// Every operand-accepted trace of length `horizon` is rejected by the
    /// reference automaton (vacuously true when `nonempty` is false).
    pub all_rejected: bool,
    /// First operand-accepted trace of that length rejected by the reference.
    pub rejected_witness: Option<Trace>,
    /// First operand-accepted trace of that length the reference accepts.
    pub accepted_witness: Option<Trace>,
    /// Distinct (layer, pair) nodes visited.
    pub explored_pairs: usize,
}

/// Explores the pairs `(operand state, reference state)` reachable in
/// exactly `horizon` steps along runs that keep the operand in good states.
pub fn horizon_check(
    operand: &SafetyAutomaton,
    reference: &SafetyAutomaton,
    horizon: usize,
) -> Result<HorizonCheck, AutomataError> {
    let pairing = Pairing::new(operand, reference)?;
    let letters = pairing.scope.letter_count();
    // layers[k]: pairs reached after k steps, each with (parent index in layer k-1, letter)
    let mut layers: Vec<Vec<(Pair, Back)>> =
        vec![vec![(pairing.initial(), None)]];
    let mut explored = 1;
    for _ in 0..horizon {
        let prev = layers.last().unwrap();
        let mut index: HashMap<(StateId, StateId), usize> = HashMap::new();
        let mut layer = Vec::new();
        for (pi, &(pair, _)) in prev.iter().enumerate() {
            for letter in 0..letters {
                let succ = pairing.next(pair, letter);
                if operand.is_bad(succ.0) || index.contains_key(&succ) {
                    continue;
                }
                index.insert(succ, layer.len());
                layer.push((succ, Some((pi, letter))));
            }
        }
        explored += layer.len();
        let empty = layer.is_empty();
        layers.push(layer);
        if empty {
            break;
        }
    }

    let last = if layers.len() == horizon + 1 { layers.last().unwrap().as_slice() } else { &[] };
    let witness_for = |target: usize| {
        let mut letters_rev = Vec::new();
        let mut cur = target;
        for k in (1..layers.len()).rev() {
            let (_, link) = layers[k][cur];
            let (parent, letter) = link.expect("non-root node has a parent");
            letters_rev.push(letter);
            cur = parent;
        }
        letters_rev.reverse();
        Trace::from_letters(&pairing.scope, &letters_rev)
    };
    let rejected = last.iter().position(|(p, _)| reference.is_bad(p.1));
    let accepted = last.iter().position(|(p, _)| !reference.is_bad(p.1));
    Ok(HorizonCheck {
        nonempty: !last.is_empty(),
        all_rejected: accepted.is_none(),
        rejected_witness: rejected.map(witness_for),
        accepted_witness: accepted.map(witness_for),
        explored_pairs: explored,
    })
}
