//! Random generators and explicit-trace oracles shared by the integration
//! tests. The oracles only use guard evaluation on automaton edges; they never
//! call the product, containment or counterfactual builders.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use counterfact::automata::{AutomatonDef, Edge, Guard, SafetyAutomaton, StateId, Trace, Valuation, VarScope};
use counterfact::counterfactual::{FaultModelKind, KindPair, ModelAssignment};
use counterfact::engine::{CandidateSet, Mode, Quantifier};
use counterfact::model::{validate_system, Component, Owner, SystemModel, VariableDecl};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random deterministic complete safety automaton over `scope` with at most
/// `max_states` states. State 0 is initial and good; the last state is an
/// absorbing bad sink with probability `bad_prob` (when there are ≥ 2 states).
pub fn random_automaton(rng: &mut ChaCha8Rng, scope: &VarScope, max_states: usize, bad_prob: f64) -> SafetyAutomaton {
    let n = rng.gen_range(1..=max_states);
    let has_bad = n >= 2 && rng.gen_bool(bad_prob);
    let good = if has_bad { n - 1 } else { n };
    let letters = scope.letter_count();
    let mut edges = Vec::with_capacity(n);
    for _ in 0..good {
        let mut by_target: Vec<Vec<usize>> = vec![Vec::new(); n];
        for letter in 0..letters {
            let target = if has_bad && rng.gen_bool(0.3) { n - 1 } else { rng.gen_range(0..good) };
            by_target[target].push(letter);
        }
        let state_edges = by_target
            .into_iter()
            .enumerate()
            .filter(|(_, ls)| !ls.is_empty())
            .map(|(target, ls)| {
                let cubes = ls
                    .iter()
                    .map(|&l| {
                        let v = scope.valuation(l);
                        Guard::cube(v.iter().collect::<Vec<_>>())
                    })
                    .collect();
                Edge { guard: Guard::or_all(cubes).canonical(), target }
            })
            .collect();
        edges.push(state_edges);
    }
    if has_bad {
        edges.push(vec![Edge { guard: Guard::True, target: n - 1 }]);
    }
    let def = AutomatonDef {
        vars: scope.clone(),
        states: (0..n).map(|i| format!("q{i}")).collect(),
        initial: 0,
        bad: if has_bad { BTreeSet::from([n - 1]) } else { BTreeSet::new() },
        edges,
    };
    SafetyAutomaton::new(def).expect("generated automaton is well-formed")
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub min_components: usize,
    pub max_components: usize,
    pub max_states: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { min_components: 1, max_components: 3, max_states: 4 }
    }
}

/// Random system: component `Ci` owns `oi` (and sometimes `pi`), and may read
/// one output of another component or the environment variable `e0`. Every
/// component has at most two variables. The global specification constrains
/// a random subset of the declared variables.
pub fn random_system(rng: &mut ChaCha8Rng, shape: Shape) -> SystemModel {
    let n = rng.gen_range(shape.min_components..=shape.max_components);
    let mut outputs: Vec<Vec<String>> = Vec::new();
    for i in 0..n {
        let mut o = vec![format!("o{i}")];
        if rng.gen_bool(0.25) {
            o.push(format!("p{i}"));
        }
        outputs.push(o);
    }
    let mut variables: Vec<VariableDecl> = Vec::new();
    for (i, outs) in outputs.iter().enumerate() {
        for o in outs {
            variables.push(VariableDecl { name: o.clone(), owner: Owner::Component(format!("C{i}")) });
        }
    }
    let mut uses_env = false;
    let mut components = Vec::new();
    for i in 0..n {
        let mut inputs = Vec::new();
        if outputs[i].len() == 1 && rng.gen_bool(0.6) {
            let mut pool: Vec<String> = (0..n).filter(|&j| j != i).map(|j| format!("o{j}")).collect();
            pool.push("e0".into());
            let pick = pool.choose(rng).unwrap().clone();
            uses_env |= pick == "e0";
            inputs.push(pick);
        }
        let inputs = VarScope::new(inputs);
        let outs = VarScope::new(outputs[i].clone());
        let scope = VarScope::union([&inputs, &outs]);
        let spec = random_automaton(rng, &scope, shape.max_states, 0.8);
        components.push(Component { name: format!("C{i}"), inputs, outputs: outs, spec });
    }
    if uses_env {
        variables.push(VariableDecl { name: "e0".into(), owner: Owner::Env });
    }
    let all = VarScope::new(variables.iter().map(|v| v.name.clone()));
    let k = rng.gen_range(1..=all.len().min(3));
    let picked: Vec<String> = all.names().choose_multiple(rng, k).cloned().collect();
    let theta = random_automaton(rng, &VarScope::new(picked), shape.max_states, 0.9)
        .with_scope(&all)
        .unwrap();
    SystemModel::new(variables, components, theta).expect("generated system is structurally valid")
}

/// Random system that passes `validate_system`: either a random one that
/// happens to refine its global specification, or one whose global
/// specification is the composition of a subset of the component specs.
pub fn refining_system(rng: &mut ChaCha8Rng, shape: Shape) -> SystemModel {
    loop {
        let m = random_system(rng, shape);
        if validate_system(&m).is_empty() && rng.gen_bool(0.5) {
            return m;
        }
        let comps = m.components();
        let k = rng.gen_range(1..=comps.len());
        let chosen: Vec<&SafetyAutomaton> = comps.choose_multiple(rng, k).map(|c| &c.spec).collect();
        let theta = counterfact::automata::product(&chosen).unwrap().with_scope(&m.scope()).unwrap();
        let m = SystemModel::new(m.variables().to_vec(), comps.to_vec(), theta).unwrap();
        if validate_system(&m).is_empty() {
            return m;
        }
    }
}

pub fn random_valuation(rng: &mut ChaCha8Rng, scope: &VarScope) -> Valuation {
    scope.valuation(rng.gen_range(0..scope.letter_count()))
}

pub fn random_trace(rng: &mut ChaCha8Rng, scope: &VarScope, len: usize) -> Trace {
    Trace::new(scope.clone(), (0..len).map(|_| random_valuation(rng, scope)).collect()).unwrap()
}

/// A random trace of length `1..=max_len` rejected by the global
/// specification, if one is found within a bounded number of samples.
pub fn error_trace(rng: &mut ChaCha8Rng, m: &SystemModel, max_len: usize) -> Option<Trace> {
    let scope = m.scope();
    for _ in 0..200 {
        let len = rng.gen_range(1..=max_len);
        let t = random_trace(rng, &scope, len);
        if first_violation(m.global_spec(), &t).is_some() {
            return Some(t);
        }
    }
    None
}

pub fn random_kind(rng: &mut ChaCha8Rng) -> FaultModelKind {
    *FaultModelKind::ALL.choose(rng).unwrap()
}

pub fn random_assignment(rng: &mut ChaCha8Rng, m: &SystemModel) -> ModelAssignment {
    let mut asg = ModelAssignment::defaults(m);
    for name in m.component_names() {
        asg.set_cf(name, random_kind(rng)).unwrap();
        asg.set_fault(name, random_kind(rng)).unwrap();
    }
    asg
}

pub fn uniform(m: &SystemModel, cf: FaultModelKind, fault: FaultModelKind) -> ModelAssignment {
    ModelAssignment::uniform(m, KindPair { cf, fault })
}

/// Every subset of `names`, by size then lexicographically.
pub fn all_subsets(names: &[String]) -> Vec<CandidateSet> {
    let mut out: Vec<CandidateSet> = (0u32..1 << names.len())
        .map(|mask| {
            CandidateSet::new(names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| n.clone()))
        })
        .collect();
    out.sort();
    out
}

pub fn component_names(m: &SystemModel) -> Vec<String> {
    m.component_names().map(str::to_string).collect()
}

// ---------------------------------------------------------------------------
// Explicit semantics

/// Successor by evaluating the edge guards; panics if not exactly one
/// edge is enabled.
pub fn step(a: &SafetyAutomaton, state: StateId, v: &Valuation) -> StateId {
    let enabled: Vec<StateId> = a
        .edges(state)
        .iter()
        .filter(|e| e.guard.eval_with(&|name: &str| v.get(name)).expect("guard over known variables"))
        .map(|e| e.target)
        .collect();
    assert_eq!(enabled.len(), 1, "automaton is not deterministic and complete");
    enabled[0]
}

/// Index of the step at which `a` first enters a bad state.
pub fn first_violation(a: &SafetyAutomaton, t: &Trace) -> Option<usize> {
    let mut s = a.initial();
    for (i, v) in t.steps().iter().enumerate() {
        s = step(a, s, v);
        if a.is_bad(s) {
            return Some(i);
        }
    }
    None
}

pub fn accepts(a: &SafetyAutomaton, t: &Trace) -> bool {
    first_violation(a, t).is_none()
}

/// Set-theoretic reading of the analyses for one system, error trace and
/// assignment, evaluated by exploring explicit traces.
pub struct Oracle<'a> {
    pub model: &'a SystemModel,
    pub trace: &'a Trace,
    pub assignment: &'a ModelAssignment,
    scope: VarScope,
    prefix: Vec<usize>,
}

/// An explored trace prefix, summarised by what the languages can still
/// distinguish: position (clipped at the horizon), specification states and
/// the global-specification state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    pos: usize,
    specs: Vec<StateId>,
    theta: StateId,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a SystemModel, trace: &'a Trace, assignment: &'a ModelAssignment) -> Self {
        let prefix = model
            .components()
            .iter()
            .map(|c| {
                let mut s = c.spec.initial();
                let mut k = 0;
                for v in trace.steps() {
                    s = step(&c.spec, s, v);
                    if c.spec.is_bad(s) {
                        break;
                    }
                    k += 1;
                }
                k
            })
            .collect();
        Oracle { model, trace, assignment, scope: model.scope(), prefix }
    }

    fn horizon(&self) -> usize {
        self.trace.len()
    }

    fn kind(&self, c: &Component, d: &CandidateSet, mode: Mode) -> FaultModelKind {
        let pair = self.assignment.get(&c.name).unwrap();
        let corrected = match mode {
            Mode::Mitigation => d.contains(&c.name),
            Mode::Manifestation => !d.contains(&c.name),
        };
        if corrected { pair.cf } else { pair.fault }
    }

    fn agrees(&self, v: &Valuation, pos: usize, vars: &VarScope) -> bool {
        let obs = &self.trace.steps()[pos];
        vars.names().iter().all(|x| v.get(x) == obs.get(x))
    }

    /// Whether appending `v` at position `pos` keeps component `i` inside
    /// its language, given its spec state after the step.
    fn member(&self, i: usize, kind: FaultModelKind, pos: usize, spec_after: StateId, v: &Valuation) -> bool {
        let c = &self.model.components()[i];
        let spec_ok = !c.spec.is_bad(spec_after);
        let in_window = pos < self.horizon();
        match kind {
            FaultModelKind::Spec => spec_ok,
            FaultModelKind::Arbitrary => true,
            FaultModelKind::ObservedFull => !in_window || self.agrees(v, pos, &c.vars()),
            FaultModelKind::ObservedOut => !in_window || self.agrees(v, pos, &c.outputs),
            FaultModelKind::PrefixCorrect => spec_ok && (pos >= self.prefix[i] || self.agrees(v, pos, &c.vars())),
        }
    }

    fn successors(&self, node: &Node, kinds: &[FaultModelKind]) -> Vec<Node> {
        let comps = self.model.components();
        let mut out = Vec::new();
        for letter in 0..self.scope.letter_count() {
            let v = self.scope.valuation(letter);
            let specs: Vec<StateId> = comps.iter().zip(&node.specs).map(|(c, &s)| step(&c.spec, s, &v)).collect();
            if (0..comps.len()).all(|i| self.member(i, kinds[i], node.pos, specs[i], &v)) {
                out.push(Node {
                    pos: (node.pos + 1).min(self.horizon()),
                    specs,
                    theta: step(self.model.global_spec(), node.theta, &v),
                });
            }
        }
        out
    }

    fn start(&self) -> Node {
        Node {
            pos: 0,
            specs: self.model.components().iter().map(|c| c.spec.initial()).collect(),
            theta: self.model.global_spec().initial(),
        }
    }

    fn kinds(&self, d: &CandidateSet, mode: Mode) -> Vec<FaultModelKind> {
        self.model.components().iter().map(|c| self.kind(c, d, mode)).collect()
    }

    /// Does the operand contain a trace (of any length) rejected by θ?
    fn admits_violation(&self, d: &CandidateSet, mode: Mode) -> bool {
        let kinds = self.kinds(d, mode);
        let theta = self.model.global_spec();
        let mut seen = HashSet::from([self.start()]);
        let mut frontier = vec![self.start()];
        while let Some(node) = frontier.pop() {
            for next in self.successors(&node, &kinds) {
                if theta.is_bad(next.theta) {
                    return true;
                }
                if seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        false
    }

    pub fn mitigates(&self, d: &CandidateSet) -> bool {
        !self.admits_violation(d, Mode::Mitigation)
    }

    pub fn manifests(&self, d: &CandidateSet, q: Quantifier) -> bool {
        match q {
            Quantifier::Existential => self.admits_violation(d, Mode::Manifestation),
            Quantifier::Universal => {
                let kinds = self.kinds(d, Mode::Manifestation);
                let mut layer = HashSet::from([self.start()]);
                for _ in 0..self.horizon() {
                    layer = layer.iter().flat_map(|n| self.successors(n, &kinds)).collect();
                }
                !layer.is_empty() && layer.iter().all(|n| self.model.global_spec().is_bad(n.theta))
            }
        }
    }

    /// Is `w` (over the model scope) in the operand language of `d`?
    pub fn operand_accepts(&self, d: &CandidateSet, mode: Mode, w: &Trace) -> bool {
        let kinds = self.kinds(d, mode);
        let comps = self.model.components();
        let mut specs: Vec<StateId> = comps.iter().map(|c| c.spec.initial()).collect();
        for (pos, v) in w.steps().iter().enumerate() {
            specs = comps.iter().zip(&specs).map(|(c, &s)| step(&c.spec, s, v)).collect();
            if !(0..comps.len()).all(|i| self.member(i, kinds[i], pos, specs[i], v)) {
                return false;
            }
        }
        true
    }
}

/// Reachable state tuples of the synchronous product of `parts` over `scope`.
pub fn reachable_tuples(parts: &[&SafetyAutomaton], scope: &VarScope) -> usize {
    let start: Vec<StateId> = parts.iter().map(|a| a.initial()).collect();
    let mut seen = HashSet::from([start.clone()]);
    let mut frontier = vec![start];
    while let Some(t) = frontier.pop() {
        for letter in 0..scope.letter_count() {
            let v = scope.valuation(letter);
            let next: Vec<StateId> = parts.iter().zip(&t).map(|(a, &s)| step(a, s, &v)).collect();
            if seen.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    seen.len()
}

/// Bounded containment check by explicit traces: keeps one representative
/// trace per reached state pair, extends all representatives level by level
/// up to `cutoff`, and returns the first (shortest) trace accepted by `a`
/// and rejected by `b`.
pub fn bounded_counterexample(a: &SafetyAutomaton, b: &SafetyAutomaton, cutoff: usize) -> Option<Trace> {
    let scope = VarScope::union([a.vars(), b.vars()]);
    let mut seen: HashSet<(StateId, StateId)> = HashSet::from([(a.initial(), b.initial())]);
    let mut level: Vec<Trace> = vec![Trace::empty(scope.clone())];
    for _ in 0..cutoff {
        let mut next_level = Vec::new();
        for t in &level {
            for letter in 0..scope.letter_count() {
                let mut w = t.clone();
                w.push(scope.valuation(letter)).unwrap();
                let wa = w.restrict(a.vars()).unwrap();
                let wb = w.restrict(b.vars()).unwrap();
                if !accepts(a, &wa) {
                    continue;
                }
                if !accepts(b, &wb) {
                    return Some(w);
                }
                let pair = (final_state(a, &wa), final_state(b, &wb));
                if seen.insert(pair) {
                    next_level.push(w);
                }
            }
        }
        if next_level.is_empty() {
            break;
        }
        level = next_level;
    }
    None
}

fn final_state(a: &SafetyAutomaton, t: &Trace) -> StateId {
    t.steps().iter().fold(a.initial(), |s, v| step(a, s, v))
}
