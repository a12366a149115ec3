//! Explicit-state reference search over the alignment automaton.
//!
//! A state is a pair of positions into the two filled patterns plus the
//! partial cell assignment collected so far. From `(i, j, S)` one can
//!  - consume both current cells with a common value `a` (diagonal),
//!  - consume the left cell with lambda (step in `u` only),
//!  - consume the right cell with lambda (step in `v` only),
//! each time extending `S` where it was undefined. The equation is
//! satisfiable within the bounds iff a state with both patterns
//! exhausted is reachable. This module is the ground truth the CNF
//! encoder is tested against; it enumerates, it does not scale.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    fill_pattern, verify_solution, Atom, Bounds, CellValue, EquationSystem, FilledPattern,
    PartialAssignment, Substitution, WordEquation,
};

/// Caps on the explicit search; exceeding one is an error, not a verdict.
#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_states: 2_000_000 }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct State {
    i: usize,
    j: usize,
    assignment: PartialAssignment,
}

fn cell_atom(p: &FilledPattern, pos: usize) -> Option<Atom> {
    p.cells().get(pos).map(|&c| Atom::from(c))
}

/// All successor states of `s`, diagonal moves first.
fn successors(s: &State, u: &FilledPattern, v: &FilledPattern, letters: &[char]) -> Vec<State> {
    let mut out = Vec::new();
    let ucell = cell_atom(u, s.i);
    let vcell = cell_atom(v, s.j);

    if let (Some(uc), Some(vc)) = (ucell, vcell) {
        let mut values: Vec<CellValue> =
            letters.iter().map(|&a| CellValue::Letter(a)).collect();
        values.push(CellValue::Lambda);
        for value in values {
            let va = Atom::Value(value);
            if s.assignment.compatible(uc, va) && s.assignment.compatible(vc, va) {
                let assignment = s.assignment.extend(uc, value).extend(vc, value);
                out.push(State { i: s.i + 1, j: s.j + 1, assignment });
            }
        }
    }
    if let Some(uc) = ucell {
        if s.assignment.compatible(uc, Atom::Value(CellValue::Lambda)) {
            let assignment = s.assignment.extend(uc, CellValue::Lambda);
            out.push(State { i: s.i + 1, j: s.j, assignment });
        }
    }
    if let Some(vc) = vcell {
        if s.assignment.compatible(vc, Atom::Value(CellValue::Lambda)) {
            let assignment = s.assignment.extend(vc, CellValue::Lambda);
            out.push(State { i: s.i, j: s.j + 1, assignment });
        }
    }
    out
}

fn initial() -> State {
    State { i: 0, j: 0, assignment: PartialAssignment::default() }
}

/// Depth-first reachability of an accepting state, with early exit.
pub fn reachable_search(
    eq: &WordEquation,
    bounds: &Bounds,
    letters: &[char],
    limits: &SearchLimits,
) -> Result<bool> {
    let u = fill_pattern(&eq.lhs, bounds)?;
    let v = fill_pattern(&eq.rhs, bounds)?;
    let mut visited: HashSet<State> = HashSet::new();
    let mut stack = vec![initial()];
    while let Some(s) = stack.pop() {
        if !visited.insert(s.clone()) {
            continue;
        }
        if visited.len() > limits.max_states {
            return Err(Error::ResourceLimit(format!(
                "reachability search exceeded {} states",
                limits.max_states
            )));
        }
        if s.i == u.len() && s.j == v.len() {
            return Ok(true);
        }
        // LIFO order: pushing diagonals last makes them pop first.
        let mut succ = successors(&s, &u, &v, letters);
        succ.reverse();
        for n in succ {
            if !visited.contains(&n) {
                stack.push(n);
            }
        }
    }
    Ok(false)
}

/// Explores the whole reachable space and decodes every accepting state.
///
/// Returned substitutions cover exactly the variables of the equation.
pub fn enumerate_solutions(
    eq: &WordEquation,
    bounds: &Bounds,
    letters: &[char],
    limits: &SearchLimits,
) -> Result<BTreeSet<Substitution>> {
    let u = fill_pattern(&eq.lhs, bounds)?;
    let v = fill_pattern(&eq.rhs, bounds)?;
    let vars = eq.variables();
    let mut solutions = BTreeSet::new();
    let mut visited: HashSet<State> = HashSet::new();
    let mut queue = VecDeque::from([initial()]);
    visited.insert(initial());
    while let Some(s) = queue.pop_front() {
        if s.i == u.len() && s.j == v.len() {
            let mut sub = Substitution::new();
            for &x in &vars {
                let b = bounds.require(x)?;
                let mut word = String::new();
                for index in 0..b {
                    let fv = crate::model::FilledVariable { var: x, index };
                    if let Some(CellValue::Letter(c)) = s.assignment.0.get(&fv).copied() {
                        word.push(c);
                    }
                }
                sub.set(x, word);
            }
            solutions.insert(sub);
            continue;
        }
        for n in successors(&s, &u, &v, letters) {
            if visited.insert(n.clone()) {
                if visited.len() > limits.max_states {
                    return Err(Error::ResourceLimit(format!(
                        "solution enumeration exceeded {} states",
                        limits.max_states
                    )));
                }
                queue.push_back(n);
            }
        }
    }
    Ok(solutions)
}

/// Words over `letters` of length at most `b`, shortest first, letters in
/// the given order within each length.
fn words_up_to(letters: &[char], b: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..b {
        let mut next = Vec::new();
        for w in &layer {
            for &a in letters {
                let mut w2 = w.clone();
                w2.push(a);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Tries every bounded substitution against the whole system.
///
/// The candidate count is checked against `limits.max_states` up front.
pub fn brute_force_solve(
    sys: &EquationSystem,
    bounds: &Bounds,
    limits: &SearchLimits,
) -> Result<BTreeSet<Substitution>> {
    let vars = sys.variables();
    let mut candidate_count = 1usize;
    let mut domains: Vec<(char, Vec<String>)> = Vec::new();
    for &x in vars {
        let b = bounds.require(x)?;
        let words = words_up_to(sys.letters(), b);
        candidate_count = candidate_count.saturating_mul(words.len());
        domains.push((x, words));
    }
    if candidate_count > limits.max_states {
        return Err(Error::ResourceLimit(format!(
            "brute force would try {} substitutions",
            candidate_count
        )));
    }

    let mut solutions = BTreeSet::new();
    let mut picks = vec![0usize; domains.len()];
    loop {
        let mut s = Substitution::new();
        for (slot, (x, words)) in domains.iter().enumerate() {
            s.set(*x, words[picks[slot]].clone());
        }
        if verify_solution(&s, sys, bounds)? {
            solutions.insert(s);
        }
        // Odometer step over the word domains.
        let mut slot = domains.len();
        loop {
            if slot == 0 {
                return Ok(solutions);
            }
            slot -= 1;
            picks[slot] += 1;
            if picks[slot] < domains[slot].1.len() {
                break;
            }
            picks[slot] = 0;
        }
    }
}

/// DOT graph of the reachable state space, one cluster per position pair.
pub fn dot_dump(
    eq: &WordEquation,
    bounds: &Bounds,
    letters: &[char],
    limits: &SearchLimits,
) -> Result<String> {
    let u = fill_pattern(&eq.lhs, bounds)?;
    let v = fill_pattern(&eq.rhs, bounds)?;
    let mut ids: Vec<State> = Vec::new();
    let mut index: std::collections::HashMap<State, usize> = std::collections::HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::from([initial()]);
    index.insert(initial(), 0);
    ids.push(initial());
    while let Some(s) = queue.pop_front() {
        let from = index[&s];
        for n in successors(&s, &u, &v, letters) {
            let to = match index.get(&n) {
                Some(&k) => k,
                None => {
                    let k = ids.len();
                    if k > limits.max_states {
                        return Err(Error::ResourceLimit(format!(
                            "state graph dump exceeded {} states",
                            limits.max_states
                        )));
                    }
                    index.insert(n.clone(), k);
                    ids.push(n.clone());
                    queue.push_back(n);
                    k
                }
            };
            edges.push((from, to));
        }
    }

    let mut out = String::from("digraph alignment {\n  rankdir=LR;\n");
    for (k, s) in ids.iter().enumerate() {
        let mut label = format!("({},{})", s.i, s.j);
        for (fv, value) in &s.assignment.0 {
            let _ = write!(label, "\\n{}({})={}", fv.var, fv.index, value);
        }
        let accepting = s.i == u.len() && s.j == v.len();
        let shape = if accepting { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  n{} [shape={},label=\"{}\"];", k, shape, label);
    }
    for (a, b) in edges {
        let _ = writeln!(out, "  n{} -> n{};", a, b);
    }
    out.push_str("}\n");
    Ok(out)
}
