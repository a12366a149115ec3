//! Cheap, sound simplifications and unsatisfiability detections applied
//! before encoding: affix stripping, three mismatch checks, ground
//! substitution propagation, and a length-feasibility gate.
//!
//! Every rewrite preserves the solution set exactly, so a residual
//! system can be handed to the encoder in place of the input. UNSAT
//! answers from the structural checks hold for any bounds; the
//! feasibility gate at the end is the only bound-dependent step.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::linear::{abstraction_feasible, length_abstraction};
use crate::model::{Bounds, EquationSystem, Pattern, Substitution, Symbol, WordEquation};

/// Per-check switches. The symbol-count check gets its own flag so it
/// can be disabled without losing the rest of the pipeline.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PreprocessConfig {
    pub strip_affixes: bool,
    pub prefix_suffix: bool,
    pub constant_runs: bool,
    pub symbol_counts: bool,
    pub substitution: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            strip_affixes: true,
            prefix_suffix: true,
            constant_runs: true,
            symbol_counts: true,
            substitution: true,
        }
    }
}

/// Outcome of preprocessing. A witness accompanies SAT; a residual
/// system with the same solution set accompanies UNKNOWN. SAT witnesses
/// ignore bounds and linear constraints, so callers re-verify them.
#[derive(Clone, PartialEq, Debug)]
pub enum PreprocessVerdict {
    Sat(Substitution),
    Unsat(String),
    Unknown(EquationSystem),
}

/// Removes the longest common prefix and suffix of the two sides
/// (symbol-wise; variables match only themselves). Cancellation makes
/// this solution-set preserving.
pub fn strip_common_affixes(e: &WordEquation) -> WordEquation {
    let l = e.lhs.symbols();
    let r = e.rhs.symbols();
    let mut start = 0;
    while start < l.len() && start < r.len() && l[start] == r[start] {
        start += 1;
    }
    let mut lend = l.len();
    let mut rend = r.len();
    while lend > start && rend > start && l[lend - 1] == r[rend - 1] {
        lend -= 1;
        rend -= 1;
    }
    WordEquation::new(Pattern(l[start..lend].to_vec()), Pattern(r[start..rend].to_vec()))
}

fn letter_clash_scan<'a>(
    mut l: impl Iterator<Item = &'a Symbol>,
    mut r: impl Iterator<Item = &'a Symbol>,
) -> bool {
    loop {
        match (l.next(), r.next()) {
            (Some(a), Some(b)) => {
                if a.is_variable() || b.is_variable() {
                    return false;
                }
                if a != b {
                    return true;
                }
            }
            _ => return false,
        }
    }
}

/// Walks both sides from the left and from the right up to the first
/// variable; two distinct letters at the same position refute the
/// equation.
pub fn prefix_suffix_mismatch(e: &WordEquation) -> bool {
    let l = e.lhs.symbols();
    let r = e.rhs.symbols();
    letter_clash_scan(l.iter(), r.iter()) || letter_clash_scan(l.iter().rev(), r.iter().rev())
}

fn maximal_letter_runs(p: &Pattern) -> Vec<String> {
    let mut runs = Vec::new();
    let mut cur = String::new();
    for s in p.symbols() {
        match *s {
            Symbol::Letter(c) => cur.push(c),
            Symbol::Variable(_) => {
                if !cur.is_empty() {
                    runs.push(std::mem::take(&mut cur));
                }
            }
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

/// When one side is ground, every maximal letter run of the other side
/// must occur in it as a factor; a missing run refutes the equation.
pub fn constant_sequence_mismatch(e: &WordEquation) -> bool {
    let sides = [(&e.lhs, &e.rhs), (&e.rhs, &e.lhs)];
    for (ground, other) in sides {
        if !ground.is_ground() {
            continue;
        }
        let word: String = ground.symbols().iter().map(|s| s.id()).collect();
        if maximal_letter_runs(other).iter().any(|run| !word.contains(run.as_str())) {
            return true;
        }
    }
    false
}

fn counts_align(
    cl: &BTreeMap<Symbol, usize>,
    cr: &BTreeMap<Symbol, usize>,
    variables: bool,
) -> bool {
    cl.keys().chain(cr.keys()).all(|s| {
        s.is_variable() != variables
            || cl.get(s).copied().unwrap_or(0) == cr.get(s).copied().unwrap_or(0)
    })
}

fn symbol_count_scan<'a>(
    l: impl Iterator<Item = &'a Symbol>,
    r: impl Iterator<Item = &'a Symbol>,
) -> bool {
    let mut cl: BTreeMap<Symbol, usize> = BTreeMap::new();
    let mut cr: BTreeMap<Symbol, usize> = BTreeMap::new();
    for (a, b) in l.zip(r) {
        *cl.entry(*a).or_insert(0) += 1;
        *cr.entry(*b).or_insert(0) += 1;
        if counts_align(&cl, &cr, true) && !counts_align(&cl, &cr, false) {
            return true;
        }
    }
    false
}

/// Prefix (and suffix) symbol-count check: when two equal-length
/// prefixes agree on every variable's occurrence count, their images
/// are equal-length prefixes of the same word, hence equal, so their
/// letter counts must agree too; a letter-count difference refutes the
/// equation.
pub fn parikh_mismatch(e: &WordEquation) -> bool {
    let l = e.lhs.symbols();
    let r = e.rhs.symbols();
    symbol_count_scan(l.iter(), r.iter()) || symbol_count_scan(l.iter().rev(), r.iter().rev())
}

fn ground_definition(eq: &WordEquation) -> Option<(char, String)> {
    let single = |p: &Pattern| match p.symbols() {
        [Symbol::Variable(x)] => Some(*x),
        _ => None,
    };
    let word = |p: &Pattern| p.symbols().iter().map(|s| s.id()).collect::<String>();
    if let Some(x) = single(&eq.lhs) {
        if eq.rhs.is_ground() {
            return Some((x, word(&eq.rhs)));
        }
    }
    if let Some(x) = single(&eq.rhs) {
        if eq.lhs.is_ground() {
            return Some((x, word(&eq.lhs)));
        }
    }
    None
}

fn substitute_ground(p: &Pattern, defs: &BTreeMap<char, String>) -> Pattern {
    let mut out = Vec::with_capacity(p.len());
    for s in p.symbols() {
        match *s {
            Symbol::Variable(x) if defs.contains_key(&x) => {
                out.extend(defs[&x].chars().map(Symbol::Letter));
            }
            other => out.push(other),
        }
    }
    Pattern(out)
}

fn mismatch_any(eq: &WordEquation, cfg: &PreprocessConfig) -> Option<String> {
    if cfg.prefix_suffix && prefix_suffix_mismatch(eq) {
        return Some(format!("letter clash in {}", eq));
    }
    if cfg.constant_runs && constant_sequence_mismatch(eq) {
        return Some(format!("constant run not a factor of the ground side in {}", eq));
    }
    if cfg.symbol_counts && parikh_mismatch(eq) {
        return Some(format!("symbol count mismatch in {}", eq));
    }
    None
}

fn substitution_pass(sys: &EquationSystem, cfg: &PreprocessConfig) -> PreprocessVerdict {
    let mut defs: BTreeMap<char, String> = BTreeMap::new();
    for eq in &sys.equations {
        if let Some((x, w)) = ground_definition(eq) {
            if let Some(old) = defs.get(&x) {
                if *old != w {
                    return PreprocessVerdict::Unsat(format!(
                        "conflicting definitions {} = {:?} and {} = {:?}",
                        x, old, x, w
                    ));
                }
            } else {
                defs.insert(x, w);
            }
        }
    }

    // Definitions are kept as equations so the residual constrains the
    // defined variables exactly like the input did.
    let mut residual = sys.clone();
    residual.equations.clear();
    let mut open = 0usize;
    for eq in &sys.equations {
        if ground_definition(eq).is_some() {
            residual.equations.push(eq.clone());
            continue;
        }
        let subst = WordEquation::new(
            substitute_ground(&eq.lhs, &defs),
            substitute_ground(&eq.rhs, &defs),
        );
        if subst != *eq {
            if let Some(reason) = mismatch_any(&subst, cfg) {
                return PreprocessVerdict::Unsat(reason);
            }
        }
        if subst.is_trivially_true() {
            continue;
        }
        open += 1;
        residual.equations.push(subst);
    }

    if open == 0 {
        let mut witness = Substitution::new();
        for &x in sys.variables() {
            witness.set(x, defs.get(&x).cloned().unwrap_or_default());
        }
        return PreprocessVerdict::Sat(witness);
    }
    PreprocessVerdict::Unknown(residual)
}

/// Propagates ground definitions `X = w` through the system: conflicting
/// definitions refute it; substituted equations that become trivial are
/// dropped; if only definitions remain, they form a witness (padded with
/// the empty word for undefined variables).
pub fn substitution_reasoning(sys: &EquationSystem) -> PreprocessVerdict {
    substitution_pass(sys, &PreprocessConfig::default())
}

/// Runs all enabled checks to a fixed point, then (when bounds are
/// given) tests each equation's length abstraction for feasibility.
/// UNSAT from the fixed-point phase holds for any bounds; UNSAT from
/// the feasibility gate only for the given ones.
pub fn preprocess_pipeline(
    sys: &EquationSystem,
    bounds: Option<&Bounds>,
    cfg: &PreprocessConfig,
) -> Result<PreprocessVerdict> {
    let mut cur = sys.clone();
    loop {
        let mut changed = false;

        let mut kept = Vec::with_capacity(cur.equations.len());
        for eq in &cur.equations {
            let reduced = if cfg.strip_affixes { strip_common_affixes(eq) } else { eq.clone() };
            if reduced != *eq {
                changed = true;
            }
            if reduced.is_trivially_true() {
                changed = true;
                continue;
            }
            kept.push(reduced);
        }
        cur.equations = kept;

        for eq in &cur.equations {
            if let Some(reason) = mismatch_any(eq, cfg) {
                return Ok(PreprocessVerdict::Unsat(reason));
            }
        }

        if cfg.substitution {
            match substitution_pass(&cur, cfg) {
                PreprocessVerdict::Sat(w) => return Ok(PreprocessVerdict::Sat(w)),
                PreprocessVerdict::Unsat(r) => return Ok(PreprocessVerdict::Unsat(r)),
                PreprocessVerdict::Unknown(next) => {
                    if next.equations != cur.equations {
                        changed = true;
                    }
                    cur = next;
                }
            }
        }

        if !changed {
            break;
        }
    }

    if cur.equations.is_empty() {
        let mut witness = Substitution::new();
        for &x in sys.variables() {
            witness.set(x, "");
        }
        return Ok(PreprocessVerdict::Sat(witness));
    }

    if let Some(b) = bounds {
        for eq in &cur.equations {
            let a = length_abstraction(eq, cur.variables());
            if !abstraction_feasible(&a, b)? {
                return Ok(PreprocessVerdict::Unsat(format!(
                    "length abstraction of {} infeasible within bounds",
                    eq
                )));
            }
        }
    }

    Ok(PreprocessVerdict::Unknown(cur))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(c: char) -> Symbol {
        if c.is_ascii_uppercase() {
            Symbol::Variable(c)
        } else {
            Symbol::Letter(c)
        }
    }

    fn pat(s: &str) -> Pattern {
        Pattern(s.chars().map(sym).collect())
    }

    fn weq(l: &str, r: &str) -> WordEquation {
        WordEquation::new(pat(l), pat(r))
    }

    fn system(eqs: &[(&str, &str)]) -> EquationSystem {
        let mut letters = Vec::new();
        let mut variables = Vec::new();
        for (l, r) in eqs {
            for c in l.chars().chain(r.chars()) {
                if c.is_ascii_uppercase() {
                    if !variables.contains(&c) {
                        variables.push(c);
                    }
                } else if !letters.contains(&c) {
                    letters.push(c);
                }
            }
        }
        let mut sys = EquationSystem::new(letters, variables).unwrap();
        for (l, r) in eqs {
            sys.add_equation(weq(l, r)).unwrap();
        }
        sys
    }

    #[test]
    fn affix_stripping() {
        assert_eq!(strip_common_affixes(&weq("aaX", "aabY")), weq("X", "bY"));
        assert_eq!(strip_common_affixes(&weq("X", "X")), weq("", ""));
        assert_eq!(strip_common_affixes(&weq("Xa", "aX")), weq("Xa", "aX"));
        assert_eq!(strip_common_affixes(&weq("abcX", "abY")), weq("cX", "Y"));
        assert_eq!(strip_common_affixes(&weq("Xba", "Yba")), weq("X", "Y"));
        // Prefix consumes first; the leftover single letter cannot be
        // stripped twice even though it matches both ends.
        assert_eq!(strip_common_affixes(&weq("aba", "aa")), weq("b", ""));
    }

    #[test]
    fn letter_clashes() {
        assert!(prefix_suffix_mismatch(&weq("abX", "aabY")));
        assert!(prefix_suffix_mismatch(&weq("ba", "ab")));
        assert!(!prefix_suffix_mismatch(&weq("aX", "aY")));
        // Clash visible only from the right.
        assert!(prefix_suffix_mismatch(&weq("Xa", "Yb")));
        assert!(!prefix_suffix_mismatch(&weq("b", "")));
    }

    #[test]
    fn constant_runs() {
        assert!(constant_sequence_mismatch(&weq("ababab", "XaabY")));
        assert!(!constant_sequence_mismatch(&weq("abab", "XabY")));
        assert!(!constant_sequence_mismatch(&weq("ab", "ab")));
        assert!(constant_sequence_mismatch(&weq("ab", "ba")));
        assert!(constant_sequence_mismatch(&weq("b", "")));
        assert!(!constant_sequence_mismatch(&weq("XbY", "ZaW")));
    }

    #[test]
    fn symbol_count_scans() {
        assert!(parikh_mismatch(&weq("aX", "Xb")));
        assert!(!parikh_mismatch(&weq("Xa", "aX")));
        assert!(!parikh_mismatch(&weq("ab", "ab")));
        // Mirror image of the classic case trips the suffix scan.
        assert!(parikh_mismatch(&weq("Xa", "bX")));
        assert!(!parikh_mismatch(&weq("XY", "YX")));
    }

    #[test]
    fn substitution_closes_the_example_system() {
        let sys = system(&[("X", "aab"), ("Y", "a"), ("aX", "Yaab")]);
        match substitution_reasoning(&sys) {
            PreprocessVerdict::Sat(w) => {
                assert_eq!(w.get('X'), Some("aab"));
                assert_eq!(w.get('Y'), Some("a"));
            }
            other => panic!("expected SAT, got {:?}", other),
        }
    }

    #[test]
    fn substitution_detects_conflicts_and_dead_ends() {
        let sys = system(&[("X", "a"), ("X", "b")]);
        assert!(matches!(substitution_reasoning(&sys), PreprocessVerdict::Unsat(_)));

        let open = system(&[("XY", "YX")]);
        match substitution_reasoning(&open) {
            PreprocessVerdict::Unknown(res) => assert_eq!(res.equations, open.equations),
            other => panic!("expected UNKNOWN, got {:?}", other),
        }
    }

    #[test]
    fn substitution_propagates_into_mismatch() {
        // Substituting X = ab turns the second equation into a clash.
        let sys = system(&[("X", "ab"), ("Xc", "bac")]);
        assert!(matches!(substitution_reasoning(&sys), PreprocessVerdict::Unsat(_)));
    }

    #[test]
    fn pipeline_unsat_after_reduction() {
        let sys = system(&[("aaX", "aabY"), ("abZ", "aabW")]);
        let verdict = preprocess_pipeline(&sys, None, &PreprocessConfig::default()).unwrap();
        assert!(matches!(verdict, PreprocessVerdict::Unsat(_)));
    }

    #[test]
    fn pipeline_sat_on_ground_identity() {
        let sys = system(&[("a", "a")]);
        match preprocess_pipeline(&sys, None, &PreprocessConfig::default()).unwrap() {
            PreprocessVerdict::Sat(w) => assert_eq!(w, Substitution::new()),
            other => panic!("expected SAT, got {:?}", other),
        }
    }

    #[test]
    fn pipeline_strips_before_returning_the_residual() {
        let sys = system(&[("aZXb", "aXaY")]);
        match preprocess_pipeline(&sys, None, &PreprocessConfig::default()).unwrap() {
            PreprocessVerdict::Unknown(res) => {
                assert_eq!(res.equations, vec![weq("ZXb", "XaY")]);
            }
            other => panic!("expected UNKNOWN, got {:?}", other),
        }
    }

    #[test]
    fn pipeline_is_idempotent_on_residuals() {
        let sys = system(&[("aZXb", "aXaY"), ("XY", "YX")]);
        let cfg = PreprocessConfig::default();
        let first = match preprocess_pipeline(&sys, None, &cfg).unwrap() {
            PreprocessVerdict::Unknown(res) => res,
            other => panic!("expected UNKNOWN, got {:?}", other),
        };
        match preprocess_pipeline(&first, None, &cfg).unwrap() {
            PreprocessVerdict::Unknown(second) => {
                assert_eq!(second.equations, first.equations)
            }
            other => panic!("expected UNKNOWN, got {:?}", other),
        }
    }

    #[test]
    fn pipeline_feasibility_gate_is_bound_aware() {
        // XX = aaaa is structurally open but forces |X| = 2.
        let sys = system(&[("XX", "aaaa")]);
        let cfg = PreprocessConfig::default();
        let tight = Bounds::uniform(&['X'], 1);
        assert!(matches!(
            preprocess_pipeline(&sys, Some(&tight), &cfg).unwrap(),
            PreprocessVerdict::Unsat(_)
        ));
        let loose = Bounds::uniform(&['X'], 2);
        assert!(matches!(
            preprocess_pipeline(&sys, Some(&loose), &cfg).unwrap(),
            PreprocessVerdict::Unknown(_)
        ));
    }

    #[test]
    fn pipeline_iterates_definitions_revealed_by_stripping() {
        // aX = ab strips to X = b, which then substitutes into the
        // second equation and exposes a letter clash.
        let sys = system(&[("aX", "ab"), ("XcY", "acb")]);
        let verdict = preprocess_pipeline(&sys, None, &PreprocessConfig::default()).unwrap();
        assert!(matches!(verdict, PreprocessVerdict::Unsat(_)));
    }
}
