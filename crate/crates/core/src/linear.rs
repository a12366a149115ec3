//! Length reasoning: the linear abstraction of an equation, bound
//! refinement derived from it, and layered decision diagrams for linear
//! (in)equalities over variable lengths.
//!
//! Comparing letter counts on both sides of `u = v` yields, for every
//! solution, sum over variables of (occurrences in u minus occurrences
//! in v) times the solution length, equal to the letter surplus of the
//! right side. That single linear equation cannot prove satisfiability
//! but prunes: infeasibility refutes the equation, and encoding its
//! solution set as a diagram guides the propositional search.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::Result;
use crate::model::{Bounds, Symbol, WordEquation};

/// Linear equation over variable lengths:
/// sum of `coeff(X) * |S(X)|` equals `target`.
///
/// Coefficients follow the convention "left occurrences minus right
/// occurrences"; the target is the letter surplus of the right side.
/// Every variable of the equation is present, a balanced one with
/// coefficient zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearAbstraction {
    pub coeffs: Vec<(char, i64)>,
    pub target: i64,
}

/// Builds the length abstraction of `eq`, layering variables in the
/// order given by `order` (variables absent from the equation are
/// skipped).
pub fn length_abstraction(eq: &WordEquation, order: &[char]) -> LinearAbstraction {
    let vars = eq.variables();
    let mut coeffs = Vec::new();
    for &x in order {
        if vars.contains(&x) {
            let c = eq.lhs.count_variable(x) as i64 - eq.rhs.count_variable(x) as i64;
            coeffs.push((x, c));
        }
    }
    let mut target = 0i64;
    let mut letters = BTreeSet::new();
    for s in eq.lhs.symbols().iter().chain(eq.rhs.symbols()) {
        if let Symbol::Letter(a) = s {
            letters.insert(*a);
        }
    }
    for a in letters {
        target += eq.rhs.count_letter(a) as i64 - eq.lhs.count_letter(a) as i64;
    }
    LinearAbstraction { coeffs, target }
}

/// Tightens bounds using the abstraction: solving it for one variable
/// and bounding the opposite-sign part by the current bounds yields an
/// upper bound on that variable's length. The new bound replaces the
/// old one only when it is a strict improvement and still positive.
pub fn refine_bounds(a: &LinearAbstraction, bounds: &Bounds) -> Result<Bounds> {
    let mut out = bounds.clone();
    for &(x, cx) in &a.coeffs {
        if cx == 0 {
            continue;
        }
        // Normalize so the solved-for coefficient is positive.
        let flip = if cx < 0 { -1 } else { 1 };
        let target = a.target * flip;
        let mut rest = 0i64;
        for &(y, cy) in &a.coeffs {
            let cy = cy * flip;
            if y != x && cy < 0 {
                rest += cy * out.require(y)? as i64;
            }
        }
        let refined = (target - rest).div_euclid(cx * flip);
        let current = out.require(x)? as i64;
        if refined > 0 && refined < current {
            out.set(x, refined as usize);
        }
    }
    Ok(out)
}

/// Accepting condition of a diagram: exact sum or upper bound.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Relation {
    Eq(i64),
    Le(i64),
}

impl Relation {
    fn admits(&self, sum: i64) -> bool {
        match *self {
            Relation::Eq(t) => sum == t,
            Relation::Le(c) => sum <= c,
        }
    }
}

/// One diagram row: the partial sums reachable after choosing a length
/// `0..=bound` for `var`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MddLayer {
    pub var: char,
    pub coeff: i64,
    pub bound: usize,
    pub sums: Vec<i64>,
}

/// Layered diagram over partial sums. The virtual root carries sum 0;
/// a path picks one length per layer and is accepting when the final
/// sum satisfies the relation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Mdd {
    pub layers: Vec<MddLayer>,
    pub accepting: Vec<i64>,
    pub has_root: bool,
}

impl Mdd {
    /// Root plus kept nodes across all layers.
    pub fn node_count(&self) -> usize {
        usize::from(self.has_root) + self.layers.iter().map(|l| l.sums.len()).sum::<usize>()
    }

    /// True when no accepting path exists.
    pub fn is_empty(&self) -> bool {
        !self.has_root || self.accepting.is_empty()
    }

    /// Sums feeding layer `i`: the previous layer, or the root.
    pub fn sums_before(&self, i: usize) -> &[i64] {
        if i == 0 {
            const ROOT: [i64; 1] = [0];
            &ROOT
        } else {
            &self.layers[i - 1].sums
        }
    }

    /// All accepted length vectors, in layer order. Diagnostic helper;
    /// exponential in the worst case, use on small diagrams only.
    pub fn length_vectors(&self) -> Vec<Vec<usize>> {
        if !self.has_root {
            return Vec::new();
        }
        let mut vectors = Vec::new();
        let mut picks: Vec<usize> = Vec::new();
        self.walk(0, 0, &mut picks, &mut vectors);
        vectors
    }

    fn walk(&self, layer: usize, sum: i64, picks: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if layer == self.layers.len() {
            if self.accepting.contains(&sum) || (self.layers.is_empty() && self.has_root) {
                out.push(picks.clone());
            }
            return;
        }
        let l = &self.layers[layer];
        for k in 0..=l.bound {
            let next = sum + k as i64 * l.coeff;
            if l.sums.contains(&next) {
                picks.push(k);
                self.walk(layer + 1, next, picks, out);
                picks.pop();
            }
        }
    }
}

/// Forward construction: layer `i` holds every sum reachable by length
/// choices `0..=bound` (inclusive, so a full-length word is expressible)
/// for the first `i+1` variables.
pub fn build_mdd(pairs: &[(char, i64)], bounds: &Bounds, rel: Relation) -> Result<Mdd> {
    let mut layers = Vec::with_capacity(pairs.len());
    let mut frontier: BTreeSet<i64> = [0].into();
    for &(x, coeff) in pairs {
        let bound = bounds.require(x)?;
        let mut sums = BTreeSet::new();
        for &s in &frontier {
            for k in 0..=bound as i64 {
                sums.insert(s + k * coeff);
            }
        }
        frontier = sums.clone();
        layers.push(MddLayer { var: x, coeff, bound, sums: sums.into_iter().collect() });
    }
    let accepting: Vec<i64> = frontier.iter().copied().filter(|&s| rel.admits(s)).collect();
    let has_root = if layers.is_empty() { rel.admits(0) } else { true };
    Ok(Mdd { layers, accepting, has_root })
}

/// Drops every node that cannot reach an accepting node. All remaining
/// nodes lie on a root-to-accepting path.
pub fn reduce_mdd(mdd: &Mdd) -> Mdd {
    let mut out = mdd.clone();
    if out.layers.is_empty() {
        // No layers: the root is the only node, accepting or not as
        // decided at build time; nothing to prune.
        return out;
    }
    let mut alive: BTreeSet<i64> = out.accepting.iter().copied().collect();
    let last = out.layers.len() - 1;
    out.layers[last].sums.retain(|s| alive.contains(s));
    for i in (0..out.layers.len()).rev() {
        let (coeff, bound) = (out.layers[i].coeff, out.layers[i].bound);
        let prev_alive: BTreeSet<i64> = out
            .sums_before(i)
            .iter()
            .copied()
            .filter(|&s| (0..=bound as i64).any(|k| alive.contains(&(s + k * coeff))))
            .collect();
        if i == 0 {
            out.has_root = prev_alive.contains(&0);
        } else {
            out.layers[i - 1].sums.retain(|s| prev_alive.contains(s));
        }
        alive = prev_alive;
    }
    if !out.has_root {
        for l in &mut out.layers {
            l.sums.clear();
        }
        out.accepting.clear();
    }
    out
}

/// Decides whether any bounded length vector satisfies the relation.
pub fn feasible(pairs: &[(char, i64)], bounds: &Bounds, rel: Relation) -> Result<bool> {
    Ok(!reduce_mdd(&build_mdd(pairs, bounds, rel)?).is_empty())
}

/// Feasibility of an equation's length abstraction under `bounds`.
pub fn abstraction_feasible(a: &LinearAbstraction, bounds: &Bounds) -> Result<bool> {
    feasible(&a.coeffs, bounds, Relation::Eq(a.target))
}

/// DOT rendering of a diagram, one rank per layer.
pub fn dot_mdd(mdd: &Mdd, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", name);
    out.push_str("  rankdir=TB;\n");
    if mdd.has_root {
        out.push_str("  root [label=\"0\",shape=circle];\n");
    }
    for (i, l) in mdd.layers.iter().enumerate() {
        for &s in &l.sums {
            let accepting = i + 1 == mdd.layers.len() && mdd.accepting.contains(&s);
            let shape = if accepting { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  n{}_{} [label=\"{}:{}\",shape={}];", i, esc(s), l.var, s, shape);
        }
        for &s in mdd.sums_before(i) {
            for k in 0..=l.bound as i64 {
                let t = s + k * l.coeff;
                if l.sums.contains(&t) {
                    let from = if i == 0 {
                        "root".to_string()
                    } else {
                        format!("n{}_{}", i - 1, esc(s))
                    };
                    let _ = writeln!(out, "  {} -> n{}_{} [label=\"{}\"];", from, i, esc(t), k);
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

fn esc(s: i64) -> String {
    if s < 0 {
        format!("m{}", -s)
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pattern, Symbol};

    fn pat(s: &str) -> Pattern {
        Pattern(
            s.chars()
                .map(|c| {
                    if c.is_ascii_uppercase() || c.is_ascii_digit() {
                        Symbol::Variable(c)
                    } else {
                        Symbol::Letter(c)
                    }
                })
                .collect(),
        )
    }

    fn weq(l: &str, r: &str) -> WordEquation {
        WordEquation::new(pat(l), pat(r))
    }

    // Variables named 1, 2, 3 to match the running three-variable case:
    // a1a2 = a312 with per-variable bound 2.
    fn running_example() -> (LinearAbstraction, Bounds) {
        let eq = weq("a1a2", "a31b");
        let a = length_abstraction(&eq, &['1', '2', '3']);
        (a, Bounds::uniform(&['1', '2', '3'], 2))
    }

    #[test]
    fn abstraction_of_running_example() {
        let (a, _) = running_example();
        assert_eq!(a.coeffs, vec![('1', 0), ('2', 1), ('3', -1)]);
        assert_eq!(a.target, 0);
    }

    #[test]
    fn reduced_diagram_of_running_example_has_six_nodes() {
        let (a, b) = running_example();
        let mdd = reduce_mdd(&build_mdd(&a.coeffs, &b, Relation::Eq(a.target)).unwrap());
        assert_eq!(mdd.node_count(), 6);
        assert!(mdd.has_root);
        assert_eq!(mdd.layers[0].sums, vec![0]);
        assert_eq!(mdd.layers[1].sums, vec![0, 1, 2]);
        assert_eq!(mdd.layers[2].sums, vec![0]);
        assert_eq!(mdd.accepting, vec![0]);
    }

    #[test]
    fn length_vectors_match_direct_enumeration() {
        let (a, b) = running_example();
        let mdd = reduce_mdd(&build_mdd(&a.coeffs, &b, Relation::Eq(a.target)).unwrap());
        let got: std::collections::BTreeSet<Vec<usize>> =
            mdd.length_vectors().into_iter().collect();
        let mut want = std::collections::BTreeSet::new();
        for i1 in 0..=2usize {
            for i2 in 0..=2usize {
                for i3 in 0..=2usize {
                    if i2 as i64 - i3 as i64 == 0 {
                        want.insert(vec![i1, i2, i3]);
                    }
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn refinement_caps_a_variable_by_the_constant_side() {
        let eq = weq("X", "aa");
        let a = length_abstraction(&eq, &['X']);
        assert_eq!(a.coeffs, vec![('X', 1)]);
        assert_eq!(a.target, 2);
        let refined = refine_bounds(&a, &Bounds::uniform(&['X'], 10)).unwrap();
        assert_eq!(refined.get('X'), Some(2));
    }

    #[test]
    fn refinement_handles_mixed_signs_and_keeps_zero_coefficient_bounds() {
        // X occurs twice left, Y once right: 2|X| - |Y| = 1.
        let eq = weq("XXa", "aYaa");
        let a = length_abstraction(&eq, &['X', 'Y']);
        assert_eq!(a.coeffs, vec![('X', 2), ('Y', -1)]);
        assert_eq!(a.target, 2);
        let b = Bounds::uniform(&['X', 'Y'], 6);
        let refined = refine_bounds(&a, &b).unwrap();
        // 2|X| = 2 + |Y| <= 8, so |X| <= 4; |Y| = 2|X| - 2 <= 10, no gain.
        assert_eq!(refined.get('X'), Some(4));
        assert_eq!(refined.get('Y'), Some(6));
    }

    #[test]
    fn refinement_never_raises_or_zeroes_bounds() {
        let eq = weq("X", "aa");
        let a = length_abstraction(&eq, &['X']);
        let refined = refine_bounds(&a, &Bounds::uniform(&['X'], 1)).unwrap();
        assert_eq!(refined.get('X'), Some(1));
        let eqz = weq("X", "");
        let az = length_abstraction(&eqz, &['X']);
        // Refined value 0 is not applied; the zero length is still left
        // to the search.
        let refined = refine_bounds(&az, &Bounds::uniform(&['X'], 3)).unwrap();
        assert_eq!(refined.get('X'), Some(3));
    }

    #[test]
    fn infeasible_abstraction_is_detected() {
        let eq = weq("X", "aa");
        let a = length_abstraction(&eq, &['X']);
        assert!(!abstraction_feasible(&a, &Bounds::uniform(&['X'], 1)).unwrap());
        assert!(abstraction_feasible(&a, &Bounds::uniform(&['X'], 2)).unwrap());
    }

    #[test]
    fn ground_equation_abstractions() {
        let eq = weq("ab", "ba");
        let a = length_abstraction(&eq, &[]);
        assert!(a.coeffs.is_empty());
        assert_eq!(a.target, 0);
        assert!(abstraction_feasible(&a, &Bounds::new()).unwrap());

        let bad = length_abstraction(&weq("", "a"), &[]);
        assert_eq!(bad.target, 1);
        assert!(!abstraction_feasible(&bad, &Bounds::new()).unwrap());
    }

    #[test]
    fn le_relation_keeps_all_small_sums() {
        let b = Bounds::uniform(&['X', 'Y'], 2);
        let mdd =
            reduce_mdd(&build_mdd(&[('X', 1), ('Y', 1)], &b, Relation::Le(1)).unwrap());
        let got: std::collections::BTreeSet<Vec<usize>> =
            mdd.length_vectors().into_iter().collect();
        let want: std::collections::BTreeSet<Vec<usize>> =
            [vec![0, 0], vec![0, 1], vec![1, 0]].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn reduction_agrees_with_enumeration_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240811);
        let vars = ['X', 'Y', 'Z'];
        for round in 0..300 {
            let n = rng.gen_range(0..=3usize);
            let mut pairs = Vec::new();
            let mut bounds = Bounds::new();
            for &v in vars.iter().take(n) {
                pairs.push((v, rng.gen_range(-3i64..=3)));
                bounds.set(v, rng.gen_range(0..=3usize));
            }
            let rel = if rng.gen_bool(0.5) {
                Relation::Eq(rng.gen_range(-4i64..=4))
            } else {
                Relation::Le(rng.gen_range(-4i64..=4))
            };
            let mdd = reduce_mdd(&build_mdd(&pairs, &bounds, rel).unwrap());
            let got: std::collections::BTreeSet<Vec<usize>> =
                mdd.length_vectors().into_iter().collect();

            let mut want = std::collections::BTreeSet::new();
            let dims: Vec<usize> =
                pairs.iter().map(|&(v, _)| bounds.get(v).unwrap()).collect();
            let mut pick = vec![0usize; n];
            loop {
                let sum: i64 =
                    pick.iter().zip(&pairs).map(|(&k, &(_, c))| k as i64 * c).sum();
                if rel.admits(sum) {
                    want.insert(pick.clone());
                }
                let mut slot = n;
                loop {
                    if slot == 0 {
                        break;
                    }
                    slot -= 1;
                    pick[slot] += 1;
                    if pick[slot] <= dims[slot] {
                        break;
                    }
                    pick[slot] = 0;
                }
                if pick.iter().all(|&k| k == 0) {
                    break;
                }
            }
            assert_eq!(got, want, "round {} pairs {:?} rel {:?}", round, pairs, rel);
            // Every kept node lies on an accepting path, so emptiness
            // and feasibility coincide.
            assert_eq!(mdd.is_empty(), want.is_empty());
        }
    }
}
