//! Seeded benchmark generators, five tracks:
//!
//! 1. one equation built by copying a random word to both sides and
//!    coherently replacing factors with variables,
//! 2. a parametric family whose minimal solutions grow exponentially,
//! 3. that family with each `b` spliced over by a side of a fresh small
//!    random equation,
//! 4. systems of many small equations over a shared variable pool and a
//!    single global witness,
//! 5. such systems enriched with length constraints, either derived
//!    from the witness (satisfiable) or contradictory on purpose.
//!
//! Identical specs give byte-identical instances; tracks 1, 4 and the
//! satisfiable side of 5 carry their generating assignment as a hidden
//! witness.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    EquationSystem, LinearConstraint, Pattern, Substitution, Symbol, WordEquation,
};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GenSpec {
    pub track: u8,
    pub seed: u64,
    pub variables: usize,
    pub letters: usize,
    /// Approximate side length of generated equations.
    pub length: usize,
    pub equations: usize,
    /// Family index n for tracks 2 and 3.
    pub family_n: usize,
    /// Splice budget for track 3; zero reproduces track 2.
    pub max_replacements: usize,
    /// Track 5: contradict the witness instead of respecting it.
    pub unsat_mode: bool,
}

impl GenSpec {
    /// Track defaults: 1 uses one long equation, 4 and 5 use many short
    /// ones over a smaller alphabet, 2 and 3 are family-index driven.
    pub fn new(track: u8, seed: u64) -> Result<Self> {
        let mut spec = GenSpec {
            track,
            seed,
            variables: 15,
            letters: 10,
            length: 300,
            equations: 1,
            family_n: 2,
            max_replacements: usize::MAX,
            unsat_mode: false,
        };
        match track {
            1 | 2 | 3 => {}
            4 => {
                spec.variables = 10;
                spec.letters = 6;
                spec.length = 60;
                spec.equations = 100;
            }
            5 => {
                spec.variables = 10;
                spec.letters = 6;
                spec.length = 60;
                spec.equations = 30;
            }
            _ => return Err(arg_err("track must be between 1 and 5")),
        }
        Ok(spec)
    }
}

/// A generated problem plus, where the construction guarantees one, a
/// substitution solving it within the emitted bounds.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub system: EquationSystem,
    pub witness: Option<Substitution>,
}

fn arg_err(msg: &str) -> Error {
    Error::Parse { line: 0, col: 0, msg: msg.into() }
}

fn letter_pool(count: usize) -> Vec<char> {
    ('a'..='z').take(count).collect()
}

fn variable_pool(count: usize) -> Vec<char> {
    ('A'..='Z').take(count).collect()
}

fn random_word(rng: &mut ChaCha8Rng, letters: &[char], len: usize) -> Vec<char> {
    (0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect()
}

/// One replacement pass over `base`: at each position, with probability
/// one half, a factor from the pool matching there becomes its variable;
/// otherwise the letter is kept. Every emitted occurrence of a variable
/// covers exactly its pool factor, so the pool is a solution of any
/// equation between two passes over the same base.
fn replace_side(rng: &mut ChaCha8Rng, base: &[char], pool: &[(char, Vec<char>)]) -> Pattern {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < base.len() {
        let candidates: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|(_, (_, f))| base[pos..].starts_with(f))
            .map(|(i, _)| i)
            .collect();
        if !candidates.is_empty() && rng.gen_bool(0.5) {
            let (x, f) = &pool[candidates[rng.gen_range(0..candidates.len())]];
            out.push(Symbol::Variable(*x));
            pos += f.len();
        } else {
            out.push(Symbol::Letter(base[pos]));
            pos += 1;
        }
    }
    Pattern(out)
}

fn validate(spec: &GenSpec) -> Result<()> {
    if spec.letters == 0 || spec.letters > 26 {
        return Err(arg_err("letter count must be between 1 and 26"));
    }
    if spec.variables > 26 {
        return Err(arg_err("variable count must be at most 26"));
    }
    Ok(())
}

/// Single long equation from a random base word and coherent factor
/// replacements; the factors are the witness and the emitted bounds.
pub fn gen_track1(spec: &GenSpec) -> Result<GeneratedInstance> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let letters = letter_pool(spec.letters);
    let vars = variable_pool(spec.variables);
    let base = random_word(&mut rng, &letters, spec.length.max(1));

    let mut pool = Vec::new();
    let mut witness = Substitution::new();
    for &x in &vars {
        let start = rng.gen_range(0..base.len());
        let flen = rng.gen_range(1..=(base.len() - start).min(5));
        let f = base[start..start + flen].to_vec();
        witness.set(x, f.iter().collect::<String>());
        pool.push((x, f));
    }

    let lhs = replace_side(&mut rng, &base, &pool);
    let rhs = replace_side(&mut rng, &base, &pool);
    let mut sys = EquationSystem::new(letters, vars.clone())?;
    sys.add_equation(WordEquation::new(lhs, rhs))?;
    for (x, f) in &pool {
        sys.bounds.set(*x, f.len());
    }
    Ok(GeneratedInstance { system: sys, witness: Some(witness) })
}

/// The parametric family
/// `X_n a X_n b X_{n-1} b ... b X_1  =  a X_n X_{n-1} X_{n-1} b ... b X_1 X_1 b a a`
/// (at n = 1 both b-separated tails are empty). Its minimal solution
/// doubles per index: X_j = a^(2^j).
pub fn gen_track2(n: usize) -> Result<WordEquation> {
    if n == 0 {
        return Err(arg_err("family index must be at least 1"));
    }
    if n > 26 {
        return Err(arg_err("family index must be at most 26"));
    }
    let var = |j: usize| Symbol::Variable((b'A' + (j - 1) as u8) as char);
    let a = Symbol::Letter('a');
    let b = Symbol::Letter('b');

    let mut lhs = vec![var(n), a, var(n)];
    for j in (1..n).rev() {
        lhs.push(b);
        lhs.push(var(j));
    }
    let mut rhs = vec![a, var(n)];
    for j in (1..n).rev() {
        rhs.push(var(j));
        rhs.push(var(j));
        rhs.push(b);
    }
    rhs.push(a);
    rhs.push(a);
    Ok(WordEquation::new(Pattern(lhs), Pattern(rhs)))
}

/// A small track-1-style equation over {a, b} with one fresh variable.
fn small_equation(rng: &mut ChaCha8Rng, var: char) -> WordEquation {
    let letters = ['a', 'b'];
    let len = rng.gen_range(4..=8);
    let base = random_word(rng, &letters, len);
    let start = rng.gen_range(0..base.len());
    let flen = rng.gen_range(1..=(base.len() - start).min(3));
    let pool = vec![(var, base[start..start + flen].to_vec())];
    WordEquation::new(replace_side(rng, &base, &pool), replace_side(rng, &base, &pool))
}

/// Track-2 skeleton with each `b` (up to the budget) replaced by one
/// side of a fresh small equation. Fresh variables are taken from the
/// end of the alphabet; splicing stops before they would collide with
/// the skeleton's.
pub fn gen_track3(spec: &GenSpec) -> Result<WordEquation> {
    let skeleton = gen_track2(spec.family_n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let floor = b'A' + spec.family_n as u8;
    let mut fresh = b'Z';
    let mut replaced = 0usize;

    let mut sides = Vec::new();
    for side in [&skeleton.lhs, &skeleton.rhs] {
        let mut syms = Vec::new();
        for &s in side.symbols() {
            if s == Symbol::Letter('b') && replaced < spec.max_replacements && fresh >= floor {
                let v = fresh as char;
                fresh -= 1;
                replaced += 1;
                let sub = small_equation(&mut rng, v);
                let chosen = if rng.gen_bool(0.5) { sub.lhs } else { sub.rhs };
                syms.extend(chosen.0);
            } else {
                syms.push(s);
            }
        }
        sides.push(Pattern(syms));
    }
    let rhs = sides.pop().expect("two sides");
    let lhs = sides.pop().expect("two sides");
    Ok(WordEquation::new(lhs, rhs))
}

/// Track-4 body, reused by track 5: a global witness over the shared
/// pool, then for each equation a base word stitched from letter runs
/// and witness factors, with an independent replacement pass per side.
fn gen_system(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<GeneratedInstance> {
    validate(spec)?;
    let letters = letter_pool(spec.letters);
    let vars = variable_pool(spec.variables);

    let mut pool = Vec::new();
    let mut witness = Substitution::new();
    for &x in &vars {
        let flen = rng.gen_range(1..=4);
        let f = random_word(rng, &letters, flen);
        witness.set(x, f.iter().collect::<String>());
        pool.push((x, f));
    }

    let mut sys = EquationSystem::new(letters.clone(), vars.clone())?;
    let target = spec.length.max(4);
    for _ in 0..spec.equations {
        let mut base: Vec<char> = Vec::new();
        while base.len() < target {
            if pool.is_empty() || rng.gen_bool(0.5) {
                let run = rng.gen_range(1..=4);
                base.extend(random_word(rng, &letters, run));
            } else {
                base.extend(pool[rng.gen_range(0..pool.len())].1.iter().copied());
            }
        }
        base.truncate(target);
        let lhs = replace_side(rng, &base, &pool);
        let rhs = replace_side(rng, &base, &pool);
        sys.add_equation(WordEquation::new(lhs, rhs))?;
    }
    for (x, f) in &pool {
        sys.bounds.set(*x, f.len());
    }
    Ok(GeneratedInstance { system: sys, witness: Some(witness) })
}

pub fn gen_track4(spec: &GenSpec) -> Result<GeneratedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    gen_system(spec, &mut rng)
}

/// Track 4 plus length constraints. Satisfiable mode derives them from
/// the witness lengths with nonnegative slack (a global sum bound and a
/// few pairwise differences); unsat mode demands a negative total
/// length, which nothing satisfies.
pub fn gen_track5(spec: &GenSpec) -> Result<GeneratedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut inst = gen_system(spec, &mut rng)?;
    let vars: Vec<char> = inst.system.variables().to_vec();

    if spec.unsat_mode {
        let coeffs: BTreeMap<char, i64> = vars.iter().map(|&x| (x, 1)).collect();
        inst.system.add_constraint(LinearConstraint::new(coeffs, -1))?;
        inst.witness = None;
        return Ok(inst);
    }

    let lens = inst.witness.as_ref().expect("system witness").lengths();
    let total: i64 = lens.values().map(|&l| l as i64).sum();
    let slack = rng.gen_range(0..=3);
    let sum_coeffs: BTreeMap<char, i64> = vars.iter().map(|&x| (x, 1)).collect();
    inst.system.add_constraint(LinearConstraint::new(sum_coeffs, total + slack))?;

    if vars.len() >= 2 {
        for _ in 0..vars.len().min(4) {
            let i = rng.gen_range(0..vars.len());
            let mut j = rng.gen_range(0..vars.len() - 1);
            if j >= i {
                j += 1;
            }
            let (x, y) = (vars[i], vars[j]);
            let value = lens[&x] as i64 - lens[&y] as i64;
            let coeffs: BTreeMap<char, i64> = [(x, 1), (y, -1)].into();
            inst.system.add_constraint(LinearConstraint::new(coeffs, value + rng.gen_range(0..=2)))?;
        }
    }
    Ok(inst)
}

/// Witness of the track-2 family: X_j = a^(2^j). Only attached for
/// small indices; it doubles per layer.
fn family_witness(n: usize) -> Option<Substitution> {
    if n > 20 {
        return None;
    }
    let mut w = Substitution::new();
    for j in 1..=n {
        w.set((b'A' + (j - 1) as u8) as char, "a".repeat(1usize << j));
    }
    Some(w)
}

/// Dispatch on the track number, wrapping bare equations into systems
/// with inferred declarations.
pub fn generate(spec: &GenSpec) -> Result<GeneratedInstance> {
    match spec.track {
        1 => gen_track1(spec),
        2 => {
            let eq = gen_track2(spec.family_n)?;
            Ok(GeneratedInstance {
                system: EquationSystem::for_equation(eq),
                witness: family_witness(spec.family_n),
            })
        }
        3 => {
            let eq = gen_track3(spec)?;
            Ok(GeneratedInstance { system: EquationSystem::for_equation(eq), witness: None })
        }
        4 => gen_track4(spec),
        5 => gen_track5(spec),
        _ => Err(arg_err("track must be between 1 and 5")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::serialize_problem;
    use crate::model::{verify_solution, Bounds};

    fn verified(inst: &GeneratedInstance) -> bool {
        let w = inst.witness.as_ref().expect("witness");
        verify_solution(w, &inst.system, &inst.system.bounds).unwrap()
    }

    #[test]
    fn track1_witness_and_determinism() {
        let mut spec = GenSpec::new(1, 1).unwrap();
        spec.variables = 4;
        spec.letters = 3;
        spec.length = 40;
        let a = gen_track1(&spec).unwrap();
        assert!(verified(&a));
        let b = gen_track1(&spec).unwrap();
        assert_eq!(serialize_problem(&a.system), serialize_problem(&b.system));
    }

    #[test]
    fn track1_without_variables_is_a_ground_identity() {
        let mut spec = GenSpec::new(1, 7).unwrap();
        spec.variables = 0;
        spec.length = 20;
        let inst = gen_track1(&spec).unwrap();
        let eq = &inst.system.equations[0];
        assert!(eq.lhs.is_ground());
        assert_eq!(eq.lhs, eq.rhs);
    }

    #[test]
    fn track2_family_shape_and_witness() {
        assert!(gen_track2(0).is_err());

        let eq = gen_track2(2).unwrap();
        let mut vars = eq.variables();
        vars.sort_unstable();
        assert_eq!(vars, vec!['A', 'B']);

        for n in 1..=3 {
            let spec =
                GenSpec { family_n: n, ..GenSpec::new(2, 0).unwrap() };
            let inst = generate(&spec).unwrap();
            let w = inst.witness.as_ref().unwrap();
            assert!(verify_solution(w, &inst.system, &Bounds::new()).unwrap(), "n = {}", n);
        }
    }

    #[test]
    fn track3_degenerates_and_round_trips() {
        let mut spec = GenSpec::new(3, 5).unwrap();
        spec.family_n = 3;
        spec.max_replacements = 0;
        assert_eq!(gen_track3(&spec).unwrap(), gen_track2(3).unwrap());

        spec.max_replacements = usize::MAX;
        let eq = gen_track3(&spec).unwrap();
        assert_ne!(eq, gen_track2(3).unwrap());
        let sys = EquationSystem::for_equation(eq);
        let text = serialize_problem(&sys);
        let back = crate::driver::parse_problem(&text).unwrap();
        assert_eq!(serialize_problem(&back), text);
    }

    #[test]
    fn track4_default_count_and_witness() {
        let spec = GenSpec::new(4, 11).unwrap();
        let inst = gen_track4(&spec).unwrap();
        assert_eq!(inst.system.equations.len(), 100);
        assert!(verified(&inst));
        let again = gen_track4(&spec).unwrap();
        assert_eq!(serialize_problem(&inst.system), serialize_problem(&again.system));
    }

    #[test]
    fn track5_constraints_respect_or_contradict_the_witness() {
        let spec = GenSpec::new(5, 3).unwrap();
        let inst = gen_track5(&spec).unwrap();
        assert_eq!(inst.system.equations.len(), 30);
        assert!(!inst.system.constraints.is_empty());
        assert!(verified(&inst));

        let unsat = GenSpec { unsat_mode: true, ..spec };
        let inst = gen_track5(&unsat).unwrap();
        assert!(inst.witness.is_none());
        assert_eq!(inst.system.constraints.last().unwrap().bound, -1);
    }

    #[test]
    fn generated_files_parse_back() {
        for track in 1..=5 {
            let mut spec = GenSpec::new(track, 2).unwrap();
            spec.length = 30;
            spec.equations = spec.equations.min(5);
            let inst = generate(&spec).unwrap();
            let text = serialize_problem(&inst.system);
            let back = crate::driver::parse_problem(&text).unwrap();
            assert_eq!(serialize_problem(&back), text, "track {}", track);
        }
    }
}
