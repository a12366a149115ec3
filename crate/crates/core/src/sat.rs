//! Propositional backend: CNF container, a small conflict-driven solver,
//! model enumeration, and DIMACS interchange.
//!
//! The solver is complete. It learns a first-unique-implication-point
//! clause per conflict, propagates with two watched literals per clause,
//! picks decisions by bumped variable activity with phase saving, and
//! restarts on a Luby schedule. Learnt clauses are never deleted, which
//! is fine at the problem sizes this crate produces and keeps the loop
//! easy to reason about. Given a fixed formula the run is deterministic.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// DIMACS-style literal: positive or negative 1-based variable index.
pub type Lit = i32;

/// CNF with optional assumption literals that are asserted as units.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    assumptions: Vec<Lit>,
}

impl CnfFormula {
    pub fn new() -> Self {
        CnfFormula::default()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn assumptions(&self) -> &[Lit] {
        &self.assumptions
    }

    /// Registers variables up to `v`; numbering is dense and external.
    pub fn ensure_var(&mut self, v: u32) {
        if v > self.num_vars {
            self.num_vars = v;
        }
    }

    pub fn fresh_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    /// Adds a clause. Every literal must reference a registered variable.
    /// The empty clause is allowed and makes the formula unsatisfiable.
    pub fn add_clause(&mut self, lits: Vec<Lit>) {
        for &l in &lits {
            assert!(l != 0 && l.unsigned_abs() <= self.num_vars, "unregistered literal {}", l);
        }
        self.clauses.push(lits);
    }

    pub fn assume(&mut self, lit: Lit) {
        assert!(lit != 0 && lit.unsigned_abs() <= self.num_vars);
        self.assumptions.push(lit);
    }

    /// True when `model` (1-based) satisfies all clauses and assumptions.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        let lit_true =
            |l: Lit| -> bool { model[l.unsigned_abs() as usize] == (l > 0) };
        self.clauses.iter().all(|c| c.iter().any(|&l| lit_true(l)))
            && self.assumptions.iter().all(|&l| lit_true(l))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// Index 0 is unused; entry `v` is the value of variable `v`.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

const NO_REASON: u32 = u32::MAX;

/// Heap entry ordered by activity snapshot; stale entries are skipped.
#[derive(PartialEq)]
struct HeapEntry {
    act: f64,
    var: u32,
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Activities are finite; tie-break on the lower variable index
        // so runs are deterministic.
        self.act
            .partial_cmp(&other.act)
            .unwrap()
            .then_with(|| other.var.cmp(&self.var))
    }
}

struct Solver {
    nvars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    value: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: BinaryHeap<HeapEntry>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
}

fn lit_index(l: Lit) -> usize {
    let v = l.unsigned_abs() as usize;
    2 * v + usize::from(l < 0)
}

impl Solver {
    fn new(f: &CnfFormula) -> Solver {
        let nvars = f.num_vars() as usize;
        let mut s = Solver {
            nvars,
            clauses: Vec::with_capacity(f.clauses().len()),
            watches: vec![Vec::new(); 2 * nvars + 2],
            value: vec![0; nvars + 1],
            level: vec![0; nvars + 1],
            reason: vec![NO_REASON; nvars + 1],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; nvars + 1],
            var_inc: 1.0,
            heap: BinaryHeap::new(),
            phase: vec![false; nvars + 1],
            seen: vec![false; nvars + 1],
            ok: true,
        };
        for v in 1..=nvars as u32 {
            s.heap.push(HeapEntry { act: 0.0, var: v });
        }
        for c in f.clauses() {
            s.add_clause(c);
        }
        for &a in f.assumptions() {
            s.add_clause(&[a]);
        }
        s
    }

    fn value_of(&self, l: Lit) -> i8 {
        let v = self.value[l.unsigned_abs() as usize];
        if l > 0 {
            v
        } else {
            -v
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        // Normalize: drop duplicates, drop tautologies.
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            if c.contains(&l) {
                continue;
            }
            if c.contains(&-l) {
                return;
            }
            c.push(l);
        }
        match c.len() {
            0 => self.ok = false,
            1 => match self.value_of(c[0]) {
                1 => {}
                -1 => self.ok = false,
                _ => self.enqueue(c[0], NO_REASON),
            },
            _ => {
                let cid = self.clauses.len() as u32;
                self.watches[lit_index(c[0])].push(cid);
                self.watches[lit_index(c[1])].push(cid);
                self.clauses.push(c);
            }
        }
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.unsigned_abs() as usize;
        debug_assert_eq!(self.value[v], 0);
        self.value[v] = if l > 0 { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let fl = -p;
            let widx = lit_index(fl);
            let ws = std::mem::take(&mut self.watches[widx]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut it = ws.into_iter();
            while let Some(cid) = it.next() {
                let ci = cid as usize;
                if self.clauses[ci][0] == fl {
                    self.clauses[ci].swap(0, 1);
                }
                debug_assert_eq!(self.clauses[ci][1], fl);
                let first = self.clauses[ci][0];
                if self.value_of(first) == 1 {
                    keep.push(cid);
                    continue;
                }
                let replacement =
                    (2..self.clauses[ci].len()).find(|&k| self.value_of(self.clauses[ci][k]) != -1);
                if let Some(k) = replacement {
                    self.clauses[ci].swap(1, k);
                    let moved = self.clauses[ci][1];
                    self.watches[lit_index(moved)].push(cid);
                    continue;
                }
                keep.push(cid);
                if self.value_of(first) == -1 {
                    conflict = Some(cid);
                    self.qhead = self.trail.len();
                    keep.extend(it);
                    break;
                }
                self.enqueue(first, cid);
            }
            self.watches[widx] = keep;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
            for u in 1..=self.nvars {
                if self.value[u] == 0 {
                    self.heap.push(HeapEntry { act: self.activity[u], var: u as u32 });
                }
            }
        }
        if self.value[v] == 0 {
            self.heap.push(HeapEntry { act: self.activity[v], var: v as u32 });
        }
    }

    /// First-unique-implication-point conflict analysis.
    fn analyze(&mut self, conflict: u32) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![0];
        let mut counter = 0u32;
        let mut p: Lit = 0;
        let mut idx = self.trail.len();
        let mut cid = conflict;
        let current = self.decision_level();
        loop {
            let start = usize::from(p != 0);
            for k in start..self.clauses[cid as usize].len() {
                let q = self.clauses[cid as usize][k];
                let v = q.unsigned_abs() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] == current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].unsigned_abs() as usize] {
                    break;
                }
            }
            p = self.trail[idx];
            let v = p.unsigned_abs() as usize;
            self.seen[v] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            cid = self.reason[v];
        }
        learnt[0] = -p;
        for &q in &learnt {
            self.seen[q.unsigned_abs() as usize] = false;
        }

        let mut back = 0u32;
        let mut at = 0;
        for (k, &q) in learnt.iter().enumerate().skip(1) {
            let lv = self.level[q.unsigned_abs() as usize];
            if lv > back {
                back = lv;
                at = k;
            }
        }
        if at != 0 {
            learnt.swap(1, at);
        }
        (learnt, back)
    }

    fn cancel_until(&mut self, target: u32) {
        while self.decision_level() > target {
            let mark = self.trail_lim.pop().unwrap();
            while self.trail.len() > mark {
                let l = self.trail.pop().unwrap();
                let v = l.unsigned_abs() as usize;
                self.phase[v] = l > 0;
                self.value[v] = 0;
                self.reason[v] = NO_REASON;
                self.heap.push(HeapEntry { act: self.activity[v], var: v as u32 });
            }
        }
        self.qhead = self.trail.len();
    }

    fn pick_branch(&mut self) -> Option<u32> {
        while let Some(e) = self.heap.pop() {
            let v = e.var as usize;
            if self.value[v] == 0 && e.act == self.activity[v] {
                return Some(e.var);
            }
        }
        None
    }

    fn luby(mut i: u64) -> u64 {
        // Size of the i-th term of the Luby restart sequence, 1-based.
        debug_assert!(i >= 1);
        let mut k = 1u64;
        while (1 << (k + 1)) - 1 <= i {
            k += 1;
        }
        while i != (1 << k) - 1 {
            i -= (1 << k) - 1;
            k = 1;
            while (1 << (k + 1)) - 1 <= i {
                k += 1;
            }
        }
        1 << (k - 1)
    }

    fn solve(&mut self) -> SatResult {
        if !self.ok {
            return SatResult::Unsat;
        }
        let mut restarts = 0u64;
        let mut conflicts_left = 100 * Self::luby(restarts + 1);
        loop {
            if let Some(conflict) = self.propagate() {
                if self.decision_level() == 0 {
                    return SatResult::Unsat;
                }
                let (learnt, back) = self.analyze(conflict);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let cid = self.clauses.len() as u32;
                    self.watches[lit_index(learnt[0])].push(cid);
                    self.watches[lit_index(learnt[1])].push(cid);
                    let asserting = learnt[0];
                    self.clauses.push(learnt);
                    self.enqueue(asserting, cid);
                }
                self.var_inc /= 0.95;
                if conflicts_left > 0 {
                    conflicts_left -= 1;
                }
                continue;
            }
            if conflicts_left == 0 && self.decision_level() > 0 {
                restarts += 1;
                conflicts_left = 100 * Self::luby(restarts + 1);
                self.cancel_until(0);
                continue;
            }
            match self.pick_branch() {
                None => {
                    let mut model = vec![false; self.nvars + 1];
                    for v in 1..=self.nvars {
                        model[v] = self.value[v] == 1;
                    }
                    return SatResult::Sat(model);
                }
                Some(v) => {
                    self.trail_lim.push(self.trail.len());
                    let lit = if self.phase[v as usize] { v as Lit } else { -(v as Lit) };
                    self.enqueue(lit, NO_REASON);
                }
            }
        }
    }
}

/// Decides the formula. A satisfying assignment is re-checked against
/// every clause before it is returned.
pub fn solve(f: &CnfFormula) -> Result<SatResult> {
    let mut solver = Solver::new(f);
    match solver.solve() {
        SatResult::Sat(model) => {
            if !f.satisfied_by(&model) {
                return Err(Error::Integrity(
                    "solver returned an assignment that fails its own clauses".into(),
                ));
            }
            Ok(SatResult::Sat(model))
        }
        SatResult::Unsat => Ok(SatResult::Unsat),
    }
}

/// All satisfying assignments restricted to `projection`, as sorted
/// literal vectors. Distinct total models that agree on the projection
/// are reported once. Stops with an error beyond `limit` models.
pub fn enumerate_models(
    f: &CnfFormula,
    projection: &[u32],
    limit: usize,
) -> Result<Vec<Vec<Lit>>> {
    let mut work = f.clone();
    let mut models = Vec::new();
    loop {
        match solve(&work)? {
            SatResult::Unsat => return Ok(models),
            SatResult::Sat(model) => {
                let projected: Vec<Lit> = projection
                    .iter()
                    .map(|&v| if model[v as usize] { v as Lit } else { -(v as Lit) })
                    .collect();
                if models.len() >= limit {
                    return Err(Error::ResourceLimit(format!(
                        "model enumeration exceeded {} models",
                        limit
                    )));
                }
                let blocking: Vec<Lit> = projected.iter().map(|&l| -l).collect();
                models.push(projected);
                if blocking.is_empty() {
                    // Nothing to project on: one empty model.
                    return Ok(models);
                }
                work.add_clause(blocking);
            }
        }
    }
}

/// Serializes to DIMACS. Assumptions are written as unit clauses and
/// counted in the header. Output is byte-stable for equal input.
pub fn write_dimacs(f: &CnfFormula, comments: &[&str]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("c ");
        out.push_str(c);
        out.push('\n');
    }
    let total = f.clauses().len() + f.assumptions().len();
    out.push_str(&format!("p cnf {} {}\n", f.num_vars(), total));
    let mut clause_line = |lits: &[Lit]| {
        for &l in lits {
            out.push_str(&l.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    };
    for c in f.clauses() {
        clause_line(c);
    }
    for &a in f.assumptions() {
        clause_line(&[a]);
    }
    out
}

/// Parses DIMACS back into a formula; every parsed clause lands in the
/// clause list (assumption units are not reconstructed).
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut f = CnfFormula::new();
    let mut declared: Option<(u32, usize)> = None;
    let mut current: Vec<Lit> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let bad = |msg: &str| Error::Parse {
                line: lineno + 1,
                col: 1,
                msg: msg.to_string(),
            };
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(bad("malformed problem line, expected 'p cnf <vars> <clauses>'"));
            }
            let nv: u32 = parts[1].parse().map_err(|_| bad("bad variable count"))?;
            let nc: usize = parts[2].parse().map_err(|_| bad("bad clause count"))?;
            f.ensure_var(nv);
            declared = Some((nv, nc));
            continue;
        }
        let (nv, _) = declared.ok_or(Error::Parse {
            line: lineno + 1,
            col: 1,
            msg: "clause before problem line".into(),
        })?;
        for tok in line.split_whitespace() {
            let l: Lit = tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                col: 1,
                msg: format!("bad literal token {:?}", tok),
            })?;
            if l == 0 {
                f.add_clause(std::mem::take(&mut current));
            } else if l.unsigned_abs() > nv {
                return Err(Error::Parse {
                    line: lineno + 1,
                    col: 1,
                    msg: format!("literal {} above declared variable count {}", l, nv),
                });
            } else {
                current.push(l);
            }
        }
    }
    if !current.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count(),
            col: 1,
            msg: "unterminated clause at end of input".into(),
        });
    }
    if let Some((_, nc)) = declared {
        if f.clauses().len() != nc {
            return Err(Error::Parse {
                line: text.lines().count(),
                col: 1,
                msg: format!("declared {} clauses, found {}", nc, f.clauses().len()),
            });
        }
    }
    Ok(f)
}

/// Reads solver output in SAT-competition form: an `s` status line and,
/// for satisfiable runs, `v` lines of literals closed by 0. A claimed
/// model is checked against `f`; a failing check is an integrity error.
pub fn read_external_model(text: &str, f: &CnfFormula) -> Result<SatResult> {
    let mut status: Option<bool> = None;
    let mut lits: Vec<Lit> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = match rest.trim() {
                "SATISFIABLE" => Some(true),
                "UNSATISFIABLE" => Some(false),
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        col: 1,
                        msg: format!("unknown status {:?}", other),
                    })
                }
            };
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let l: Lit = tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    col: 1,
                    msg: format!("bad literal token {:?}", tok),
                })?;
                if l != 0 {
                    lits.push(l);
                }
            }
        }
    }
    match status {
        None => Err(Error::Parse { line: 1, col: 1, msg: "no status line found".into() }),
        Some(false) => Ok(SatResult::Unsat),
        Some(true) => {
            let mut model = vec![false; f.num_vars() as usize + 1];
            for &l in &lits {
                let v = l.unsigned_abs();
                if v == 0 || v > f.num_vars() {
                    return Err(Error::Parse {
                        line: 1,
                        col: 1,
                        msg: format!("model literal {} outside formula variables", l),
                    });
                }
                model[v as usize] = l > 0;
            }
            if !f.satisfied_by(&model) {
                return Err(Error::Integrity(
                    "imported model does not satisfy the exported formula".into(),
                ));
            }
            Ok(SatResult::Sat(model))
        }
    }
}
