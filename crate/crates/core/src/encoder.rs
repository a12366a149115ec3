//! CNF compilation of a bounded equation system: cell variables with
//! exactly-one and padding-suffix clauses, one-hot length variables,
//! match variables, a reachability grid per equation, and path clauses
//! for length decision diagrams.
//!
//! Variable numbering is part of the contract: cells (variables in
//! declaration order, indices ascending, letters in declaration order
//! then the padding value), then one-hot lengths, then per equation the
//! match block (row-major, variable-variable pairs only) and the
//! location grid (row-major) with grid helpers right after it, then one
//! block per decision diagram. DIMACS files and map files therefore
//! stay aligned across runs.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linear::Mdd;
use crate::model::{
    fill_pattern, Bounds, Cell, CellValue, EquationSystem, FilledAssignment, FilledPattern,
    FilledVariable, Substitution,
};
use crate::sat::{CnfFormula, Lit};

/// Semantic key of one propositional variable.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum VarKey {
    /// Cell `index` of variable `var` holds `value`.
    Cell { var: char, index: usize, value: CellValue },
    /// Variable `var` has substitution length `len`.
    Length { var: char, len: usize },
    /// Filled positions `i` of the left and `j` of the right side of
    /// equation `eq` carry the same value.
    Match { eq: usize, i: usize, j: usize },
    /// Location `(i, j)` of equation `eq`'s grid is on the path.
    Location { eq: usize, i: usize, j: usize },
    /// Node of diagram `mdd` at `layer` (-1 is the root) with `sum`.
    Node { mdd: usize, layer: isize, sum: i64 },
    /// Definitional helper, numbered in creation order.
    Aux(usize),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::Cell { var, index, value } => write!(f, "K:{}:{}:{}", var, index, value),
            VarKey::Length { var, len } => write!(f, "OH:{}:{}", var, len),
            VarKey::Match { eq, i, j } => write!(f, "WM:{}:{}:{}", eq, i, j),
            VarKey::Location { eq, i, j } => write!(f, "S:{}:{}:{}", eq, i, j),
            VarKey::Node { mdd, layer, sum } => write!(f, "M:{}:{}:{}", mdd, layer, sum),
            VarKey::Aux(n) => write!(f, "AUX:{}", n),
        }
    }
}

/// Bijection between semantic keys and CNF variable numbers.
#[derive(Default, Debug)]
pub struct VariableRegistry {
    keys: Vec<VarKey>,
    index: HashMap<VarKey, u32>,
    aux_count: usize,
}

impl VariableRegistry {
    fn register(&mut self, f: &mut CnfFormula, key: VarKey) -> Lit {
        assert!(!self.index.contains_key(&key), "key registered twice: {}", key);
        let v = f.fresh_var();
        self.keys.push(key.clone());
        self.index.insert(key, v);
        v as Lit
    }

    fn fresh_aux(&mut self, f: &mut CnfFormula) -> Lit {
        let n = self.aux_count;
        self.aux_count += 1;
        self.register(f, VarKey::Aux(n))
    }

    pub fn lookup(&self, key: &VarKey) -> Option<Lit> {
        self.index.get(key).map(|&v| v as Lit)
    }

    pub fn keys(&self) -> &[VarKey] {
        &self.keys
    }

    pub fn describe(&self, var: u32) -> Option<&VarKey> {
        self.keys.get(var.checked_sub(1)? as usize)
    }

    /// One "number key" line per variable, aligned with DIMACS numbering.
    pub fn map_text(&self) -> String {
        let mut out = String::new();
        for (i, key) in self.keys.iter().enumerate() {
            out.push_str(&format!("{} {}\n", i + 1, key));
        }
        out
    }
}

/// A literal after constant folding.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Term {
    True,
    False,
    Lit(Lit),
}

impl Term {
    pub fn negated(self) -> Term {
        match self {
            Term::True => Term::False,
            Term::False => Term::True,
            Term::Lit(l) => Term::Lit(-l),
        }
    }
}

/// Incremental encoder; the block methods must be called in the order
/// cells, one-hot, equations, diagrams (encode_system does exactly
/// that). The registry and formula stay consistent throughout.
pub struct Encoder<'a> {
    sys: &'a EquationSystem,
    bounds: &'a Bounds,
    pub formula: CnfFormula,
    pub registry: VariableRegistry,
    filled: Vec<(FilledPattern, FilledPattern)>,
    mdd_count: usize,
}

impl<'a> Encoder<'a> {
    pub fn new(sys: &'a EquationSystem, bounds: &'a Bounds) -> Result<Self> {
        let mut filled = Vec::with_capacity(sys.equations.len());
        for eq in &sys.equations {
            filled.push((fill_pattern(&eq.lhs, bounds)?, fill_pattern(&eq.rhs, bounds)?));
        }
        Ok(Encoder {
            sys,
            bounds,
            formula: CnfFormula::new(),
            registry: VariableRegistry::default(),
            filled,
            mdd_count: 0,
        })
    }

    /// Cell values in registration order: letters as declared, then the
    /// padding value.
    fn values(&self) -> Vec<CellValue> {
        let mut out: Vec<CellValue> =
            self.sys.letters().iter().map(|&a| CellValue::Letter(a)).collect();
        out.push(CellValue::Lambda);
        out
    }

    fn cell_lit(&self, var: char, index: usize, value: CellValue) -> Lit {
        self.registry
            .lookup(&VarKey::Cell { var, index, value })
            .expect("cells must be encoded first")
    }

    fn length_lit(&self, var: char, len: usize) -> Lit {
        self.registry
            .lookup(&VarKey::Length { var, len })
            .expect("one-hot lengths must be encoded first")
    }

    /// Truth of "this filled position carries `value`": folded for
    /// letter positions, a cell literal for variable positions.
    pub fn word_literal(&self, cell: Cell, value: CellValue) -> Term {
        match cell {
            Cell::Letter(c) => {
                if value == CellValue::Letter(c) {
                    Term::True
                } else {
                    Term::False
                }
            }
            Cell::Filled(fv) => Term::Lit(self.cell_lit(fv.var, fv.index, value)),
        }
    }

    /// Folded match of filled positions `i`/`j` of equation `eq`.
    /// Out-of-range positions never match.
    fn match_term(&self, eq: usize, i: usize, j: usize) -> Term {
        let (u, v) = &self.filled[eq];
        if i >= u.len() || j >= v.len() {
            return Term::False;
        }
        match (u.cells()[i], v.cells()[j]) {
            (Cell::Letter(a), Cell::Letter(b)) => {
                if a == b {
                    Term::True
                } else {
                    Term::False
                }
            }
            (Cell::Letter(a), Cell::Filled(fv)) | (Cell::Filled(fv), Cell::Letter(a)) => {
                Term::Lit(self.cell_lit(fv.var, fv.index, CellValue::Letter(a)))
            }
            (Cell::Filled(p), Cell::Filled(q)) => {
                if p == q {
                    Term::True
                } else {
                    Term::Lit(
                        self.registry
                            .lookup(&VarKey::Match { eq, i, j })
                            .expect("match variables must be encoded first"),
                    )
                }
            }
        }
    }

    /// Emits a clause, dropping false literals and skipping clauses
    /// that contain a true one. An all-false clause is emitted empty
    /// and makes the formula unsatisfiable.
    fn emit(&mut self, terms: &[Term]) {
        let mut lits = Vec::with_capacity(terms.len());
        for &t in terms {
            match t {
                Term::True => return,
                Term::False => {}
                Term::Lit(l) => lits.push(l),
            }
        }
        self.formula.add_clause(lits);
    }

    /// Clausifies `antecedent -> d_1 | ... | d_k` where every `d` is a
    /// conjunction of literals. Multi-literal conjunctions get a helper
    /// variable carrying both implication directions; a lone conjunct
    /// is inlined without one.
    fn imply_disjunction(&mut self, antecedent: Lit, disjuncts: Vec<Vec<Lit>>) {
        if disjuncts.len() == 1 {
            for &lit in &disjuncts[0] {
                self.formula.add_clause(vec![-antecedent, lit]);
            }
            return;
        }
        let mut clause = vec![-antecedent];
        for d in disjuncts {
            if d.len() == 1 {
                clause.push(d[0]);
            } else {
                let aux = self.registry.fresh_aux(&mut self.formula);
                let mut back = vec![aux];
                for &lit in &d {
                    self.formula.add_clause(vec![-aux, lit]);
                    back.push(-lit);
                }
                self.formula.add_clause(back);
                clause.push(aux);
            }
        }
        self.formula.add_clause(clause);
    }

    /// Registers all cell variables and constrains each cell to exactly
    /// one value with a padding-only suffix.
    pub fn encode_cells(&mut self) -> Result<()> {
        let values = self.values();
        for &x in self.sys.variables() {
            let b = self.bounds.require(x)?;
            for index in 0..b {
                for &value in &values {
                    self.registry.register(&mut self.formula, VarKey::Cell { var: x, index, value });
                }
            }
        }
        for &x in self.sys.variables() {
            let b = self.bounds.require(x)?;
            for index in 0..b {
                let lits: Vec<Lit> =
                    values.iter().map(|&value| self.cell_lit(x, index, value)).collect();
                for (p, &first) in lits.iter().enumerate() {
                    for &second in &lits[p + 1..] {
                        self.formula.add_clause(vec![-first, -second]);
                    }
                }
                self.formula.add_clause(lits);
            }
            for index in 0..b.saturating_sub(1) {
                let cur = self.cell_lit(x, index, CellValue::Lambda);
                let next = self.cell_lit(x, index + 1, CellValue::Lambda);
                self.formula.add_clause(vec![-cur, next]);
            }
        }
        Ok(())
    }

    /// Defines the length variables from the first padding cell. With
    /// the suffix clauses in place, exactly one length holds per model.
    pub fn encode_onehot(&mut self) -> Result<()> {
        for &x in self.sys.variables() {
            let b = self.bounds.require(x)?;
            for len in 0..=b {
                self.registry.register(&mut self.formula, VarKey::Length { var: x, len });
            }
        }
        for &x in self.sys.variables() {
            let b = self.bounds.require(x)?;
            if b == 0 {
                let oh = self.length_lit(x, 0);
                self.formula.add_clause(vec![oh]);
                continue;
            }
            for len in 0..=b {
                let oh = self.length_lit(x, len);
                if len == 0 {
                    let k = self.cell_lit(x, 0, CellValue::Lambda);
                    self.formula.add_clause(vec![-oh, k]);
                    self.formula.add_clause(vec![oh, -k]);
                } else if len == b {
                    let k = self.cell_lit(x, b - 1, CellValue::Lambda);
                    self.formula.add_clause(vec![-oh, -k]);
                    self.formula.add_clause(vec![oh, k]);
                } else {
                    let here = self.cell_lit(x, len, CellValue::Lambda);
                    let before = self.cell_lit(x, len - 1, CellValue::Lambda);
                    self.formula.add_clause(vec![-oh, here]);
                    self.formula.add_clause(vec![-oh, -before]);
                    self.formula.add_clause(vec![oh, -here, before]);
                }
            }
        }
        Ok(())
    }

    /// Defines the match variables of equation `eq` for every pair of
    /// distinct variable cells; all other pairs fold to constants or a
    /// single cell literal and are never registered.
    pub fn encode_match(&mut self, eq: usize) -> Result<()> {
        let (u, v) = self.filled[eq].clone();
        let values = self.values();
        for i in 0..u.len() {
            for j in 0..v.len() {
                let (p, q) = match (u.cells()[i], v.cells()[j]) {
                    (Cell::Filled(p), Cell::Filled(q)) if p != q => (p, q),
                    _ => continue,
                };
                let wm = self.registry.register(&mut self.formula, VarKey::Match { eq, i, j });
                // With exactly-one cells, "wm -> (left = a -> right = a)"
                // over all values pins wm to cell equality.
                for &value in &values {
                    let ku = self.cell_lit(p.var, p.index, value);
                    let kv = self.cell_lit(q.var, q.index, value);
                    self.formula.add_clause(vec![-wm, -ku, kv]);
                    self.formula.add_clause(vec![-ku, -kv, wm]);
                }
            }
        }
        Ok(())
    }

    /// Emits the location grid of equation `eq`: successor, exclusion,
    /// padding-guard, match and predecessor constraints, with the
    /// initial and accepting corners asserted. Anything referencing a
    /// position outside the grid is treated as constant false.
    pub fn encode_grid(&mut self, eq: usize) -> Result<()> {
        let (u, v) = self.filled[eq].clone();
        let n = u.len();
        let m = v.len();

        let mut grid = vec![vec![0 as Lit; m + 1]; n + 1];
        for (i, row) in grid.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = self.registry.register(&mut self.formula, VarKey::Location { eq, i, j });
            }
        }

        let u_pad: Vec<Term> =
            (0..n).map(|i| self.word_literal(u.cells()[i], CellValue::Lambda)).collect();
        let v_pad: Vec<Term> =
            (0..m).map(|j| self.word_literal(v.cells()[j], CellValue::Lambda)).collect();
        let matches: Vec<Vec<Term>> =
            (0..n).map(|i| (0..m).map(|j| self.match_term(eq, i, j)).collect()).collect();

        let loc = |i: isize, j: isize| -> Term {
            if i < 0 || j < 0 || i > n as isize || j > m as isize {
                Term::False
            } else {
                Term::Lit(grid[i as usize][j as usize])
            }
        };
        let upad = |i: isize| -> Term {
            if (0..n as isize).contains(&i) {
                u_pad[i as usize]
            } else {
                Term::False
            }
        };
        let vpad = |j: isize| -> Term {
            if (0..m as isize).contains(&j) {
                v_pad[j as usize]
            } else {
                Term::False
            }
        };
        let mat = |i: isize, j: isize| -> Term {
            if (0..n as isize).contains(&i) && (0..m as isize).contains(&j) {
                matches[i as usize][j as usize]
            } else {
                Term::False
            }
        };

        let mut pending: Vec<Vec<Term>> = Vec::new();
        let mut predecessor_rules: Vec<(Lit, Vec<Vec<Lit>>)> = Vec::new();
        for i in 0..=n as isize {
            for j in 0..=m as isize {
                let here = loc(i, j);
                let not_here = here.negated();
                let at_corner = i == n as isize && j == m as isize;

                // Every active location except the corner needs an
                // active successor.
                if !at_corner {
                    pending.push(vec![not_here, loc(i + 1, j), loc(i, j + 1), loc(i + 1, j + 1)]);
                }

                // One direction at a time.
                for (first, second, third) in [
                    (loc(i, j + 1), loc(i + 1, j + 1), loc(i + 1, j)),
                    (loc(i + 1, j), loc(i + 1, j + 1), loc(i, j + 1)),
                    (loc(i + 1, j + 1), loc(i, j + 1), loc(i + 1, j)),
                ] {
                    pending.push(vec![not_here, first.negated(), second.negated()]);
                    pending.push(vec![not_here, first.negated(), third.negated()]);
                }

                // Sideways moves consume a padding value on the skipped
                // side, and are forced when only that side pads.
                pending.push(vec![not_here, upad(i), loc(i + 1, j).negated()]);
                pending.push(vec![not_here, upad(i).negated(), vpad(j), loc(i + 1, j)]);
                pending.push(vec![not_here, vpad(j), loc(i, j + 1).negated()]);
                pending.push(vec![not_here, upad(i), vpad(j).negated(), loc(i, j + 1)]);

                // Two padding values step diagonally together.
                pending.push(vec![not_here, upad(i).negated(), vpad(j).negated(), loc(i + 1, j + 1)]);

                // A diagonal step implies matching positions.
                pending.push(vec![not_here, loc(i + 1, j + 1).negated(), mat(i, j)]);

                // Every active location except the origin is entered by
                // a diagonal step over a match or a sideways step over a
                // mismatch; the origin is asserted, not entered.
                if !(i == 0 && j == 0) {
                    let mut disjuncts: Vec<Vec<Lit>> = Vec::new();
                    let arms = [
                        (loc(i - 1, j - 1), mat(i - 1, j - 1), true),
                        (loc(i, j - 1), mat(i, j - 1), false),
                        (loc(i - 1, j), mat(i - 1, j), false),
                    ];
                    for (source, matched, wants_match) in arms {
                        let source = match source {
                            Term::Lit(l) => l,
                            _ => continue,
                        };
                        let matched = if wants_match { matched } else { matched.negated() };
                        match matched {
                            Term::True => disjuncts.push(vec![source]),
                            Term::False => {}
                            Term::Lit(w) => disjuncts.push(vec![source, w]),
                        }
                    }
                    if let Term::Lit(l) = here {
                        predecessor_rules.push((l, disjuncts));
                    }
                }

                // Entering the corner of a 2x2 block requires one of
                // its other corners.
                pending.push(vec![loc(i + 1, j + 1).negated(), here, loc(i + 1, j), loc(i, j + 1)]);
            }
        }
        for terms in pending {
            self.emit(&terms);
        }
        for (lit, disjuncts) in predecessor_rules {
            self.imply_disjunction(lit, disjuncts);
        }

        self.formula.assume(grid[0][0]);
        self.formula.assume(grid[n][m]);
        Ok(())
    }

    /// Emits path clauses for a reduced diagram: the root is asserted,
    /// some accepting node must hold, edges propagate forward, edges
    /// leaving the diagram are blocked, every node demands a supporting
    /// edge, and a sole feasible length is forced outright.
    pub fn encode_mdd(&mut self, mdd: &Mdd) -> Result<()> {
        let idx = self.mdd_count;
        self.mdd_count += 1;
        if mdd.is_empty() {
            self.formula.add_clause(Vec::new());
            return Ok(());
        }

        let root = self.registry.register(&mut self.formula, VarKey::Node {
            mdd: idx,
            layer: -1,
            sum: 0,
        });
        let mut nodes: HashMap<(usize, i64), Lit> = HashMap::new();
        for (li, layer) in mdd.layers.iter().enumerate() {
            let b = self.bounds.require(layer.var)?;
            if b != layer.bound {
                return Err(Error::Integrity(format!(
                    "diagram bound {} for {} disagrees with encoding bound {}",
                    layer.bound, layer.var, b
                )));
            }
            for &sum in &layer.sums {
                let lit = self.registry.register(&mut self.formula, VarKey::Node {
                    mdd: idx,
                    layer: li as isize,
                    sum,
                });
                nodes.insert((li, sum), lit);
            }
        }

        self.formula.assume(root);
        if mdd.layers.is_empty() {
            return Ok(());
        }
        let last = mdd.layers.len() - 1;
        let accepting: Vec<Lit> = mdd.accepting.iter().map(|&s| nodes[&(last, s)]).collect();
        self.formula.add_clause(accepting);

        for (li, layer) in mdd.layers.iter().enumerate() {
            let preds: Vec<(i64, Lit)> = mdd
                .sums_before(li)
                .iter()
                .map(|&s| (s, if li == 0 { root } else { nodes[&(li - 1, s)] }))
                .collect();
            for &(s, p) in &preds {
                let mut feasible = Vec::new();
                for k in 0..=layer.bound {
                    let t = s + k as i64 * layer.coeff;
                    let oh = self.length_lit(layer.var, k);
                    if let Some(&q) = nodes.get(&(li, t)) {
                        self.formula.add_clause(vec![-p, -oh, q]);
                        feasible.push(k);
                    } else {
                        self.formula.add_clause(vec![-p, -oh]);
                    }
                }
                if let [only] = feasible[..] {
                    let oh = self.length_lit(layer.var, only);
                    self.formula.add_clause(vec![-p, oh]);
                }
            }
            for &t in &layer.sums {
                let q = nodes[&(li, t)];
                let mut disjuncts = Vec::new();
                for &(s, p) in &preds {
                    for k in 0..=layer.bound {
                        if s + k as i64 * layer.coeff == t {
                            disjuncts.push(vec![p, self.length_lit(layer.var, k)]);
                        }
                    }
                }
                self.imply_disjunction(q, disjuncts);
            }
        }
        Ok(())
    }

    /// Number of grid location variables registered for equation `eq`.
    pub fn grid_variable_count(&self, eq: usize) -> usize {
        self.registry
            .keys()
            .iter()
            .filter(|k| matches!(k, VarKey::Location { eq: e, .. } if *e == eq))
            .count()
    }

    /// All cell variable numbers, the canonical model projection.
    pub fn cell_variables(&self) -> Vec<u32> {
        self.registry
            .keys()
            .iter()
            .enumerate()
            .filter(|(_, k)| matches!(k, VarKey::Cell { .. }))
            .map(|(i, _)| (i + 1) as u32)
            .collect()
    }

    /// Reads the substitution out of a satisfying assignment.
    pub fn decode_model(&self, model: &[bool]) -> Result<Substitution> {
        let values = self.values();
        let mut fa = FilledAssignment::default();
        for &x in self.sys.variables() {
            let b = self.bounds.require(x)?;
            for index in 0..b {
                let value = values
                    .iter()
                    .copied()
                    .find(|&value| model[self.cell_lit(x, index, value) as usize])
                    .ok_or_else(|| {
                        Error::Integrity(format!("cell {}({}) has no value in the model", x, index))
                    })?;
                fa.0.insert(FilledVariable { var: x, index }, value);
            }
        }
        fa.decode(self.sys.variables(), self.bounds)
    }
}

/// Compiles the whole system: shared cells and lengths, one match and
/// grid block per equation, then the given (already reduced) diagrams.
pub fn encode_system<'a>(
    sys: &'a EquationSystem,
    bounds: &'a Bounds,
    mdds: &[Mdd],
) -> Result<Encoder<'a>> {
    let mut enc = Encoder::new(sys, bounds)?;
    enc.encode_cells()?;
    enc.encode_onehot()?;
    for eq in 0..sys.equations.len() {
        enc.encode_match(eq)?;
        enc.encode_grid(eq)?;
    }
    for mdd in mdds {
        enc.encode_mdd(mdd)?;
    }
    Ok(enc)
}
