//! Domain types: alphabets, patterns, equations, bounds and the filled
//! forms the encoder and the explicit search operate on.
//!
//! A variable `X` with bound `b` is split into cells `X(0) .. X(b-1)`.
//! Every cell holds one terminal letter or the padding value lambda,
//! and a word shorter than `b` shows up as a lambda-padded suffix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// One position of a pattern: a terminal letter or a variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Symbol {
    Letter(char),
    Variable(char),
}

impl Symbol {
    pub fn id(&self) -> char {
        match *self {
            Symbol::Letter(c) | Symbol::Variable(c) => c,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Symbol::Variable(_))
    }
}

/// A finite sequence of letters and variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Pattern(pub Vec<Symbol>);

impl Pattern {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Pattern(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn is_ground(&self) -> bool {
        self.0.iter().all(|s| !s.is_variable())
    }

    /// Distinct variables in order of first occurrence.
    pub fn variables(&self) -> Vec<char> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in &self.0 {
            if let Symbol::Variable(x) = s {
                if seen.insert(*x) {
                    out.push(*x);
                }
            }
        }
        out
    }

    pub fn count_variable(&self, x: char) -> usize {
        self.0.iter().filter(|s| **s == Symbol::Variable(x)).count()
    }

    pub fn count_letter(&self, a: char) -> usize {
        self.0.iter().filter(|s| **s == Symbol::Letter(a)).count()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.id())?;
        }
        Ok(())
    }
}

/// A single word equation `lhs = rhs`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct WordEquation {
    pub lhs: Pattern,
    pub rhs: Pattern,
}

impl WordEquation {
    pub fn new(lhs: Pattern, rhs: Pattern) -> Self {
        WordEquation { lhs, rhs }
    }

    /// Distinct variables of both sides, left side first.
    pub fn variables(&self) -> Vec<char> {
        let mut out = self.lhs.variables();
        for x in self.rhs.variables() {
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    pub fn is_trivially_true(&self) -> bool {
        self.lhs == self.rhs
    }
}

impl fmt::Display for WordEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Per-variable length bounds. May be partial until a driver fills it.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Bounds(BTreeMap<char, usize>);

impl Bounds {
    pub fn new() -> Self {
        Bounds(BTreeMap::new())
    }

    pub fn uniform(vars: &[char], b: usize) -> Self {
        Bounds(vars.iter().map(|&x| (x, b)).collect())
    }

    pub fn set(&mut self, var: char, b: usize) {
        self.0.insert(var, b);
    }

    pub fn get(&self, var: char) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn require(&self, var: char) -> Result<usize> {
        self.get(var).ok_or(Error::MissingBound(var))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, usize)> + '_ {
        self.0.iter().map(|(&x, &b)| (x, b))
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, b) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}<={}", x, b)?;
            first = false;
        }
        Ok(())
    }
}

/// Linear inequality over variable lengths: sum of coeff * |S(X)| <= bound.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<char, i64>,
    pub bound: i64,
}

impl LinearConstraint {
    pub fn new(coeffs: BTreeMap<char, i64>, bound: i64) -> Self {
        LinearConstraint { coeffs, bound }
    }

    pub fn holds(&self, lengths: &BTreeMap<char, usize>) -> Result<bool> {
        let mut sum = 0i64;
        for (&x, &c) in &self.coeffs {
            let len = *lengths.get(&x).ok_or(Error::Unmapped(x))?;
            sum += c * len as i64;
        }
        Ok(sum <= self.bound)
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, c) in &self.coeffs {
            write!(f, "{} {} ", c, x)?;
        }
        write!(f, "<= {}", self.bound)
    }
}

/// Declared alphabets plus the equations and length constraints over them.
///
/// Declaration order of letters and variables is significant: it fixes
/// iteration order everywhere downstream, including CNF variable
/// numbering and result printing.
#[derive(Clone, PartialEq, Debug)]
pub struct EquationSystem {
    letters: Vec<char>,
    variables: Vec<char>,
    pub equations: Vec<WordEquation>,
    pub constraints: Vec<LinearConstraint>,
    pub bounds: Bounds,
}

impl EquationSystem {
    pub fn new(letters: Vec<char>, variables: Vec<char>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &c in letters.iter().chain(variables.iter()) {
            if !seen.insert(c) {
                return Err(Error::DuplicateDeclaration(c));
            }
        }
        Ok(EquationSystem {
            letters,
            variables,
            equations: Vec::new(),
            constraints: Vec::new(),
            bounds: Bounds::new(),
        })
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn variables(&self) -> &[char] {
        &self.variables
    }

    pub fn is_letter(&self, c: char) -> bool {
        self.letters.contains(&c)
    }

    pub fn is_variable(&self, c: char) -> bool {
        self.variables.contains(&c)
    }

    /// Turns a raw character string into a pattern, rejecting anything
    /// outside the declared alphabets.
    pub fn pattern_from_str(&self, s: &str) -> Result<Pattern> {
        let mut symbols = Vec::with_capacity(s.len());
        for c in s.chars() {
            if self.is_letter(c) {
                symbols.push(Symbol::Letter(c));
            } else if self.is_variable(c) {
                symbols.push(Symbol::Variable(c));
            } else {
                return Err(Error::Undeclared(c));
            }
        }
        Ok(Pattern(symbols))
    }

    pub fn add_equation(&mut self, eq: WordEquation) -> Result<()> {
        for s in eq.lhs.symbols().iter().chain(eq.rhs.symbols()) {
            let ok = match s {
                Symbol::Letter(c) => self.is_letter(*c),
                Symbol::Variable(c) => self.is_variable(*c),
            };
            if !ok {
                return Err(Error::Undeclared(s.id()));
            }
        }
        self.equations.push(eq);
        Ok(())
    }

    pub fn add_constraint(&mut self, c: LinearConstraint) -> Result<()> {
        for &x in c.coeffs.keys() {
            if !self.is_variable(x) {
                return Err(Error::Undeclared(x));
            }
        }
        self.constraints.push(c);
        Ok(())
    }

    /// Convenience for tests and generators: declarations inferred from
    /// the equation, letters and variables each in first-occurrence order.
    pub fn for_equation(eq: WordEquation) -> Self {
        let mut letters = Vec::new();
        let mut variables = Vec::new();
        for s in eq.lhs.symbols().iter().chain(eq.rhs.symbols()) {
            match *s {
                Symbol::Letter(c) if !letters.contains(&c) => letters.push(c),
                Symbol::Variable(c) if !variables.contains(&c) => variables.push(c),
                _ => {}
            }
        }
        let mut sys = EquationSystem::new(letters, variables).expect("fresh declarations");
        sys.equations.push(eq);
        sys
    }
}

/// A mapping from variables to terminal words.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Substitution(BTreeMap<char, String>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn set(&mut self, var: char, word: impl Into<String>) {
        self.0.insert(var, word.into());
    }

    pub fn get(&self, var: char) -> Option<&str> {
        self.0.get(&var).map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &str)> + '_ {
        self.0.iter().map(|(&x, w)| (x, w.as_str()))
    }

    pub fn maps_all(&self, vars: &[char]) -> bool {
        vars.iter().all(|x| self.0.contains_key(x))
    }

    /// Image of a pattern under this substitution.
    pub fn apply(&self, p: &Pattern) -> Result<String> {
        let mut out = String::new();
        for s in p.symbols() {
            match *s {
                Symbol::Letter(c) => out.push(c),
                Symbol::Variable(x) => {
                    out.push_str(self.0.get(&x).ok_or(Error::Unmapped(x))?)
                }
            }
        }
        Ok(out)
    }

    pub fn lengths(&self) -> BTreeMap<char, usize> {
        self.0.iter().map(|(&x, w)| (x, w.chars().count())).collect()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, w) in self.iter() {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {:?}", x, w)?;
            first = false;
        }
        Ok(())
    }
}

/// Checks a substitution against every equation, every declared bound in
/// `bounds`, and every linear constraint of the system.
pub fn verify_solution(
    s: &Substitution,
    sys: &EquationSystem,
    bounds: &Bounds,
) -> Result<bool> {
    for eq in &sys.equations {
        if s.apply(&eq.lhs)? != s.apply(&eq.rhs)? {
            return Ok(false);
        }
    }
    let lengths = s.lengths();
    for (x, b) in bounds.iter() {
        match lengths.get(&x) {
            Some(&len) if len > b => return Ok(false),
            Some(_) => {}
            None => return Err(Error::Unmapped(x)),
        }
    }
    for c in &sys.constraints {
        if !c.holds(&lengths)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Cell `index` of variable `var`, holding one letter or lambda.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FilledVariable {
    pub var: char,
    pub index: usize,
}

/// What a cell can evaluate to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CellValue {
    Letter(char),
    Lambda,
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Letter(c) => write!(f, "{}", c),
            CellValue::Lambda => write!(f, "_"),
        }
    }
}

/// One position of a filled pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Cell {
    Letter(char),
    Filled(FilledVariable),
}

/// A pattern with every variable occurrence expanded to its cell block.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FilledPattern(pub Vec<Cell>);

impl FilledPattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.0
    }
}

/// Expands each variable occurrence of `p` into its `b` cells.
///
/// The filled length is the letter count plus the sum of bounds over
/// variable occurrences (with multiplicity).
pub fn fill_pattern(p: &Pattern, bounds: &Bounds) -> Result<FilledPattern> {
    let mut cells = Vec::new();
    for s in p.symbols() {
        match *s {
            Symbol::Letter(c) => cells.push(Cell::Letter(c)),
            Symbol::Variable(x) => {
                let b = bounds.require(x)?;
                for index in 0..b {
                    cells.push(Cell::Filled(FilledVariable { var: x, index }));
                }
            }
        }
    }
    Ok(FilledPattern(cells))
}

/// Total assignment of cell values to the cells of a set of variables.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FilledAssignment(pub BTreeMap<FilledVariable, CellValue>);

impl FilledAssignment {
    /// Lambda-padded cell assignment induced by a substitution.
    pub fn induced(s: &Substitution, vars: &[char], bounds: &Bounds) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &x in vars {
            let b = bounds.require(x)?;
            let word: Vec<char> = match s.get(x) {
                Some(w) => w.chars().collect(),
                None => return Err(Error::Unmapped(x)),
            };
            if word.len() > b {
                return Err(Error::BoundExceeded { var: x, len: word.len(), bound: b });
            }
            for index in 0..b {
                let value = match word.get(index) {
                    Some(&c) => CellValue::Letter(c),
                    None => CellValue::Lambda,
                };
                map.insert(FilledVariable { var: x, index }, value);
            }
        }
        Ok(FilledAssignment(map))
    }

    /// Reads the word of one variable, skipping lambda cells.
    ///
    /// Lambdas strictly inside a word are tolerated and simply dropped;
    /// the result is the subsequence of letter values in cell order.
    pub fn decode_variable(&self, var: char, bound: usize) -> String {
        let mut out = String::new();
        for index in 0..bound {
            if let Some(CellValue::Letter(c)) = self.0.get(&FilledVariable { var, index }) {
                out.push(*c);
            }
        }
        out
    }

    pub fn decode(&self, vars: &[char], bounds: &Bounds) -> Result<Substitution> {
        let mut s = Substitution::new();
        for &x in vars {
            s.set(x, self.decode_variable(x, bounds.require(x)?));
        }
        Ok(s)
    }
}

/// Key the partial assignment is queried with: a fixed value (letter or
/// lambda) or a variable cell.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Atom {
    Value(CellValue),
    Cell(FilledVariable),
}

impl From<Cell> for Atom {
    fn from(c: Cell) -> Atom {
        match c {
            Cell::Letter(a) => Atom::Value(CellValue::Letter(a)),
            Cell::Filled(fv) => Atom::Cell(fv),
        }
    }
}

/// Partial assignment of cell values, with letters and lambda bound to
/// themselves. Grown along a search path, never overwritten.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct PartialAssignment(pub BTreeMap<FilledVariable, CellValue>);

impl PartialAssignment {
    pub fn lookup(&self, a: Atom) -> Option<CellValue> {
        match a {
            Atom::Value(v) => Some(v),
            Atom::Cell(fv) => self.0.get(&fv).copied(),
        }
    }

    /// True unless both atoms are defined and disagree.
    pub fn compatible(&self, a: Atom, b: Atom) -> bool {
        match (self.lookup(a), self.lookup(b)) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        }
    }

    /// Binds `a` to `v` when undefined; defined atoms are left alone.
    pub fn extend(&self, a: Atom, v: CellValue) -> Self {
        match a {
            Atom::Value(_) => self.clone(),
            Atom::Cell(fv) => {
                if self.0.contains_key(&fv) {
                    self.clone()
                } else {
                    let mut next = self.clone();
                    next.0.insert(fv, v);
                    next
                }
            }
        }
    }
}
