//! Python view of the solver: parse or generate problems, solve them
//! under fixed or iteratively deepened bounds, enumerate all bounded
//! solutions, verify assignments, and export the CNF encoding.
//!
//! Variables and letters cross the boundary as one-character strings,
//! substitutions as `{variable: word}` dicts, bounds as either a single
//! int (uniform) or a `{variable: bound}` dict.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use weqsat::driver::{
    self, encode_to_texts, enumerate_via_encoding, parse_problem, serialize_problem, SolveMode,
    SolveResult, SolverConfig,
};
use weqsat::model::verify_solution;
use weqsat::{benchgen, Bounds, EquationSystem, Substitution};

fn to_py_err(e: weqsat::Error) -> PyErr {
    match e {
        weqsat::Error::Integrity(_) | weqsat::Error::ResourceLimit(_) | weqsat::Error::Io(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn one_char(s: &str, what: &str) -> PyResult<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(PyValueError::new_err(format!(
            "{} must be a single character, got {:?}",
            what, s
        ))),
    }
}

fn bounds_from_py(sys: &EquationSystem, obj: &Bound<'_, PyAny>) -> PyResult<Bounds> {
    if let Ok(b) = obj.extract::<usize>() {
        return Ok(Bounds::uniform(sys.variables(), b));
    }
    let map: BTreeMap<String, usize> = obj.extract().map_err(|_| {
        PyValueError::new_err("bounds must be an int (uniform) or a {variable: bound} dict")
    })?;
    let mut out = Bounds::new();
    for (k, v) in map {
        out.set(one_char(&k, "variable")?, v);
    }
    Ok(out)
}

fn substitution_to_py(s: &Substitution) -> BTreeMap<String, String> {
    s.iter().map(|(x, w)| (x.to_string(), w.to_string())).collect()
}

fn substitution_from_py(map: &BTreeMap<String, String>) -> PyResult<Substitution> {
    let mut s = Substitution::new();
    for (k, w) in map {
        s.set(one_char(k, "variable")?, w.clone());
    }
    Ok(s)
}

/// One solver run: final status plus the statistics of the last attempt.
#[pyclass(frozen)]
pub struct Outcome {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    substitution: Option<BTreeMap<String, String>>,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    cnf_variables: u32,
    #[pyo3(get)]
    cnf_clauses: usize,
    #[pyo3(get)]
    wall_ms: u64,
    #[pyo3(get)]
    bounds: Option<BTreeMap<String, usize>>,
}

impl From<SolveResult> for Outcome {
    fn from(r: SolveResult) -> Self {
        Outcome {
            status: r.status.to_string(),
            substitution: r.substitution.as_ref().map(substitution_to_py),
            iterations: r.stats.iterations,
            cnf_variables: r.stats.cnf_variables,
            cnf_clauses: r.stats.cnf_clauses,
            wall_ms: r.stats.wall.as_millis() as u64,
            bounds: r
                .stats
                .bounds
                .as_ref()
                .map(|b| b.iter().map(|(x, v)| (x.to_string(), v)).collect()),
        }
    }
}

#[pymethods]
impl Outcome {
    fn is_sat(&self) -> bool {
        self.status == "SAT"
    }

    fn __repr__(&self) -> String {
        match &self.substitution {
            Some(s) => format!("Outcome({}, {:?})", self.status, s),
            None => format!("Outcome({})", self.status),
        }
    }
}

/// A system of word equations with optional per-variable bounds and
/// linear length constraints.
#[pyclass]
pub struct Problem {
    inner: EquationSystem,
}

#[pymethods]
impl Problem {
    /// Parses the line-oriented problem format (Variables, Terminals,
    /// Equation, Bound, LinConstraint directives).
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Problem { inner: parse_problem(text).map_err(to_py_err)? })
    }

    fn serialize(&self) -> String {
        serialize_problem(&self.inner)
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.variables().iter().map(|c| c.to_string()).collect()
    }

    #[getter]
    fn letters(&self) -> Vec<String> {
        self.inner.letters().iter().map(|c| c.to_string()).collect()
    }

    /// Equation sides as plain strings, in declaration order.
    #[getter]
    fn equations(&self) -> Vec<(String, String)> {
        let side = |p: &weqsat::Pattern| p.symbols().iter().map(|s| s.id()).collect::<String>();
        self.inner.equations.iter().map(|e| (side(&e.lhs), side(&e.rhs))).collect()
    }

    /// Bounds declared in the problem itself (may be partial).
    #[getter]
    fn declared_bounds(&self) -> BTreeMap<String, usize> {
        self.inner.bounds.iter().map(|(x, b)| (x.to_string(), b)).collect()
    }

    /// Decides satisfiability with every variable capped at `bounds`.
    /// Bounds given here override the declared ones; together they must
    /// cover every variable.
    #[pyo3(signature = (bounds, preprocessing=true, refinement=true, mdd_guiding=true))]
    fn solve_bounded(
        &self,
        bounds: &Bound<'_, PyAny>,
        preprocessing: bool,
        refinement: bool,
        mdd_guiding: bool,
    ) -> PyResult<Outcome> {
        let cfg = SolverConfig {
            mode: SolveMode::FixedBounds,
            overrides: bounds_from_py(&self.inner, bounds)?,
            preprocessing,
            refinement,
            mdd_guiding,
            ..SolverConfig::default()
        };
        Ok(driver::solve(&self.inner, &cfg).map_err(to_py_err)?.into())
    }

    /// Iterative deepening: bounds grow quadratically until SAT, a cap,
    /// or the iteration limit. Declared bounds and `overrides` freeze
    /// their variables. UNSAT only comes from preprocessing; a bounded
    /// refutation ends in UNKNOWN.
    #[pyo3(signature = (max_iterations=64, ceiling=128, exponential_cap=false,
                        preprocessing=true, refinement=true, mdd_guiding=true, overrides=None))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        max_iterations: usize,
        ceiling: usize,
        exponential_cap: bool,
        preprocessing: bool,
        refinement: bool,
        mdd_guiding: bool,
        overrides: Option<BTreeMap<String, usize>>,
    ) -> PyResult<Outcome> {
        let mut frozen = Bounds::new();
        for (k, v) in overrides.unwrap_or_default() {
            frozen.set(one_char(&k, "variable")?, v);
        }
        let cfg = SolverConfig {
            mode: SolveMode::Iterative,
            max_iterations,
            ceiling,
            exponential_cap,
            preprocessing,
            refinement,
            mdd_guiding,
            overrides: frozen,
            ..SolverConfig::default()
        };
        Ok(driver::solve(&self.inner, &cfg).map_err(to_py_err)?.into())
    }

    /// All solutions within `bounds`, decoded from the SAT encoding.
    #[pyo3(signature = (bounds, limit=10_000))]
    fn enumerate(
        &self,
        bounds: &Bound<'_, PyAny>,
        limit: usize,
    ) -> PyResult<Vec<BTreeMap<String, String>>> {
        let b = bounds_from_py(&self.inner, bounds)?;
        let solutions = enumerate_via_encoding(&self.inner, &b, limit).map_err(to_py_err)?;
        Ok(solutions.iter().map(substitution_to_py).collect())
    }

    /// Checks an assignment against the equations, the constraints, and
    /// (when given) the bounds.
    #[pyo3(signature = (assignment, bounds=None))]
    fn verify(
        &self,
        assignment: BTreeMap<String, String>,
        bounds: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<bool> {
        let s = substitution_from_py(&assignment)?;
        let b = match bounds {
            Some(obj) => bounds_from_py(&self.inner, obj)?,
            None => Bounds::new(),
        };
        verify_solution(&s, &self.inner, &b).map_err(to_py_err)
    }

    /// CNF of the bounded problem as (DIMACS text, variable map text).
    #[pyo3(signature = (bounds, refinement=true, mdd_guiding=true))]
    fn to_dimacs(
        &self,
        bounds: &Bound<'_, PyAny>,
        refinement: bool,
        mdd_guiding: bool,
    ) -> PyResult<(String, String)> {
        let b = bounds_from_py(&self.inner, bounds)?;
        encode_to_texts(&self.inner, &b, refinement, mdd_guiding).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem({} equations, {} variables, {} constraints)",
            self.inner.equations.len(),
            self.inner.variables().len(),
            self.inner.constraints.len()
        )
    }
}

/// Parses the line-oriented problem format.
#[pyfunction]
fn parse(text: &str) -> PyResult<Problem> {
    Problem::parse(text)
}

/// Builds a benchmark instance. Tracks: 1 single long equation,
/// 2 exponential-solution family, 3 the family with spliced
/// sub-equations, 4 many small equations, 5 track 4 plus length
/// constraints. Returns the problem and, when the construction
/// guarantees one, its hidden witness.
#[pyfunction]
#[pyo3(signature = (track, seed=1, variables=None, letters=None, length=None, equations=None,
                    family_n=None, max_replacements=None, unsat=false))]
#[allow(clippy::too_many_arguments)]
fn generate(
    track: u8,
    seed: u64,
    variables: Option<usize>,
    letters: Option<usize>,
    length: Option<usize>,
    equations: Option<usize>,
    family_n: Option<usize>,
    max_replacements: Option<usize>,
    unsat: bool,
) -> PyResult<(Problem, Option<BTreeMap<String, String>>)> {
    let mut spec = benchgen::GenSpec::new(track, seed).map_err(to_py_err)?;
    if let Some(v) = variables {
        spec.variables = v;
    }
    if let Some(v) = letters {
        spec.letters = v;
    }
    if let Some(v) = length {
        spec.length = v;
    }
    if let Some(v) = equations {
        spec.equations = v;
    }
    if let Some(v) = family_n {
        spec.family_n = v;
    }
    if let Some(v) = max_replacements {
        spec.max_replacements = v;
    }
    spec.unsat_mode = unsat;
    let inst = benchgen::generate(&spec).map_err(to_py_err)?;
    let witness = inst.witness.as_ref().map(substitution_to_py);
    Ok((Problem { inner: inst.system }, witness))
}

#[pymodule]
mod weqsat_py {
    #[pymodule_export]
    use super::{generate, parse, Outcome, Problem};
}
