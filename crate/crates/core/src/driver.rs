//! End-to-end pipeline: problem file parsing, preprocessing, bound
//! scheduling, encoding, solving, decoding, verification, and the
//! command line front end.
//!
//! The solver never reports SAT without re-verifying the decoded
//! substitution against the input system, and in iterative mode UNSAT
//! comes only from preprocessing: a refutation at some bound says
//! nothing about larger ones.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::automaton::{self, SearchLimits};
use crate::encoder::encode_system;
use crate::error::{Error, Result};
use crate::linear::{build_mdd, dot_mdd, length_abstraction, reduce_mdd, refine_bounds, Mdd, Relation};
use crate::model::{
    verify_solution, Bounds, EquationSystem, LinearConstraint, Substitution, WordEquation,
};
use crate::preprocess::{preprocess_pipeline, PreprocessConfig, PreprocessVerdict};
use crate::sat::{self, read_external_model, write_dimacs, SatResult};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Sat => "SAT",
            Status::Unsat => "UNSAT",
            Status::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    /// Deepening iterations run; 0 when preprocessing settled it.
    pub iterations: usize,
    /// Bounds of the last attempt, after refinement.
    pub bounds: Option<Bounds>,
    pub cnf_variables: u32,
    pub cnf_clauses: usize,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    /// Present and verified exactly when status is SAT.
    pub substitution: Option<Substitution>,
    /// Declaration order, for stable output.
    pub variables: Vec<char>,
    pub stats: SolveStats,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SolveMode {
    FixedBounds,
    Iterative,
}

/// Pipeline switches. The defaults run everything: preprocessing,
/// bound refinement, diagram guiding, internal SAT search.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub mode: SolveMode,
    /// Upper limit on deepening iterations (iterative mode).
    pub max_iterations: usize,
    /// Frozen per-variable bounds; never touched by the schedule.
    pub overrides: Bounds,
    pub preprocessing: bool,
    pub refinement: bool,
    pub mdd_guiding: bool,
    /// Hard ceiling on the deepening bound cap.
    pub ceiling: usize,
    /// Cap at 2^n (n = longest equation side) instead of the ceiling.
    pub exponential_cap: bool,
    /// Written on every encoding; iterative mode overwrites per iteration.
    pub dimacs_path: Option<PathBuf>,
    pub map_path: Option<PathBuf>,
    pub dot_mdd_path: Option<PathBuf>,
    /// Read a solver model ("s ..."/"v ..." lines) instead of solving.
    pub model_import_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolveMode::Iterative,
            max_iterations: 64,
            overrides: Bounds::new(),
            preprocessing: true,
            refinement: true,
            mdd_guiding: true,
            ceiling: 128,
            exponential_cap: false,
            dimacs_path: None,
            map_path: None,
            dot_mdd_path: None,
            model_import_path: None,
        }
    }
}

impl SolverConfig {
    fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig::default()
    }
}

fn result(
    status: Status,
    substitution: Option<Substitution>,
    sys: &EquationSystem,
    stats: SolveStats,
) -> SolveResult {
    SolveResult { status, substitution, variables: sys.variables().to_vec(), stats }
}

/// Builds the reduced diagrams for one encoding run: per-equation
/// length abstractions when guiding is on, user constraints always
/// (they have no other representation in the CNF).
fn build_diagrams(sys: &EquationSystem, bounds: &Bounds, guiding: bool) -> Result<Vec<Mdd>> {
    let mut mdds = Vec::new();
    if guiding {
        for eq in &sys.equations {
            let a = length_abstraction(eq, sys.variables());
            mdds.push(reduce_mdd(&build_mdd(&a.coeffs, bounds, Relation::Eq(a.target))?));
        }
    }
    for c in &sys.constraints {
        let pairs: Vec<(char, i64)> = c.coeffs.iter().map(|(&x, &v)| (x, v)).collect();
        mdds.push(reduce_mdd(&build_mdd(&pairs, bounds, Relation::Le(c.bound))?));
    }
    Ok(mdds)
}

/// Decides the bounded problem: every variable's substitution length is
/// limited by `bounds`, which must cover all declared variables. SAT
/// and UNSAT are both definitive for the bounded question.
pub fn solve_bounded(
    sys: &EquationSystem,
    bounds: &Bounds,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let start = Instant::now();
    let mut stats =
        SolveStats { iterations: 1, bounds: Some(bounds.clone()), ..SolveStats::default() };

    let mut residual: Option<EquationSystem> = None;
    if cfg.preprocessing {
        match preprocess_pipeline(sys, Some(bounds), &cfg.preprocess_config())? {
            PreprocessVerdict::Sat(w) => {
                // The witness ignores linear constraints, so it must be
                // checked before it settles anything.
                if verify_solution(&w, sys, bounds)? {
                    stats.wall = start.elapsed();
                    return Ok(result(Status::Sat, Some(w), sys, stats));
                }
                // Constraints rejected the witness: encode the input.
            }
            PreprocessVerdict::Unsat(_) => {
                stats.wall = start.elapsed();
                return Ok(result(Status::Unsat, None, sys, stats));
            }
            PreprocessVerdict::Unknown(r) => residual = Some(r),
        }
    }
    let target: &EquationSystem = residual.as_ref().unwrap_or(sys);

    let mut eff = bounds.clone();
    if cfg.refinement {
        // Any solution within the input bounds also satisfies every
        // equation's length abstraction, so tightening is lossless.
        for eq in &target.equations {
            let a = length_abstraction(eq, target.variables());
            eff = refine_bounds(&a, &eff)?;
        }
    }

    let mdds = build_diagrams(target, &eff, cfg.mdd_guiding)?;
    let enc = encode_system(target, &eff, &mdds)?;
    stats.bounds = Some(eff.clone());
    stats.cnf_variables = enc.formula.num_vars();
    stats.cnf_clauses = enc.formula.clauses().len();

    if let Some(p) = &cfg.dimacs_path {
        fs::write(p, write_dimacs(&enc.formula, &["bounded word equation system"]))?;
    }
    if let Some(p) = &cfg.map_path {
        fs::write(p, enc.registry.map_text())?;
    }
    if let Some(p) = &cfg.dot_mdd_path {
        let mut out = String::new();
        for (i, m) in mdds.iter().enumerate() {
            out.push_str(&dot_mdd(m, &format!("mdd{}", i)));
        }
        fs::write(p, out)?;
    }

    let outcome = match &cfg.model_import_path {
        Some(p) => read_external_model(&fs::read_to_string(p)?, &enc.formula)?,
        None => sat::solve(&enc.formula)?,
    };
    stats.wall = start.elapsed();
    match outcome {
        SatResult::Sat(model) => {
            let s = enc.decode_model(&model)?;
            if !verify_solution(&s, sys, bounds)? {
                return Err(Error::Integrity(format!(
                    "decoded substitution fails verification: {}",
                    s
                )));
            }
            Ok(result(Status::Sat, Some(s), sys, stats))
        }
        SatResult::Unsat => Ok(result(Status::Unsat, None, sys, stats)),
    }
}

fn exponential_of(n: usize) -> usize {
    if n as u32 >= usize::BITS {
        usize::MAX
    } else {
        1usize << n
    }
}

/// Deepens uniform bounds i^2 for i = 1, 2, ... until SAT, a cap, or the
/// iteration limit. Structural preprocessing runs once up front and its
/// verdicts are definitive; bounded UNSAT inside the loop is not, so the
/// loop ends in UNKNOWN. Overridden variables keep their bound in every
/// iteration.
pub fn solve_iterative(sys: &EquationSystem, cfg: &SolverConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let declared: Vec<char> = sys.variables().to_vec();

    let mut base: Option<EquationSystem> = None;
    if cfg.preprocessing {
        match preprocess_pipeline(sys, None, &cfg.preprocess_config())? {
            PreprocessVerdict::Sat(w) => {
                // Verify at the witness's own lengths, except where an
                // override demands less.
                let lens = w.lengths();
                let mut vb = Bounds::new();
                let mut fits = true;
                for &x in &declared {
                    let need = lens.get(&x).copied().unwrap_or(0);
                    match cfg.overrides.get(x) {
                        Some(o) if need > o => {
                            fits = false;
                            break;
                        }
                        Some(o) => vb.set(x, o),
                        None => vb.set(x, need),
                    }
                }
                if fits && verify_solution(&w, sys, &vb)? {
                    let stats = SolveStats {
                        iterations: 0,
                        bounds: None,
                        wall: start.elapsed(),
                        ..SolveStats::default()
                    };
                    return Ok(result(Status::Sat, Some(w), sys, stats));
                }
            }
            PreprocessVerdict::Unsat(_) => {
                let stats = SolveStats {
                    iterations: 0,
                    bounds: None,
                    wall: start.elapsed(),
                    ..SolveStats::default()
                };
                return Ok(result(Status::Unsat, None, sys, stats));
            }
            PreprocessVerdict::Unknown(r) => base = Some(r),
        }
    }
    let work: &EquationSystem = base.as_ref().unwrap_or(sys);

    let longest_side =
        work.equations.iter().map(|e| e.lhs.len().max(e.rhs.len())).max().unwrap_or(1);
    let cap = if cfg.exponential_cap {
        exponential_of(longest_side)
    } else {
        exponential_of(longest_side).min(cfg.ceiling)
    }
    .max(1);
    let all_frozen = declared.iter().all(|&x| cfg.overrides.get(x).is_some());

    let mut last = SolveStats::default();
    for i in 1..=cfg.max_iterations {
        let step = (i * i).min(cap);
        let mut bounds = Bounds::new();
        for &x in &declared {
            bounds.set(x, cfg.overrides.get(x).unwrap_or(step));
        }
        let r = solve_bounded(work, &bounds, cfg)?;
        last = r.stats.clone();
        last.iterations = i;
        last.wall = start.elapsed();
        match r.status {
            Status::Sat => {
                let s = r.substitution.expect("SAT carries a substitution");
                if !verify_solution(&s, sys, &bounds)? {
                    return Err(Error::Integrity(format!(
                        "iterative witness fails verification: {}",
                        s
                    )));
                }
                return Ok(result(Status::Sat, Some(s), sys, last));
            }
            // A bounded refutation cannot settle the unbounded question;
            // once the cap is reached nothing new can be tried.
            Status::Unsat | Status::Unknown => {
                if step == cap || all_frozen {
                    return Ok(result(Status::Unknown, None, sys, last));
                }
            }
        }
    }
    last.wall = start.elapsed();
    Ok(result(Status::Unknown, None, sys, last))
}

/// Mode dispatch. Fixed-bounds mode takes its bounds from the overrides
/// and the system's own `Bound` declarations (overrides win) and demands
/// a bound for every variable; iterative mode treats the system bounds
/// as overrides too.
pub fn solve(sys: &EquationSystem, cfg: &SolverConfig) -> Result<SolveResult> {
    match cfg.mode {
        SolveMode::FixedBounds => {
            let mut b = Bounds::new();
            for &x in sys.variables() {
                let bx = cfg
                    .overrides
                    .get(x)
                    .or_else(|| sys.bounds.get(x))
                    .ok_or(Error::MissingBound(x))?;
                b.set(x, bx);
            }
            solve_bounded(sys, &b, cfg)
        }
        SolveMode::Iterative => {
            let mut cfg = cfg.clone();
            for (x, bx) in sys.bounds.iter() {
                if cfg.overrides.get(x).is_none() {
                    cfg.overrides.set(x, bx);
                }
            }
            solve_iterative(sys, &cfg)
        }
    }
}

/// Every bounded solution, obtained by enumerating the encoding's models
/// projected to the cell variables and decoding each one. Ground truth
/// for the oracle-agreement tests.
pub fn enumerate_via_encoding(
    sys: &EquationSystem,
    bounds: &Bounds,
    limit: usize,
) -> Result<BTreeSet<Substitution>> {
    let mdds = build_diagrams(sys, bounds, true)?;
    let enc = encode_system(sys, bounds, &mdds)?;
    let cells = enc.cell_variables();
    let models = sat::enumerate_models(&enc.formula, &cells, limit)?;
    let mut out = BTreeSet::new();
    for projected in &models {
        let mut total = vec![false; enc.formula.num_vars() as usize + 1];
        for &l in projected {
            total[l.unsigned_abs() as usize] = l > 0;
        }
        out.insert(enc.decode_model(&total)?);
    }
    Ok(out)
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn parse_brace_list(line: usize, rest: &str) -> Result<Vec<char>> {
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| parse_err(line, 1, "expected a {...} symbol list"))?;
    let mut out = Vec::new();
    for c in inner.chars() {
        if c.is_whitespace() {
            return Err(parse_err(line, 1, "symbol lists do not contain whitespace"));
        }
        out.push(c);
    }
    Ok(out)
}

/// Reads the line-oriented problem format:
///
/// ```text
/// Variables {XY}
/// Terminals {ab}
/// Equation: XabY = aXYb
/// Bound: X 8
/// LinConstraint: 2 X -1 Y <= 3
/// ```
///
/// `#` starts a comment. Sides of an equation are whitespace-delimited
/// single tokens around `=`; an absent token is the empty side. All
/// symbols must be declared; declarations may appear anywhere.
pub fn parse_problem(text: &str) -> Result<EquationSystem> {
    let mut letters = Vec::new();
    let mut variables = Vec::new();
    // Declarations first, so directive order does not matter.
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix("Variables") {
            variables.extend(parse_brace_list(lineno, rest)?);
        } else if let Some(rest) = line.strip_prefix("Terminals") {
            letters.extend(parse_brace_list(lineno, rest)?);
        }
    }
    let mut sys = EquationSystem::new(letters, variables)?;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let lineno = idx + 1;
        let col = raw.find(':').map(|p| p + 2).unwrap_or(1);
        if line.is_empty()
            || line.starts_with("Variables")
            || line.starts_with("Terminals")
        {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Equation:") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let seps = toks.iter().filter(|t| **t == "=").count();
            if seps != 1 {
                return Err(parse_err(lineno, col, "expected exactly one '=' between sides"));
            }
            let pos = toks.iter().position(|t| *t == "=").unwrap();
            if pos > 1 || toks.len() - pos - 1 > 1 {
                return Err(parse_err(lineno, col, "each side must be a single token"));
            }
            let lhs = if pos == 1 { toks[0] } else { "" };
            let rhs = if toks.len() - pos - 1 == 1 { toks[pos + 1] } else { "" };
            let eq = WordEquation::new(sys.pattern_from_str(lhs)?, sys.pattern_from_str(rhs)?);
            sys.add_equation(eq)?;
        } else if let Some(rest) = line.strip_prefix("Bound:") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let [var, num] = toks[..] else {
                return Err(parse_err(lineno, col, "expected 'Bound: <variable> <number>'"));
            };
            let mut chars = var.chars();
            let (Some(x), None) = (chars.next(), chars.next()) else {
                return Err(parse_err(lineno, col, "variable names are single characters"));
            };
            if !sys.is_variable(x) {
                return Err(parse_err(lineno, col, format!("{:?} is not a declared variable", x)));
            }
            let b: usize = num
                .parse()
                .map_err(|_| parse_err(lineno, col, format!("invalid bound {:?}", num)))?;
            sys.bounds.set(x, b);
        } else if let Some(rest) = line.strip_prefix("LinConstraint:") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let mut coeffs = std::collections::BTreeMap::new();
            let mut i = 0;
            while i < toks.len() && toks[i] != "<=" {
                let c: i64 = toks[i].parse().map_err(|_| {
                    parse_err(lineno, col, format!("expected an integer coefficient, found {:?}", toks[i]))
                })?;
                let Some(vt) = toks.get(i + 1) else {
                    return Err(parse_err(lineno, col, "coefficient without a variable"));
                };
                let mut chars = vt.chars();
                let (Some(x), None) = (chars.next(), chars.next()) else {
                    return Err(parse_err(lineno, col, "variable names are single characters"));
                };
                if !sys.is_variable(x) {
                    return Err(parse_err(
                        lineno,
                        col,
                        format!("{:?} is not a declared variable", x),
                    ));
                }
                *coeffs.entry(x).or_insert(0) += c;
                i += 2;
            }
            if toks.get(i).copied() != Some("<=") {
                return Err(parse_err(lineno, col, "expected '<=' before the right-hand side"));
            }
            let Some(bt) = toks.get(i + 1) else {
                return Err(parse_err(lineno, col, "missing right-hand side"));
            };
            let bound: i64 = bt
                .parse()
                .map_err(|_| parse_err(lineno, col, format!("invalid right-hand side {:?}", bt)))?;
            if toks.len() != i + 2 {
                return Err(parse_err(lineno, col, "trailing tokens after the right-hand side"));
            }
            sys.add_constraint(LinearConstraint::new(coeffs, bound))?;
        } else {
            return Err(parse_err(lineno, 1, format!("unknown directive {:?}", line)));
        }
    }
    Ok(sys)
}

/// Inverse of `parse_problem`, deterministic: declarations in order,
/// then equations, bounds (sorted), constraints.
pub fn serialize_problem(sys: &EquationSystem) -> String {
    let side = |p: &crate::model::Pattern| -> String { p.symbols().iter().map(|s| s.id()).collect() };
    let mut out = String::new();
    out.push_str(&format!("Variables {{{}}}\n", sys.variables().iter().collect::<String>()));
    out.push_str(&format!("Terminals {{{}}}\n", sys.letters().iter().collect::<String>()));
    for eq in &sys.equations {
        out.push_str(&format!("Equation: {} = {}\n", side(&eq.lhs), side(&eq.rhs)));
    }
    for (x, b) in sys.bounds.iter() {
        out.push_str(&format!("Bound: {} {}\n", x, b));
    }
    for c in &sys.constraints {
        out.push_str("LinConstraint:");
        for (&x, &v) in &c.coeffs {
            out.push_str(&format!(" {} {}", v, x));
        }
        out.push_str(&format!(" <= {}\n", c.bound));
    }
    out
}

/// First line is the status; SAT adds one line per variable in
/// declaration order, the empty word printing as nothing after "= ".
pub fn format_result(r: &SolveResult) -> String {
    let mut out = format!("{}\n", r.status);
    if r.status == Status::Sat {
        let s = r.substitution.as_ref().expect("SAT carries a substitution");
        for &x in &r.variables {
            out.push_str(&format!("{} = {}\n", x, s.get(x).unwrap_or("")));
        }
    }
    out
}

/// One diagnostics line for the stderr stream.
pub fn format_stats(r: &SolveResult) -> String {
    let bounds = match &r.stats.bounds {
        Some(b) => b.iter().map(|(x, v)| format!("{}={}", x, v)).collect::<Vec<_>>().join(","),
        None => "-".into(),
    };
    format!(
        "c status={} iterations={} bounds={} cnf_vars={} cnf_clauses={} wall_ms={:.1}",
        r.status,
        r.stats.iterations,
        bounds,
        r.stats.cnf_variables,
        r.stats.cnf_clauses,
        r.stats.wall.as_secs_f64() * 1000.0
    )
}

#[derive(Parser)]
#[command(
    name = "weqsat",
    about = "Bounded word equation solver over a CNF backend",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem file (iterative deepening by default)
    Solve(SolveArgs),
    /// Explicit-state reference search, optionally enumerating solutions
    Oracle(OracleArgs),
    /// Write the CNF encoding and variable map, without solving
    Encode(EncodeArgs),
    /// Generate benchmark instances
    Generate(GenerateArgs),
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    /// Solve once at fixed bounds instead of deepening
    #[arg(long)]
    fixed: bool,
    /// Uniform bound for variables without a Bound line (fixed mode)
    #[arg(long, requires = "fixed")]
    bound: Option<usize>,
    #[arg(long, default_value_t = 64)]
    max_iterations: usize,
    /// Hard ceiling on the deepening bound
    #[arg(long, default_value_t = 128)]
    ceiling: usize,
    /// Cap bounds at 2^n, n the longest equation side, instead of the ceiling
    #[arg(long)]
    exponential_cap: bool,
    #[arg(long)]
    no_preprocess: bool,
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    no_mdd: bool,
    /// Write the last encoding in DIMACS format
    #[arg(long)]
    dimacs: Option<PathBuf>,
    /// Write the variable map of the last encoding
    #[arg(long)]
    map: Option<PathBuf>,
    /// Write the reduced length diagrams in DOT format
    #[arg(long)]
    dot_mdd: Option<PathBuf>,
    /// Read an external solver model instead of solving internally
    #[arg(long)]
    import_model: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    file: PathBuf,
    /// List every bounded solution instead of the bare verdict
    #[arg(long)]
    enumerate: bool,
    /// Uniform bound for variables without a Bound line
    #[arg(long)]
    bound: Option<usize>,
    #[arg(long, default_value_t = 2_000_000)]
    max_states: usize,
    /// Write the reachable state graph in DOT format (single equation)
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    file: PathBuf,
    /// DIMACS output path
    #[arg(short, long)]
    output: PathBuf,
    /// Variable map output path
    #[arg(long)]
    map: Option<PathBuf>,
    /// Uniform bound for variables without a Bound line
    #[arg(long)]
    bound: Option<usize>,
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    no_mdd: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// Benchmark track (1-5)
    #[arg(long)]
    track: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Instances to generate (seeds seed, seed+1, ...)
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    variables: Option<usize>,
    #[arg(long)]
    letters: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    equations: Option<usize>,
    /// Family index n for tracks 2 and 3
    #[arg(long)]
    family_n: Option<usize>,
    /// Replacement budget for track 3
    #[arg(long)]
    max_replacements: Option<usize>,
    /// Track 5: emit a contradictory constraint instead of satisfiable ones
    #[arg(long)]
    unsat: bool,
}

fn read_system(path: &PathBuf) -> Result<EquationSystem> {
    parse_problem(&fs::read_to_string(path)?)
}

fn fill_uniform(sys: &EquationSystem, fill: Option<usize>) -> Result<Bounds> {
    let mut b = sys.bounds.clone();
    for &x in sys.variables() {
        if b.get(x).is_none() {
            b.set(x, fill.ok_or(Error::MissingBound(x))?);
        }
    }
    Ok(b)
}

fn cli_solve(a: SolveArgs) -> Result<i32> {
    let sys = read_system(&a.file)?;
    let mut cfg = SolverConfig {
        mode: if a.fixed { SolveMode::FixedBounds } else { SolveMode::Iterative },
        max_iterations: a.max_iterations,
        ceiling: a.ceiling,
        exponential_cap: a.exponential_cap,
        preprocessing: !a.no_preprocess,
        refinement: !a.no_refine,
        mdd_guiding: !a.no_mdd,
        dimacs_path: a.dimacs,
        map_path: a.map,
        dot_mdd_path: a.dot_mdd,
        model_import_path: a.import_model,
        ..SolverConfig::default()
    };
    if a.fixed {
        cfg.overrides = fill_uniform(&sys, a.bound)?;
    }
    let r = solve(&sys, &cfg)?;
    print!("{}", format_result(&r));
    eprintln!("{}", format_stats(&r));
    Ok(match r.status {
        Status::Sat => 10,
        Status::Unsat => 20,
        Status::Unknown => 0,
    })
}

fn cli_oracle(a: OracleArgs) -> Result<i32> {
    let sys = read_system(&a.file)?;
    let bounds = fill_uniform(&sys, a.bound)?;
    let limits = SearchLimits { max_states: a.max_states };
    if let Some(p) = &a.dot {
        let [eq] = &sys.equations[..] else {
            return Err(Error::Integrity(
                "the state graph dump needs exactly one equation".into(),
            ));
        };
        fs::write(p, automaton::dot_dump(eq, &bounds, sys.letters(), &limits)?)?;
    }
    if a.enumerate {
        let solutions = automaton::brute_force_solve(&sys, &bounds, &limits)?;
        if solutions.is_empty() {
            println!("UNSAT");
            return Ok(20);
        }
        println!("SAT");
        for s in &solutions {
            let line: Vec<String> = sys
                .variables()
                .iter()
                .map(|&x| format!("{} = {}", x, s.get(x).unwrap_or("")))
                .collect();
            println!("{}", line.join(", "));
        }
        return Ok(10);
    }
    let sat = if sys.equations.len() == 1 && sys.constraints.is_empty() {
        automaton::reachable_search(&sys.equations[0], &bounds, sys.letters(), &limits)?
    } else {
        !automaton::brute_force_solve(&sys, &bounds, &limits)?.is_empty()
    };
    println!("{}", if sat { "SAT" } else { "UNSAT" });
    Ok(if sat { 10 } else { 20 })
}

/// Encodes the system at the given bounds, returning the DIMACS text
/// and the variable map. Same refinement and guiding steps as solving,
/// but stops before the search.
pub fn encode_to_texts(
    sys: &EquationSystem,
    bounds: &Bounds,
    refinement: bool,
    guiding: bool,
) -> Result<(String, String)> {
    let mut bounds = bounds.clone();
    if refinement {
        for eq in &sys.equations {
            let abstraction = length_abstraction(eq, sys.variables());
            bounds = refine_bounds(&abstraction, &bounds)?;
        }
    }
    let mdds = build_diagrams(sys, &bounds, guiding)?;
    let enc = encode_system(sys, &bounds, &mdds)?;
    let cnf = write_dimacs(&enc.formula, &["bounded word equation system"]);
    Ok((cnf, enc.registry.map_text()))
}

fn cli_encode(a: EncodeArgs) -> Result<i32> {
    let sys = read_system(&a.file)?;
    let bounds = fill_uniform(&sys, a.bound)?;
    let (cnf, map) = encode_to_texts(&sys, &bounds, !a.no_refine, !a.no_mdd)?;
    fs::write(&a.output, &cnf)?;
    if let Some(p) = &a.map {
        fs::write(p, map)?;
    }
    let header = cnf.lines().find(|l| l.starts_with("p cnf")).unwrap_or("p cnf 0 0");
    let mut counts = header.split_whitespace().skip(2);
    let vars = counts.next().unwrap_or("0");
    let clauses = counts.next().unwrap_or("0");
    eprintln!("c encoded {} variables, {} clauses", vars, clauses);
    Ok(0)
}

fn cli_generate(a: GenerateArgs) -> Result<i32> {
    use crate::benchgen::{generate, GenSpec};
    fs::create_dir_all(&a.out_dir)?;
    for k in 0..a.count {
        let mut spec = GenSpec::new(a.track, a.seed + k)?;
        if let Some(v) = a.variables {
            spec.variables = v;
        }
        if let Some(v) = a.letters {
            spec.letters = v;
        }
        if let Some(v) = a.length {
            spec.length = v;
        }
        if let Some(v) = a.equations {
            spec.equations = v;
        }
        if let Some(v) = a.family_n {
            spec.family_n = v;
        }
        if let Some(v) = a.max_replacements {
            spec.max_replacements = v;
        }
        spec.unsat_mode = a.unsat;
        let inst = generate(&spec)?;
        let path = a.out_dir.join(format!("track{}-seed{}.weq", a.track, a.seed + k));
        fs::write(&path, serialize_problem(&inst.system))?;
        println!("{}", path.display());
    }
    Ok(0)
}

/// Entry point behind `main`; returns the process exit code. 10 = SAT,
/// 20 = UNSAT, 0 = UNKNOWN or plain success, 1 = usage or input errors.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                eprint!("{}", e);
                return 1;
            }
            print!("{}", e);
            return 0;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Solve(a) => cli_solve(a),
        Cmd::Oracle(a) => cli_oracle(a),
        Cmd::Encode(a) => cli_encode(a),
        Cmd::Generate(a) => cli_generate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pattern, Symbol};

    fn sym(c: char) -> Symbol {
        if c.is_ascii_uppercase() {
            Symbol::Variable(c)
        } else {
            Symbol::Letter(c)
        }
    }

    fn weq(l: &str, r: &str) -> WordEquation {
        WordEquation::new(
            Pattern(l.chars().map(sym).collect()),
            Pattern(r.chars().map(sym).collect()),
        )
    }

    fn sys_of(l: &str, r: &str) -> EquationSystem {
        EquationSystem::for_equation(weq(l, r))
    }

    const SAMPLE: &str = "\
# two-variable toy problem
Variables {XY}
Terminals {ab}
Equation: XabY = aXYb
Bound: X 3
Bound: Y 2
LinConstraint: 1 X -1 Y <= 2
";

    #[test]
    fn parse_sample() {
        let sys = parse_problem(SAMPLE).unwrap();
        assert_eq!(sys.variables(), &['X', 'Y']);
        assert_eq!(sys.letters(), &['a', 'b']);
        assert_eq!(sys.equations.len(), 1);
        assert_eq!(sys.bounds.get('X'), Some(3));
        assert_eq!(sys.bounds.get('Y'), Some(2));
        assert_eq!(sys.constraints.len(), 1);
        assert_eq!(sys.constraints[0].bound, 2);
        assert_eq!(sys.constraints[0].coeffs.get(&'X'), Some(&1));
        assert_eq!(sys.constraints[0].coeffs.get(&'Y'), Some(&-1));
    }

    #[test]
    fn serialize_round_trips() {
        let sys = parse_problem(SAMPLE).unwrap();
        let text = serialize_problem(&sys);
        let again = parse_problem(&text).unwrap();
        assert_eq!(serialize_problem(&again), text);
        assert_eq!(again.equations, sys.equations);
        assert_eq!(again.constraints, sys.constraints);
    }

    #[test]
    fn parse_empty_sides() {
        let sys = parse_problem("Variables {X}\nTerminals {a}\nEquation: X = \n").unwrap();
        assert!(sys.equations[0].rhs.is_empty());
        let sys = parse_problem("Variables {X}\nTerminals {a}\nEquation: = aX\n").unwrap();
        assert!(sys.equations[0].lhs.is_empty());
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(matches!(
            parse_problem("Variables {X}\nTerminals {a}\nEquation: X=a\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_problem("Variables {X}\nTerminals {a}\nEquation: X = b\n"),
            Err(Error::Undeclared('b'))
        ));
        assert!(matches!(
            parse_problem("Variables {X}\nTerminals {aX}\n"),
            Err(Error::DuplicateDeclaration('X'))
        ));
        assert!(matches!(
            parse_problem("Variables {X}\nTerminals {a}\nBound: Y 3\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_problem("Frobnicate: yes\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_problem("Variables {X}\nTerminals {a}\nLinConstraint: 1 X 2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "\n# intro\nVariables {X} # trailing\nTerminals {a}\nEquation: X = a\n\n";
        let sys = parse_problem(text).unwrap();
        assert_eq!(sys.equations.len(), 1);
    }

    #[test]
    fn bounded_solving_matches_the_worked_example() {
        let sys = sys_of("aZXb", "aXaY");
        let cfg = SolverConfig::default();
        let r = solve_bounded(&sys, &Bounds::uniform(&['Z', 'X', 'Y'], 1), &cfg).unwrap();
        assert_eq!(r.status, Status::Sat);
        let s = r.substitution.unwrap();
        assert_eq!(s.get('Z'), Some("a"));
        assert_eq!(s.get('Y'), Some("b"));

        let r0 = solve_bounded(&sys, &Bounds::uniform(&['Z', 'X', 'Y'], 0), &cfg).unwrap();
        assert_eq!(r0.status, Status::Unsat);
    }

    #[test]
    fn bounded_solving_without_any_toggles() {
        let sys = sys_of("aZXb", "aXaY");
        let cfg = SolverConfig {
            preprocessing: false,
            refinement: false,
            mdd_guiding: false,
            ..SolverConfig::default()
        };
        let r = solve_bounded(&sys, &Bounds::uniform(&['Z', 'X', 'Y'], 1), &cfg).unwrap();
        assert_eq!(r.status, Status::Sat);
    }

    #[test]
    fn iterative_examples() {
        let cfg = SolverConfig::default();

        let r = solve_iterative(&sys_of("aZXb", "aXaY"), &cfg).unwrap();
        assert_eq!(r.status, Status::Sat);
        assert_eq!(r.stats.iterations, 1);

        let r = solve_iterative(&sys_of("abX", "aabY"), &cfg).unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert_eq!(r.stats.iterations, 0);

        let r = solve_iterative(&sys_of("Xa", "aX"), &cfg).unwrap();
        assert_eq!(r.status, Status::Sat);
        assert_eq!(r.stats.iterations, 1);
    }

    #[test]
    fn iterative_returns_unknown_at_the_cap() {
        // Solving needs |X| = 2 with X starting in a and ending in b,
        // and the one candidate fails, but no structural check sees it:
        // every bound is tried up to the cap and the loop gives up.
        let sys = sys_of("XX", "aXb");
        let cfg = SolverConfig { ceiling: 4, ..SolverConfig::default() };
        let r = solve_iterative(&sys, &cfg).unwrap();
        assert_eq!(r.status, Status::Unknown);
        assert!(r.stats.iterations >= 2);
    }

    #[test]
    fn overrides_freeze_bounds() {
        // X frozen at 0 forces the empty word; aX = Xa stays solvable,
        // X = ab becomes hopeless and ends UNKNOWN immediately.
        let mut overrides = Bounds::new();
        overrides.set('X', 0);
        let cfg = SolverConfig { overrides, ..SolverConfig::default() };
        let r = solve_iterative(&sys_of("aX", "Xa"), &cfg).unwrap();
        assert_eq!(r.status, Status::Sat);
        assert_eq!(r.substitution.unwrap().get('X'), Some(""));

        let sys = sys_of("X", "ab");
        let cfg2 = SolverConfig { preprocessing: false, ..cfg.clone() };
        let r = solve_iterative(&sys, &cfg2).unwrap();
        assert_eq!(r.status, Status::Unknown);
        assert_eq!(r.stats.iterations, 1);
    }

    #[test]
    fn preprocessing_witness_is_rechecked_against_constraints() {
        // Substitution reasoning alone would answer SAT with X = aab,
        // but the length constraint |X| <= 2 forbids it.
        let mut sys = EquationSystem::new(vec!['a', 'b'], vec!['X']).unwrap();
        sys.add_equation(weq("X", "aab")).unwrap();
        sys.add_constraint(LinearConstraint::new([('X', 1)].into(), 2)).unwrap();
        let r = solve_bounded(&sys, &Bounds::uniform(&['X'], 3), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Unsat);

        // With a loose constraint the witness passes untouched.
        let mut loose = EquationSystem::new(vec!['a', 'b'], vec!['X']).unwrap();
        loose.add_equation(weq("X", "aab")).unwrap();
        loose.add_constraint(LinearConstraint::new([('X', 1)].into(), 5)).unwrap();
        let r = solve_bounded(&loose, &Bounds::uniform(&['X'], 3), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Sat);
    }

    #[test]
    fn constraints_prune_solutions() {
        // Xa = aX has solutions of every length; the constraint pins X
        // to at most one letter.
        let mut sys = EquationSystem::new(vec!['a'], vec!['X']).unwrap();
        sys.add_equation(weq("Xa", "aX")).unwrap();
        sys.add_constraint(LinearConstraint::new([('X', 1)].into(), 1)).unwrap();
        let all = enumerate_via_encoding(&sys, &Bounds::uniform(&['X'], 3), 100).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn format_result_shapes() {
        let sys = sys_of("aZXb", "aXaY");
        let mut s = Substitution::new();
        s.set('Z', "a");
        s.set('X', "");
        s.set('Y', "b");
        let r = result(
            Status::Sat,
            Some(s),
            &sys,
            SolveStats::default(),
        );
        assert_eq!(format_result(&r), "SAT\nZ = a\nX = \nY = b\n");

        let r = result(Status::Unsat, None, &sys, SolveStats::default());
        assert_eq!(format_result(&r), "UNSAT\n");
        let r = result(Status::Unknown, None, &sys, SolveStats::default());
        assert_eq!(format_result(&r), "UNKNOWN\n");
    }

    #[test]
    fn cli_end_to_end() {
        let dir = std::env::temp_dir().join(format!("weqsat-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let file = dir.join("sample.weq");
        fs::write(
            &file,
            "Variables {ZXY}\nTerminals {ab}\nEquation: aZXb = aXaY\nBound: Z 1\nBound: X 1\nBound: Y 1\n",
        )
        .unwrap();
        let run = |extra: &[&str]| -> i32 {
            let mut argv = vec!["weqsat".to_string()];
            argv.extend(extra.iter().map(|s| s.to_string()));
            run_cli(argv)
        };
        assert_eq!(run(&["solve", file.to_str().unwrap()]), 10);
        assert_eq!(run(&["solve", file.to_str().unwrap(), "--fixed"]), 10);
        assert_eq!(run(&["oracle", file.to_str().unwrap(), "--enumerate"]), 10);

        let unsat = dir.join("unsat.weq");
        fs::write(&unsat, "Variables {X}\nTerminals {ab}\nEquation: abX = aabY\n").unwrap();
        // Undeclared Y: parse error.
        assert_eq!(run(&["solve", unsat.to_str().unwrap()]), 1);
        fs::write(&unsat, "Variables {XY}\nTerminals {ab}\nEquation: abX = aabY\n").unwrap();
        assert_eq!(run(&["solve", unsat.to_str().unwrap()]), 20);

        let dimacs = dir.join("out.cnf");
        let map = dir.join("out.map");
        assert_eq!(
            run(&[
                "encode",
                file.to_str().unwrap(),
                "-o",
                dimacs.to_str().unwrap(),
                "--map",
                map.to_str().unwrap(),
            ]),
            0
        );
        let cnf = fs::read_to_string(&dimacs).unwrap();
        assert!(cnf.contains("p cnf "));
        assert!(fs::read_to_string(&map).unwrap().contains("K:Z:0:a"));

        assert_eq!(run(&["generate", "--track", "2", "--family-n", "2", "--out-dir", dir.to_str().unwrap()]), 0);
        assert_eq!(run(&["nonsense"]), 1);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn external_model_import_round_trip() {
        let dir = std::env::temp_dir().join(format!("weqsat-model-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let sys = sys_of("aZXb", "aXaY");
        let bounds = Bounds::uniform(&['Z', 'X', 'Y'], 1);

        // Solve internally, dump the model in solver output syntax, then
        // re-run with the import path and no internal search.
        let mdds = build_diagrams(&sys, &bounds, true).unwrap();
        let enc = encode_system(&sys, &bounds, &mdds).unwrap();
        let model = match sat::solve(&enc.formula).unwrap() {
            SatResult::Sat(m) => m,
            SatResult::Unsat => panic!("expected SAT"),
        };
        let mut text = String::from("s SATISFIABLE\nv");
        for v in 1..=enc.formula.num_vars() {
            let lit = if model[v as usize] { v as i64 } else { -(v as i64) };
            text.push_str(&format!(" {}", lit));
        }
        text.push_str(" 0\n");
        let path = dir.join("model.txt");
        fs::write(&path, text).unwrap();

        let cfg = SolverConfig {
            // The import must check out against the same formula, so the
            // passes that reshape the encoding stay off.
            preprocessing: false,
            refinement: false,
            model_import_path: Some(path),
            ..SolverConfig::default()
        };
        let r = solve_bounded(&sys, &bounds, &cfg).unwrap();
        assert_eq!(r.status, Status::Sat);
        fs::remove_dir_all(&dir).ok();
    }
}
