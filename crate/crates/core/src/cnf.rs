//! CNF clause database, bit-vector gadgets shared by the encoders, the
//! semantic-variable dictionary, and DIMACS / solver-output text formats.
//!
//! Finite-domain values are represented by bit vectors in binary encoding
//! (bit 0 is the least significant). A width-0 vector is legal and denotes
//! the constant 0 of a one-value domain.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// Positive variable id (1-based, DIMACS convention).
pub type Var = u32;
/// Signed literal: `v` for the positive, `-v` for the negated literal.
pub type Lit = i32;

pub fn lit(var: Var, positive: bool) -> Lit {
    if positive {
        var as Lit
    } else {
        -(var as Lit)
    }
}

/// A clause set over variables `1..=var_count`. Clauses are stored in a flat
/// literal pool. Tautologies and duplicate literals are suppressed at
/// insertion; the empty clause is not representable here (encoders emit an
/// explicit contradiction pair instead).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    var_count: usize,
    literals: Vec<Lit>,
    clause_ends: Vec<u32>,
}

impl Cnf {
    pub fn new(var_count: usize) -> Self {
        Self {
            var_count,
            literals: Vec::new(),
            clause_ends: Vec::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn clause_count(&self) -> usize {
        self.clause_ends.len()
    }

    pub fn total_literals(&self) -> usize {
        self.literals.len()
    }

    pub fn grow_vars(&mut self, var_count: usize) {
        assert!(var_count >= self.var_count);
        self.var_count = var_count;
    }

    /// Inserts a clause after dropping duplicate literals; a clause that
    /// contains complementary literals is skipped entirely. Returns whether
    /// the clause was stored.
    ///
    /// Panics on empty input and on out-of-range variables: those are
    /// encoder bugs, not runtime conditions.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        assert!(!lits.is_empty(), "empty clause inserted into Cnf");
        let start = self.literals.len();
        'outer: for &l in lits {
            let v = l.unsigned_abs() as usize;
            assert!(v >= 1 && v <= self.var_count, "literal {l} out of range");
            for &prev in &self.literals[start..] {
                if prev == l {
                    continue 'outer; // duplicate literal
                }
                if prev == -l {
                    self.literals.truncate(start); // tautology
                    return false;
                }
            }
            self.literals.push(l);
        }
        self.clause_ends.push(self.literals.len() as u32);
        true
    }

    pub fn clause(&self, index: usize) -> &[Lit] {
        let end = self.clause_ends[index] as usize;
        let start = if index == 0 {
            0
        } else {
            self.clause_ends[index - 1] as usize
        };
        &self.literals[start..end]
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[Lit]> {
        (0..self.clause_count()).map(|i| self.clause(i))
    }

    /// True when `assignment` (indexed by `var - 1`) satisfies every clause.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses().all(|clause| {
            clause.iter().any(|&l| {
                let value = assignment[(l.unsigned_abs() - 1) as usize];
                (l > 0) == value
            })
        })
    }
}

/// A finite-domain variable as a vector of propositional bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitVec {
    bits: Vec<Var>,
}

impl BitVec {
    pub fn new(bits: Vec<Var>) -> Self {
        Self { bits }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, i: usize) -> Var {
        self.bits[i]
    }

    /// Literal asserting that bit `i` agrees with bit `i` of constant `c`.
    pub fn lit_for_const(&self, c: usize, i: usize) -> Lit {
        lit(self.bits[i], (c >> i) & 1 == 1)
    }

    /// Reads the vector's value under a total assignment.
    pub fn value(&self, assignment: &[bool]) -> usize {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &v)| assignment[(v - 1) as usize])
            .map(|(i, _)| 1usize << i)
            .sum()
    }
}

/// Bits needed for a domain of `domain_size` values; 0 for a singleton domain.
pub fn width_for_domain(domain_size: usize) -> usize {
    if domain_size <= 1 {
        0
    } else {
        (usize::BITS - (domain_size - 1).leading_zeros()) as usize
    }
}

/// Unit literals asserting `vec == c`, one per bit.
pub fn const_eq(vec: &BitVec, c: usize) -> Vec<Lit> {
    assert!(
        vec.width() >= width_for_domain(c + 1),
        "constant {c} exceeds bit-vector range"
    );
    (0..vec.width()).map(|i| vec.lit_for_const(c, i)).collect()
}

/// The single clause asserting `vec != c`: at least one bit must disagree
/// with the binary representation of `c`. `None` when the vector has width
/// 0, in which case the requested inequality is unsatisfiable.
pub fn const_neq(vec: &BitVec, c: usize) -> Option<Vec<Lit>> {
    assert!(
        vec.width() >= width_for_domain(c + 1),
        "constant {c} exceeds bit-vector range"
    );
    if vec.width() == 0 {
        return None;
    }
    Some((0..vec.width()).map(|i| -vec.lit_for_const(c, i)).collect())
}

/// Clauses asserting `a == b` bitwise: two binary clauses per bit.
pub fn var_eq(a: &BitVec, b: &BitVec) -> Vec<Vec<Lit>> {
    assert_eq!(a.width(), b.width(), "bit-vector width mismatch");
    let mut clauses = Vec::with_capacity(2 * a.width());
    for i in 0..a.width() {
        clauses.push(vec![-lit(a.bit(i), true), lit(b.bit(i), true)]);
        clauses.push(vec![lit(a.bit(i), true), -lit(b.bit(i), true)]);
    }
    clauses
}

/// Guarded form `guard => a == b`: the negated guard is prepended to every
/// clause of [`var_eq`].
pub fn var_eq_guarded(guard: Lit, a: &BitVec, b: &BitVec) -> Vec<Vec<Lit>> {
    var_eq(a, b)
        .into_iter()
        .map(|mut clause| {
            clause.insert(0, -guard);
            clause
        })
        .collect()
}

/// Clauses asserting `a != b` via fresh per-bit difference variables `diff`:
/// one clause requiring some difference bit, plus two ternary clauses per bit
/// stating `diff[i] => a[i] != b[i]`. With width 0 the two vectors are equal
/// constants and the output contains the empty (unsatisfiable) clause, which
/// callers must translate into an explicit contradiction.
pub fn var_neq(a: &BitVec, b: &BitVec, diff: &BitVec) -> Vec<Vec<Lit>> {
    assert_eq!(a.width(), b.width(), "bit-vector width mismatch");
    assert_eq!(a.width(), diff.width(), "difference vector width mismatch");
    let mut clauses = Vec::with_capacity(2 * a.width() + 1);
    clauses.push((0..diff.width()).map(|i| lit(diff.bit(i), true)).collect());
    for i in 0..a.width() {
        let d = -lit(diff.bit(i), true);
        clauses.push(vec![d, lit(a.bit(i), true), lit(b.bit(i), true)]);
        clauses.push(vec![d, -lit(a.bit(i), true), -lit(b.bit(i), true)]);
    }
    clauses
}

/// One [`const_neq`] clause per representable value outside the domain.
pub fn forbid_extra_states(vec: &BitVec, domain_size: usize) -> Vec<Vec<Lit>> {
    assert!(domain_size >= 1 && domain_size <= 1usize << vec.width());
    (domain_size..1usize << vec.width())
        .map(|c| const_neq(vec, c).expect("width > 0 here"))
        .collect()
}

/// Semantic key of a SAT variable. Agent, vertex, and layer components are
/// 0-based in memory; the serialized form prints agents and vertices 1-based
/// to match the instance file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    /// Bit of the agent-or-empty value held by a vertex at a layer
    /// (0 = vacant, i = agent i).
    Occupant { vertex: usize, layer: usize, bit: usize },
    /// Bit of a vertex's transition action at a layer: 0 = none,
    /// 1..=deg = send to the k-th neighbor, deg+1..=2deg = receive from
    /// the (k-deg)-th neighbor.
    Transit { vertex: usize, layer: usize, bit: usize },
    /// Bit of an agent's vertex index at a layer.
    AgentPos { agent: usize, layer: usize, bit: usize },
    /// Direct flag: agent sits at vertex at layer.
    AgentAt { agent: usize, vertex: usize, layer: usize },
    /// Vertex is saturated by the flow at a layer.
    FlowNode { vertex: usize, layer: usize },
    /// Wait arc of a vertex between `layer` and `layer + 1` is in the flow.
    FlowWait { vertex: usize, layer: usize },
    /// Directed move arc `from -> to` between `layer` and `layer + 1`.
    FlowArc { from: usize, to: usize, layer: usize },
    /// Vertex is vacant at a layer (SIMPLIFIED auxiliary).
    Vacant { vertex: usize, layer: usize },
    /// Auxiliary: vertex holds no agent at a layer.
    AuxEmpty { vertex: usize, layer: usize },
    /// Auxiliary: occupant of `from` at `layer` equals occupant of `to` at
    /// `layer + 1`.
    AuxCopy { from: usize, to: usize, layer: usize },
    /// Auxiliary naming `Transit(vertex, layer) == action`.
    AuxTransit { vertex: usize, layer: usize, action: usize },
    /// Auxiliary naming `AgentPos(agent, layer) == vertex`.
    AuxAtVertex { agent: usize, vertex: usize, layer: usize },
    /// Difference bit for the same-layer inequality of two agents' positions.
    AuxDiffSame { a: usize, b: usize, layer: usize, bit: usize },
    /// Difference bit for the inequality between agent `a`'s position at
    /// `layer + 1` and agent `b`'s position at `layer`.
    AuxDiffMove { a: usize, b: usize, layer: usize, bit: usize },
    /// Fresh variable materializing an unsatisfiable request as the pair of
    /// unit clauses `x` and `-x`.
    Contradiction { index: usize },
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarKey::Occupant { vertex, layer, bit } => {
                write!(f, "occupant v{} l{} b{}", vertex + 1, layer, bit)
            }
            VarKey::Transit { vertex, layer, bit } => {
                write!(f, "transit v{} l{} b{}", vertex + 1, layer, bit)
            }
            VarKey::AgentPos { agent, layer, bit } => {
                write!(f, "agent-pos a{} l{} b{}", agent + 1, layer, bit)
            }
            VarKey::AgentAt { agent, vertex, layer } => {
                write!(f, "agent-at a{} v{} l{}", agent + 1, vertex + 1, layer)
            }
            VarKey::FlowNode { vertex, layer } => {
                write!(f, "flow-node v{} l{}", vertex + 1, layer)
            }
            VarKey::FlowWait { vertex, layer } => {
                write!(f, "flow-wait v{} l{}", vertex + 1, layer)
            }
            VarKey::FlowArc { from, to, layer } => {
                write!(f, "flow-arc v{} v{} l{}", from + 1, to + 1, layer)
            }
            VarKey::Vacant { vertex, layer } => {
                write!(f, "vacant v{} l{}", vertex + 1, layer)
            }
            VarKey::AuxEmpty { vertex, layer } => {
                write!(f, "aux-empty v{} l{}", vertex + 1, layer)
            }
            VarKey::AuxCopy { from, to, layer } => {
                write!(f, "aux-copy v{} v{} l{}", from + 1, to + 1, layer)
            }
            VarKey::AuxTransit { vertex, layer, action } => {
                write!(f, "aux-transit v{} l{} c{}", vertex + 1, layer, action)
            }
            VarKey::AuxAtVertex { agent, vertex, layer } => {
                write!(f, "aux-at a{} v{} l{}", agent + 1, vertex + 1, layer)
            }
            VarKey::AuxDiffSame { a, b, layer, bit } => {
                write!(f, "aux-diff-same a{} a{} l{} b{}", a + 1, b + 1, layer, bit)
            }
            VarKey::AuxDiffMove { a, b, layer, bit } => {
                write!(f, "aux-diff-move a{} a{} l{} b{}", a + 1, b + 1, layer, bit)
            }
            VarKey::Contradiction { index } => write!(f, "contradiction {index}"),
        }
    }
}

/// Bijection between semantic keys and SAT variable ids. Allocation order is
/// the variable numbering, so identical allocation sequences produce
/// identical formulas.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    keys: Vec<VarKey>,
    index: HashMap<VarKey, Var>,
}

impl VarMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Allocates the next variable id for `key`. Panics on reallocation;
    /// every semantic key is allocated exactly once.
    pub fn alloc(&mut self, key: VarKey) -> Var {
        let var = (self.keys.len() + 1) as Var;
        let previous = self.index.insert(key, var);
        assert!(previous.is_none(), "variable key allocated twice: {key}");
        self.keys.push(key);
        var
    }

    pub fn var(&self, key: &VarKey) -> Option<Var> {
        self.index.get(key).copied()
    }

    pub fn key(&self, var: Var) -> VarKey {
        self.keys[(var - 1) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, VarKey)> + '_ {
        self.keys
            .iter()
            .enumerate()
            .map(|(i, &k)| ((i + 1) as Var, k))
    }

    /// One line per mapping: `<satvar> <key>`.
    pub fn serialize(&self, mut w: impl Write) -> io::Result<()> {
        for (var, key) in self.iter() {
            writeln!(w, "{var} {key}")?;
        }
        Ok(())
    }
}

/// Writes the standard DIMACS CNF text: `p cnf <vars> <clauses>` header, one
/// 0-terminated clause per line.
pub fn write_dimacs(cnf: &Cnf, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "p cnf {} {}", cnf.var_count(), cnf.clause_count())?;
    let mut line = String::new();
    for clause in cnf.clauses() {
        line.clear();
        for &l in clause {
            line.push_str(itoa_buffer(l).as_str());
            line.push(' ');
        }
        line.push('0');
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn itoa_buffer(value: i32) -> String {
    value.to_string()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

/// Parses DIMACS CNF text. Comment lines and an optional leading `%`/`0`
/// trailer are tolerated; literals may span lines.
pub fn read_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let err = |line: usize, message: &str| DimacsError {
        line,
        message: message.to_string(),
    };
    let mut var_count: Option<usize> = None;
    let mut declared_clauses = 0usize;
    let mut cnf = Cnf::new(0);
    let mut current: Vec<Lit> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if var_count.is_some() {
                return Err(err(lineno, "duplicate problem line"));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "cnf" {
                return Err(err(lineno, "expected: p cnf <vars> <clauses>"));
            }
            let vars: usize = fields[1]
                .parse()
                .map_err(|_| err(lineno, "invalid variable count"))?;
            declared_clauses = fields[2]
                .parse()
                .map_err(|_| err(lineno, "invalid clause count"))?;
            var_count = Some(vars);
            cnf = Cnf::new(vars);
            continue;
        }
        let vars = var_count.ok_or_else(|| err(lineno, "clause before problem line"))?;
        for token in line.split_whitespace() {
            let value: i64 = token
                .parse()
                .map_err(|_| err(lineno, "invalid literal"))?;
            if value == 0 {
                if !current.is_empty() {
                    cnf.add_clause(&current);
                    current.clear();
                }
            } else {
                if value.unsigned_abs() as usize > vars {
                    return Err(err(lineno, "literal out of declared range"));
                }
                current.push(value as Lit);
            }
        }
    }
    if !current.is_empty() {
        cnf.add_clause(&current);
    }
    let _ = declared_clauses; // informative only; tautology suppression may shrink it
    Ok(cnf)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverOutputError {
    #[error("solver produced no verdict line (`s SATISFIABLE` / `s UNSATISFIABLE`)")]
    MissingVerdict,
    #[error("unrecognized verdict line: {0:?}")]
    UnknownVerdict(String),
    #[error("malformed literal in values line: {0:?}")]
    BadLiteral(String),
    #[error("model literal {0} out of range (formula has {1} variables)")]
    LiteralOutOfRange(i64, usize),
}

/// Outcome extracted from SAT-competition conformant solver output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverVerdict {
    /// Total assignment indexed by `var - 1`; variables not listed by the
    /// solver default to false.
    Sat(Vec<bool>),
    Unsat,
}

/// Parses solver stdout: the `s` verdict line plus, for satisfiable runs,
/// `v` lines of literals terminated by 0.
pub fn read_model(output: &str, var_count: usize) -> Result<SolverVerdict, SolverOutputError> {
    let mut verdict: Option<bool> = None;
    let mut assignment = vec![false; var_count];
    for line in output.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            match rest.trim() {
                "SATISFIABLE" => verdict = Some(true),
                "UNSATISFIABLE" => verdict = Some(false),
                other => {
                    return Err(SolverOutputError::UnknownVerdict(other.to_string()));
                }
            }
        } else if let Some(rest) = line.strip_prefix("v ").or(if line == "v" {
            Some("")
        } else {
            None
        }) {
            for token in rest.split_whitespace() {
                let value: i64 = token
                    .parse()
                    .map_err(|_| SolverOutputError::BadLiteral(token.to_string()))?;
                if value == 0 {
                    continue;
                }
                let var = value.unsigned_abs() as usize;
                if var > var_count {
                    return Err(SolverOutputError::LiteralOutOfRange(value, var_count));
                }
                assignment[var - 1] = value > 0;
            }
        }
    }
    match verdict {
        Some(true) => Ok(SolverVerdict::Sat(assignment)),
        Some(false) => Ok(SolverVerdict::Unsat),
        None => Err(SolverOutputError::MissingVerdict),
    }
}
