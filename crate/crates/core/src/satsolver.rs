//! SAT back-ends: an embedded DPLL used as the self-contained correctness
//! path, and a file-based external solver runner speaking the
//! SAT-competition output protocol for production runs.
//!
//! Every satisfying assignment returned from either back-end is re-verified
//! against the full clause set before it leaves this module.

use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::cnf::{read_model, write_dimacs, Cnf, SolverVerdict};

/// Which back-end answers the satisfiability queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Built-in DPLL with watched-literal unit propagation. Complete but
    /// deliberately simple: no learning, no restarts.
    Embedded,
    /// External command template. `{cnf}` is replaced by the path of the
    /// generated DIMACS file; without the placeholder the path is appended
    /// as the last argument.
    External { command: String },
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Per-call wall-clock limit.
    pub time_limit: Duration,
    /// Where the external back-end writes CNF files; a fresh file under the
    /// system temp directory when unset.
    pub work_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Embedded,
            time_limit: Duration::from_secs(256),
            work_dir: None,
        }
    }
}

impl SolverConfig {
    pub fn embedded() -> Self {
        Self::default()
    }

    pub fn external(command: impl Into<String>) -> Self {
        Self {
            backend: Backend::External {
                command: command.into(),
            },
            ..Self::default()
        }
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        assert!(!limit.is_zero(), "time limit must be positive");
        self.time_limit = limit;
        self
    }
}

/// Result of one satisfiability query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// Total assignment indexed by `var - 1`, verified against every clause.
    Sat(Vec<bool>),
    Unsat,
    Timeout,
    SolverError(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Runs the configured back-end on `cnf`.
pub fn solve(cnf: &Cnf, cfg: &SolverConfig) -> SatResult {
    let result = match &cfg.backend {
        Backend::Embedded => dpll_with_deadline(cnf, Some(Instant::now() + cfg.time_limit)),
        Backend::External { command } => run_external(cnf, command, cfg),
    };
    verify(cnf, result)
}

/// Complete embedded DPLL without a time limit; always returns SAT or UNSAT.
pub fn embedded_dpll(cnf: &Cnf) -> SatResult {
    verify(cnf, dpll_with_deadline(cnf, None))
}

fn verify(cnf: &Cnf, result: SatResult) -> SatResult {
    if let SatResult::Sat(assignment) = &result {
        if assignment.len() != cnf.var_count() {
            return SatResult::SolverError(format!(
                "model covers {} variables, formula has {}",
                assignment.len(),
                cnf.var_count()
            ));
        }
        if !cnf.is_satisfied_by(assignment) {
            return SatResult::SolverError(
                "reported model does not satisfy the formula".to_string(),
            );
        }
    }
    result
}

// ---------------------------------------------------------------------------
// Embedded solver: DPLL search with watched-literal propagation, first-UIP
// conflict learning, and non-chronological backtracking. Branching stays
// activity-free (lowest-index unassigned variable, false first, matching the
// conservative default phase of production solvers); learning is required
// because chronological search degenerates on the occupancy encodings, whose
// conflicts surface only at the goal layer. Fully deterministic: no restarts,
// no clause deletion, no randomization.
// ---------------------------------------------------------------------------

/// Literal codes: variable v (1-based) maps to 2(v-1) for the positive and
/// 2(v-1)+1 for the negative literal.
fn code(lit: i32) -> u32 {
    let v = lit.unsigned_abs() - 1;
    (v << 1) | u32::from(lit < 0)
}

const NO_REASON: u32 = u32::MAX;

struct Solver {
    /// Flat literal-code pool; positions 0 and 1 of each clause are watched.
    data: Vec<u32>,
    bounds: Vec<(u32, u32)>,
    /// Per literal code: ids of the clauses watching that code.
    watches: Vec<Vec<u32>>,
    /// 0 = unassigned, 1 = true, -1 = false (indexed by variable - 1).
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    head: usize,
    seen: Vec<bool>,
    steps_since_deadline_check: u32,
}

enum SearchOutcome {
    Sat(Vec<bool>),
    Unsat,
    Timeout,
}

impl Solver {
    fn new(cnf: &Cnf) -> Result<Self, ()> {
        let num_vars = cnf.var_count();
        let mut solver = Self {
            data: Vec::with_capacity(cnf.total_literals()),
            bounds: Vec::with_capacity(cnf.clause_count()),
            watches: vec![Vec::new(); num_vars * 2],
            assign: vec![0; num_vars],
            level: vec![0; num_vars],
            reason: vec![NO_REASON; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            head: 0,
            seen: vec![false; num_vars],
            steps_since_deadline_check: 0,
        };
        for clause in cnf.clauses() {
            if clause.len() == 1 {
                if !solver.enqueue(code(clause[0]), NO_REASON) {
                    return Err(());
                }
            } else {
                let codes: Vec<u32> = clause.iter().map(|&l| code(l)).collect();
                solver.add_watched_clause(&codes);
            }
        }
        Ok(solver)
    }

    fn add_watched_clause(&mut self, codes: &[u32]) -> u32 {
        debug_assert!(codes.len() >= 2);
        let id = self.bounds.len() as u32;
        let start = self.data.len() as u32;
        self.data.extend_from_slice(codes);
        self.bounds.push((start, self.data.len() as u32));
        self.watches[codes[0] as usize].push(id);
        self.watches[codes[1] as usize].push(id);
        id
    }

    fn lit_value(&self, c: u32) -> i8 {
        let v = self.assign[(c >> 1) as usize];
        if c & 1 == 0 {
            v
        } else {
            -v
        }
    }

    fn current_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Assigns a literal code; false when it is already false.
    fn enqueue(&mut self, c: u32, reason: u32) -> bool {
        match self.lit_value(c) {
            1 => true,
            -1 => false,
            _ => {
                let var = (c >> 1) as usize;
                self.assign[var] = if c & 1 == 0 { 1 } else { -1 };
                self.level[var] = self.current_level();
                self.reason[var] = reason;
                self.trail.push(c);
                true
            }
        }
    }

    /// Runs unit propagation; returns the id of a conflicting clause.
    fn propagate(&mut self) -> Option<u32> {
        while self.head < self.trail.len() {
            let assigned = self.trail[self.head];
            self.head += 1;
            let falsified = assigned ^ 1;
            let mut idx = 0;
            'watchlist: while idx < self.watches[falsified as usize].len() {
                let cid = self.watches[falsified as usize][idx];
                let (start, end) = self.bounds[cid as usize];
                let (start, end) = (start as usize, end as usize);
                if self.data[start] == falsified {
                    self.data.swap(start, start + 1);
                }
                let first = self.data[start];
                if self.lit_value(first) == 1 {
                    idx += 1;
                    continue;
                }
                for k in (start + 2)..end {
                    if self.lit_value(self.data[k]) != -1 {
                        self.data.swap(start + 1, k);
                        let new_watch = self.data[start + 1] as usize;
                        self.watches[new_watch].push(cid);
                        self.watches[falsified as usize].swap_remove(idx);
                        continue 'watchlist;
                    }
                }
                // No replacement watch: unit or conflicting.
                if !self.enqueue(first, cid) {
                    return Some(cid);
                }
                idx += 1;
            }
        }
        None
    }

    /// First-UIP conflict analysis: returns the learnt clause (asserting
    /// literal first, a literal of the backjump level second) and the level
    /// to jump back to.
    fn analyze(&mut self, mut conflict: u32) -> (Vec<u32>, u32) {
        let mut learnt: Vec<u32> = vec![0];
        let mut counter = 0usize;
        let mut index = self.trail.len();
        let mut pivot: Option<u32> = None;

        loop {
            let (start, end) = self.bounds[conflict as usize];
            for k in start as usize..end as usize {
                let q = self.data[k];
                // A reason clause contains its asserted literal; skip it
                // when resolving on that variable.
                if Some(q) == pivot {
                    continue;
                }
                let var = (q >> 1) as usize;
                if !self.seen[var] && self.level[var] > 0 {
                    self.seen[var] = true;
                    if self.level[var] == self.current_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // Walk back to the next marked literal on the trail.
            loop {
                index -= 1;
                if self.seen[(self.trail[index] >> 1) as usize] {
                    break;
                }
            }
            let p = self.trail[index];
            self.seen[(p >> 1) as usize] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = p ^ 1;
                break;
            }
            conflict = self.reason[(p >> 1) as usize];
            pivot = Some(p);
        }
        for &q in &learnt[1..] {
            self.seen[(q >> 1) as usize] = false;
        }
        // Jump to the highest level among the remaining literals; put one of
        // its literals into the second watch slot.
        let mut backjump = 0;
        let mut swap_with = 1;
        for (i, &q) in learnt.iter().enumerate().skip(1) {
            let lvl = self.level[(q >> 1) as usize];
            if lvl > backjump {
                backjump = lvl;
                swap_with = i;
            }
        }
        if learnt.len() > 1 {
            learnt.swap(1, swap_with);
        }
        (learnt, backjump)
    }

    fn cancel_until(&mut self, target: u32) {
        while self.current_level() > target {
            let mark = self.trail_lim.pop().unwrap();
            for &c in &self.trail[mark..] {
                self.assign[(c >> 1) as usize] = 0;
            }
            self.trail.truncate(mark);
        }
        self.head = self.trail.len();
    }

    fn run(&mut self, deadline: Option<Instant>) -> SearchOutcome {
        loop {
            if let Some(deadline) = deadline {
                self.steps_since_deadline_check += 1;
                if self.steps_since_deadline_check >= 2048 {
                    self.steps_since_deadline_check = 0;
                    if Instant::now() >= deadline {
                        return SearchOutcome::Timeout;
                    }
                }
            }
            if let Some(conflict) = self.propagate() {
                if self.current_level() == 0 {
                    return SearchOutcome::Unsat;
                }
                let (learnt, backjump) = self.analyze(conflict);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    let ok = self.enqueue(learnt[0], NO_REASON);
                    debug_assert!(ok);
                } else {
                    let cid = self.add_watched_clause(&learnt);
                    let ok = self.enqueue(learnt[0], cid);
                    debug_assert!(ok);
                }
                continue;
            }
            // Branch on the lowest-index unassigned variable, false first.
            match self.assign.iter().position(|&v| v == 0) {
                Some(var_idx) => {
                    self.trail_lim.push(self.trail.len());
                    let negative = ((var_idx as u32) << 1) | 1;
                    let ok = self.enqueue(negative, NO_REASON);
                    debug_assert!(ok);
                }
                None => {
                    let model = self.assign.iter().map(|&v| v == 1).collect();
                    return SearchOutcome::Sat(model);
                }
            }
        }
    }
}

fn dpll_with_deadline(cnf: &Cnf, deadline: Option<Instant>) -> SatResult {
    let mut solver = match Solver::new(cnf) {
        Ok(solver) => solver,
        Err(()) => return SatResult::Unsat,
    };
    match solver.run(deadline) {
        SearchOutcome::Sat(model) => SatResult::Sat(model),
        SearchOutcome::Unsat => SatResult::Unsat,
        SearchOutcome::Timeout => SatResult::Timeout,
    }
}

// ---------------------------------------------------------------------------
// External solver runner
// ---------------------------------------------------------------------------

static NEXT_FILE_ID: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

fn run_external(cnf: &Cnf, command: &str, cfg: &SolverConfig) -> SatResult {
    let dir = cfg
        .work_dir
        .clone()
        .unwrap_or_else(std::env::temp_dir);
    let file_id = NEXT_FILE_ID.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let cnf_path = dir.join(format!(
        "cpf-{}-{}.cnf",
        std::process::id(),
        file_id
    ));

    let write_result = (|| {
        let mut file = std::io::BufWriter::new(std::fs::File::create(&cnf_path)?);
        write_dimacs(cnf, &mut file)?;
        std::io::Write::flush(&mut file)
    })();
    if let Err(e) = write_result {
        return SatResult::SolverError(format!("cannot write CNF file: {e}"));
    }

    let result = run_command_on(&cnf_path, command, cnf, cfg.time_limit);
    let _ = std::fs::remove_file(&cnf_path);
    result
}

fn run_command_on(
    cnf_path: &std::path::Path,
    command: &str,
    cnf: &Cnf,
    time_limit: Duration,
) -> SatResult {
    let mut tokens: Vec<String> = command.split_whitespace().map(String::from).collect();
    if tokens.is_empty() {
        return SatResult::SolverError("empty solver command".to_string());
    }
    let path_str = cnf_path.display().to_string();
    let mut substituted = false;
    for token in &mut tokens {
        if token.contains("{cnf}") {
            *token = token.replace("{cnf}", &path_str);
            substituted = true;
        }
    }
    if !substituted {
        tokens.push(path_str);
    }

    let mut child = match Command::new(&tokens[0])
        .args(&tokens[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(child) => child,
        Err(e) => {
            return SatResult::SolverError(format!("cannot spawn {:?}: {e}", tokens[0]));
        }
    };

    // Drain stdout on a helper thread so the child never blocks on a full
    // pipe, then poll for exit until the deadline.
    let mut stdout = child.stdout.take().expect("stdout was piped");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + time_limit;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    // Grandchildren may keep the stdout pipe open past the
                    // kill; detach the reader instead of joining it.
                    drop(reader);
                    return SatResult::Timeout;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => {
                let _ = child.kill();
                return SatResult::SolverError(format!("wait failed: {e}"));
            }
        }
    };

    let output = match reader.join() {
        Ok(buf) => buf,
        Err(_) => return SatResult::SolverError("stdout reader panicked".to_string()),
    };

    match read_model(&output, cnf.var_count()) {
        Ok(SolverVerdict::Sat(assignment)) => SatResult::Sat(assignment),
        Ok(SolverVerdict::Unsat) => SatResult::Unsat,
        Err(e) => {
            if output.trim().is_empty() {
                SatResult::SolverError(format!(
                    "solver exited ({status}) without output"
                ))
            } else {
                SatResult::SolverError(format!("solver protocol error: {e}"))
            }
        }
    }
}
