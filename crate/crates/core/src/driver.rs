//! Sequential increasing makespan search: encode the bounded-makespan query
//! for eta = 1, 2, ... and return the first satisfiable bound together with
//! the decoded solution. All smaller bounds having been refuted certifies
//! optimality.
//!
//! The search is incomplete for unsolvable instances, so cheap necessary
//! conditions run first and a bound cap turns non-termination into an
//! explicit `Unknown`.

use std::time::{Duration, Instant};

use crate::encodings::{
    apply_distance_heuristic, decode, encode, EncodingKind,
};
use crate::expansion::reach_windows;
use crate::model::{CpfInstance, Solution};
use crate::satsolver::{solve, SatResult, SolverConfig};

/// Why the pre-check rejected an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnsolvableReason {
    /// An agent's start and goal lie in different connected components.
    DisconnectedAgent { agent: usize },
    /// Every vertex is occupied and the goal differs from the start: no
    /// agent can ever move.
    NoVacantVertex,
    /// Some connected component starts and ends with different numbers of
    /// agents.
    ComponentImbalance { component: usize },
}

impl std::fmt::Display for UnsolvableReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnsolvableReason::DisconnectedAgent { agent } => {
                write!(f, "agent {} cannot reach its goal", agent + 1)
            }
            UnsolvableReason::NoVacantVertex => {
                write!(f, "no vacant vertex and the goal differs from the start")
            }
            UnsolvableReason::ComponentImbalance { component } => {
                write!(f, "component {component} gains or loses agents")
            }
        }
    }
}

/// Result of the necessary-condition pre-check. `Proceed` does not promise
/// solvability, only that none of the cheap certificates applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Precheck {
    Unsolvable(UnsolvableReason),
    Proceed,
}

pub fn precheck(inst: &CpfInstance) -> Precheck {
    let components = inst.graph.components();
    for agent in 0..inst.agent_count() {
        if components[inst.initial.vertex_of(agent)] != components[inst.goal.vertex_of(agent)]
        {
            return Precheck::Unsolvable(UnsolvableReason::DisconnectedAgent { agent });
        }
    }
    if inst.agent_count() == inst.graph.vertex_count() && inst.initial != inst.goal {
        return Precheck::Unsolvable(UnsolvableReason::NoVacantVertex);
    }
    let component_count = components.iter().copied().max().map_or(0, |m| m + 1);
    let mut start_counts = vec![0isize; component_count];
    let mut goal_counts = vec![0isize; component_count];
    for agent in 0..inst.agent_count() {
        start_counts[components[inst.initial.vertex_of(agent)]] += 1;
        goal_counts[components[inst.goal.vertex_of(agent)]] += 1;
    }
    for component in 0..component_count {
        if start_counts[component] != goal_counts[component] {
            return Precheck::Unsolvable(UnsolvableReason::ComponentImbalance { component });
        }
    }
    Precheck::Proceed
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub encoding: EncodingKind,
    /// Compile reachability-window pruning clauses into every formula.
    pub use_distance_heuristic: bool,
    /// First makespan bound to query.
    pub eta_start: usize,
    /// Largest bound to query; `None` selects `n * mu + n`, a crude safe
    /// bound that keeps the loop finite on unsolvable inputs.
    pub eta_cap: Option<usize>,
    /// Wall-clock budget over the whole loop, encoding time included.
    pub time_budget: Duration,
    pub solver: SolverConfig,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            encoding: EncodingKind::Simplified,
            use_distance_heuristic: true,
            eta_start: 1,
            eta_cap: None,
            time_budget: Duration::from_secs(256),
            solver: SolverConfig::default(),
        }
    }
}

impl DriverConfig {
    pub fn with_encoding(encoding: EncodingKind) -> Self {
        Self {
            encoding,
            ..Self::default()
        }
    }

    fn effective_cap(&self, inst: &CpfInstance) -> usize {
        self.eta_cap.unwrap_or_else(|| {
            let n = inst.graph.vertex_count();
            n * inst.agent_count() + n
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryVerdict {
    Sat,
    Unsat,
}

/// One makespan query of the loop.
#[derive(Debug, Clone)]
pub struct QueryRecord {
    pub eta: usize,
    pub verdict: QueryVerdict,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    /// The bound cap was reached with every query unsatisfiable. Never
    /// reported as unsolvable: the pre-check is incomplete.
    CapReached { cap: usize },
    BudgetExhausted { at_eta: usize },
    SolverTimeout { at_eta: usize },
    SolverFailure { at_eta: usize, message: String },
    DecodeFailure { at_eta: usize, message: String },
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::CapReached { cap } => {
                write!(f, "no solution up to the bound cap {cap}")
            }
            UnknownReason::BudgetExhausted { at_eta } => {
                write!(f, "time budget exhausted at bound {at_eta}")
            }
            UnknownReason::SolverTimeout { at_eta } => {
                write!(f, "solver timeout at bound {at_eta}")
            }
            UnknownReason::SolverFailure { at_eta, message } => {
                write!(f, "solver failure at bound {at_eta}: {message}")
            }
            UnknownReason::DecodeFailure { at_eta, message } => {
                write!(f, "decode failure at bound {at_eta}: {message}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Optimal {
        makespan: usize,
        solution: Solution,
        /// True when every bound below the answer was queried and refuted,
        /// certifying makespan optimality.
        unsat_below: bool,
    },
    Unsolvable(UnsolvableReason),
    Unknown(UnknownReason),
}

/// The full record of one driver run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub queries: Vec<QueryRecord>,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn optimal_makespan(&self) -> Option<usize> {
        match &self.outcome {
            SolveOutcome::Optimal { makespan, .. } => Some(*makespan),
            _ => None,
        }
    }
}

/// Runs the sequential increasing strategy on `inst`.
pub fn find_optimal(inst: &CpfInstance, cfg: &DriverConfig) -> SolveReport {
    let started = Instant::now();
    let mut queries = Vec::new();

    // Bound zero is decided directly; the loop starts at 1 and would
    // misreport already-solved instances.
    if inst.initial == inst.goal {
        return SolveReport {
            outcome: SolveOutcome::Optimal {
                makespan: 0,
                solution: Solution::new(vec![inst.initial.clone()]),
                unsat_below: true,
            },
            queries,
            elapsed: started.elapsed(),
        };
    }
    if let Precheck::Unsolvable(reason) = precheck(inst) {
        return SolveReport {
            outcome: SolveOutcome::Unsolvable(reason),
            queries,
            elapsed: started.elapsed(),
        };
    }

    let cap = cfg.effective_cap(inst);
    let finish = |outcome, queries, started: Instant| SolveReport {
        outcome,
        queries,
        elapsed: started.elapsed(),
    };

    for eta in cfg.eta_start..=cap {
        let remaining = match cfg.time_budget.checked_sub(started.elapsed()) {
            Some(r) if !r.is_zero() => r,
            _ => {
                return finish(
                    SolveOutcome::Unknown(UnknownReason::BudgetExhausted { at_eta: eta }),
                    queries,
                    started,
                );
            }
        };
        let query_start = Instant::now();
        let mut encoded = encode(inst, eta, cfg.encoding);
        if cfg.use_distance_heuristic {
            let windows = reach_windows(inst, eta);
            encoded = apply_distance_heuristic(encoded, &windows);
        }
        let solver_cfg = cfg
            .solver
            .clone()
            .with_time_limit(cfg.solver.time_limit.min(remaining));
        match solve(&encoded.cnf, &solver_cfg) {
            SatResult::Sat(model) => {
                queries.push(QueryRecord {
                    eta,
                    verdict: QueryVerdict::Sat,
                    elapsed: query_start.elapsed(),
                });
                match decode(&encoded, &model, inst) {
                    Ok(solution) => {
                        debug_assert_eq!(solution.makespan(), eta);
                        // All queried bounds below were refuted; with the
                        // loop anchored at 1 that certifies optimality.
                        let unsat_below = cfg.eta_start <= 1;
                        return finish(
                            SolveOutcome::Optimal {
                                makespan: eta,
                                solution,
                                unsat_below,
                            },
                            queries,
                            started,
                        );
                    }
                    Err(e) => {
                        return finish(
                            SolveOutcome::Unknown(UnknownReason::DecodeFailure {
                                at_eta: eta,
                                message: e.to_string(),
                            }),
                            queries,
                            started,
                        );
                    }
                }
            }
            SatResult::Unsat => {
                queries.push(QueryRecord {
                    eta,
                    verdict: QueryVerdict::Unsat,
                    elapsed: query_start.elapsed(),
                });
            }
            SatResult::Timeout => {
                return finish(
                    SolveOutcome::Unknown(UnknownReason::SolverTimeout { at_eta: eta }),
                    queries,
                    started,
                );
            }
            SatResult::SolverError(message) => {
                return finish(
                    SolveOutcome::Unknown(UnknownReason::SolverFailure {
                        at_eta: eta,
                        message,
                    }),
                    queries,
                    started,
                );
            }
        }
    }
    finish(
        SolveOutcome::Unknown(UnknownReason::CapReached { cap }),
        queries,
        started,
    )
}
