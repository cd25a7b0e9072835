//! Brute-force optimal-makespan computation by breadth-first search over the
//! joint configuration space. The successor relation is exactly the validity
//! conditions: moves follow edges, targets are vacant before the step, and
//! no two agents collide afterwards — including simultaneous moves by any
//! subset of agents.
//!
//! This is the ground truth the SAT pipeline is checked against; it is only
//! meant for desk-scale instances (the state space is bounded by n^mu).

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{Arrangement, CpfInstance, Solution};

/// Hard limit on the number of distinct joint states the search may visit.
const STATE_BUDGET: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("state space too large for brute force ({0} states exceed budget {STATE_BUDGET})")]
    StateSpaceTooLarge(u128),
    #[error("visited more than {STATE_BUDGET} states")]
    BudgetExceeded,
}

/// Verdict of the bounded brute-force search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    /// Optimal makespan of the instance.
    Makespan(usize),
    /// No solution with makespan at most the cap. `exhausted` is true when
    /// the whole reachable space was enumerated, making the verdict
    /// unconditional.
    UnsolvableWithinCap {
        reachable: usize,
        exhausted: bool,
    },
}

/// A joint state is the tuple of agent positions; packing uses base-n
/// positional encoding, which fits u64 comfortably at the supported scale.
fn pack(state: &[usize], n: usize) -> u64 {
    let mut key = 0u64;
    for &v in state.iter().rev() {
        key = key * n as u64 + v as u64;
    }
    key
}

fn unpack(mut key: u64, n: usize, mu: usize) -> Vec<usize> {
    let mut state = Vec::with_capacity(mu);
    for _ in 0..mu {
        state.push((key % n as u64) as usize);
        key /= n as u64;
    }
    state
}

/// Enumerates every valid successor of `state` and feeds it to `emit`.
///
/// Agents are processed in index order, each choosing to stay or to move to
/// a neighbor that was vacant before the step; partial choices violating the
/// post-step injectivity are pruned against the set of already chosen
/// targets. Vacancy is judged against the pre-move occupancy, so train-like
/// chains are never generated.
fn for_each_successor(
    inst: &CpfInstance,
    state: &[usize],
    emit: &mut impl FnMut(&[usize]),
) {
    let n = inst.graph.vertex_count();
    let mu = state.len();
    let mut occupied_before = vec![false; n];
    for &v in state {
        occupied_before[v] = true;
    }
    let mut chosen = vec![0usize; mu];
    let mut taken = vec![false; n];

    fn recurse(
        inst: &CpfInstance,
        state: &[usize],
        occupied_before: &[bool],
        chosen: &mut Vec<usize>,
        taken: &mut Vec<bool>,
        agent: usize,
        emit: &mut impl FnMut(&[usize]),
    ) {
        if agent == state.len() {
            emit(chosen);
            return;
        }
        let current = state[agent];
        // Option: stay.
        if !taken[current] {
            chosen[agent] = current;
            taken[current] = true;
            recurse(inst, state, occupied_before, chosen, taken, agent + 1, emit);
            taken[current] = false;
        }
        // Option: move to a vacant neighbor.
        for &next in inst.graph.neighbors(current) {
            if occupied_before[next] || taken[next] {
                continue;
            }
            chosen[agent] = next;
            taken[next] = true;
            recurse(inst, state, occupied_before, chosen, taken, agent + 1, emit);
            taken[next] = false;
        }
    }

    recurse(
        inst,
        state,
        &occupied_before,
        &mut chosen,
        &mut taken,
        0,
        emit,
    );
}

fn check_budget(inst: &CpfInstance) -> Result<(), OracleError> {
    let n = inst.graph.vertex_count() as u128;
    let mut space = 1u128;
    for _ in 0..inst.agent_count() {
        space = space.saturating_mul(n);
        if space > STATE_BUDGET as u128 {
            return Err(OracleError::StateSpaceTooLarge(space));
        }
    }
    Ok(())
}

struct Search {
    /// Visited state -> predecessor state (self-parent for the root).
    parents: HashMap<u64, u64>,
    outcome: OracleOutcome,
}

fn bfs(inst: &CpfInstance, cap: usize) -> Result<Search, OracleError> {
    check_budget(inst)?;
    let n = inst.graph.vertex_count();
    let start: Vec<usize> = inst.initial.positions().to_vec();
    let goal: Vec<usize> = inst.goal.positions().to_vec();
    let start_key = pack(&start, n);
    let goal_key = pack(&goal, n);

    let mut parents = HashMap::new();
    parents.insert(start_key, start_key);
    if start_key == goal_key {
        return Ok(Search {
            parents,
            outcome: OracleOutcome::Makespan(0),
        });
    }

    let mut frontier = vec![start_key];
    let mut depth = 0usize;
    while !frontier.is_empty() && depth < cap {
        depth += 1;
        let mut next_frontier = Vec::new();
        let mut error = None;
        for &key in &frontier {
            let state = unpack(key, n, inst.agent_count());
            let mut found_goal = false;
            for_each_successor(inst, &state, &mut |succ| {
                if found_goal || error.is_some() {
                    return;
                }
                let succ_key = pack(succ, n);
                if let std::collections::hash_map::Entry::Vacant(e) =
                    parents.entry(succ_key)
                {
                    e.insert(key);
                    if succ_key == goal_key {
                        found_goal = true;
                        return;
                    }
                    if parents.len() > STATE_BUDGET {
                        error = Some(OracleError::BudgetExceeded);
                        return;
                    }
                    next_frontier.push(succ_key);
                }
            });
            if let Some(e) = error {
                return Err(e);
            }
            if found_goal {
                return Ok(Search {
                    parents,
                    outcome: OracleOutcome::Makespan(depth),
                });
            }
        }
        frontier = next_frontier;
    }
    Ok(Search {
        outcome: OracleOutcome::UnsolvableWithinCap {
            reachable: parents.len(),
            exhausted: frontier.is_empty(),
        },
        parents,
    })
}

/// Optimal makespan of `inst`, or the cap-bounded unsolvability verdict.
pub fn oracle_makespan(inst: &CpfInstance, cap: usize) -> Result<OracleOutcome, OracleError> {
    bfs(inst, cap).map(|s| s.outcome)
}

/// Decision variant: is there a solution of makespan at most `eta`? Valid
/// because no-op steps pad any shorter solution.
pub fn oracle_decision(inst: &CpfInstance, eta: usize) -> Result<bool, OracleError> {
    match oracle_makespan(inst, eta)? {
        OracleOutcome::Makespan(m) => Ok(m <= eta),
        OracleOutcome::UnsolvableWithinCap { .. } => Ok(false),
    }
}

/// An optimal witness solution reconstructed from BFS parent pointers, when
/// one exists within the cap.
pub fn oracle_solution(
    inst: &CpfInstance,
    cap: usize,
) -> Result<Option<Solution>, OracleError> {
    let search = bfs(inst, cap)?;
    let OracleOutcome::Makespan(makespan) = search.outcome else {
        return Ok(None);
    };
    let n = inst.graph.vertex_count();
    let goal_key = pack(inst.goal.positions(), n);
    let mut keys = vec![goal_key];
    let mut key = goal_key;
    for _ in 0..makespan {
        key = search.parents[&key];
        keys.push(key);
    }
    keys.reverse();
    let steps = keys
        .into_iter()
        .map(|k| {
            Arrangement::new(unpack(k, n, inst.agent_count()), &inst.graph)
                .expect("packed states are in range")
        })
        .collect();
    Ok(Some(Solution::new(steps)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{metrics, validate_solution, Graph};

    fn p3() -> CpfInstance {
        let graph = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let initial = Arrangement::new(vec![0], &graph).unwrap();
        let goal = Arrangement::new(vec![2], &graph).unwrap();
        CpfInstance::new(graph, initial, goal).unwrap()
    }

    /// Cycle v1-v2-v3-v4 with a1: v1 -> v2 and a2: v2 -> v3.
    fn c4() -> CpfInstance {
        let graph = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let initial = Arrangement::new(vec![0, 1], &graph).unwrap();
        let goal = Arrangement::new(vec![1, 2], &graph).unwrap();
        CpfInstance::new(graph, initial, goal).unwrap()
    }

    /// Two agents filling a 2-path with swapped goals: frozen instance.
    fn swap2_p2() -> CpfInstance {
        let graph = Graph::new(2, [(0, 1)]).unwrap();
        let initial = Arrangement::new(vec![0, 1], &graph).unwrap();
        let goal = Arrangement::new(vec![1, 0], &graph).unwrap();
        CpfInstance::new(graph, initial, goal).unwrap()
    }

    #[test]
    fn single_agent_makespan_is_graph_distance() {
        assert_eq!(
            oracle_makespan(&p3(), 10).unwrap(),
            OracleOutcome::Makespan(2)
        );
    }

    #[test]
    fn c4_instance_needs_two_steps() {
        // a1 cannot enter v2 while a2 still occupies it, so a2 steps aside
        // first; hand enumeration over the 12 injective placements confirms
        // both the bound and reachability.
        assert_eq!(
            oracle_makespan(&c4(), 10).unwrap(),
            OracleOutcome::Makespan(2)
        );
        let witness = oracle_solution(&c4(), 10).unwrap().unwrap();
        validate_solution(&witness, &c4()).unwrap();
        let m = metrics(&witness);
        assert_eq!(m.makespan, 2);
        assert_eq!(m.total_moves, 2);
    }

    #[test]
    fn c4_reachable_space_is_all_twelve_placements() {
        // Two agents on a 4-cycle: 4 * 3 ordered injective placements, all
        // reachable from the initial one.
        let inst = c4();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![inst.initial.positions().to_vec()];
        seen.insert(inst.initial.positions().to_vec());
        while let Some(state) = stack.pop() {
            for_each_successor(&inst, &state, &mut |succ| {
                if seen.insert(succ.to_vec()) {
                    stack.push(succ.to_vec());
                }
            });
        }
        assert_eq!(seen.len(), 12);
        assert!(seen.iter().all(|s| s[0] != s[1]));
    }

    #[test]
    fn swap_on_full_path_has_no_successors() {
        let outcome = oracle_makespan(&swap2_p2(), 10).unwrap();
        assert_eq!(
            outcome,
            OracleOutcome::UnsolvableWithinCap {
                reachable: 1,
                exhausted: true
            }
        );
    }

    #[test]
    fn simultaneous_moves_are_generated() {
        // Two agents on disjoint 2-paths must move in parallel: makespan 1,
        // not 2.
        let graph = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let initial = Arrangement::new(vec![0, 2], &graph).unwrap();
        let goal = Arrangement::new(vec![1, 3], &graph).unwrap();
        let inst = CpfInstance::new(graph, initial, goal).unwrap();
        assert_eq!(
            oracle_makespan(&inst, 10).unwrap(),
            OracleOutcome::Makespan(1)
        );
    }

    #[test]
    fn decision_variant_thresholds() {
        let inst = p3();
        assert!(!oracle_decision(&inst, 1).unwrap());
        assert!(oracle_decision(&inst, 2).unwrap());
        assert!(oracle_decision(&inst, 3).unwrap());
    }

    #[test]
    fn identity_instance_at_eta_zero() {
        let graph = Graph::new(2, [(0, 1)]).unwrap();
        let a = Arrangement::new(vec![0], &graph).unwrap();
        let inst = CpfInstance::new(graph, a.clone(), a).unwrap();
        assert!(oracle_decision(&inst, 0).unwrap());
        assert_eq!(
            oracle_makespan(&inst, 0).unwrap(),
            OracleOutcome::Makespan(0)
        );
    }

    #[test]
    fn swap_decision_false_for_all_eta() {
        for eta in 0..=10 {
            assert!(!oracle_decision(&swap2_p2(), eta).unwrap());
        }
    }

    #[test]
    fn oracle_witness_is_always_valid() {
        for inst in [p3(), c4()] {
            let sol = oracle_solution(&inst, 20).unwrap().unwrap();
            validate_solution(&sol, &inst).unwrap();
        }
    }

    #[test]
    fn state_budget_is_enforced() {
        // 30 vertices, 6 agents: 30^6 = 7.29e8 exceeds the budget.
        let graph = Graph::new(30, (0..29).map(|i| (i, i + 1))).unwrap();
        let initial = Arrangement::new((0..6).collect(), &graph).unwrap();
        let goal = Arrangement::new((24..30).collect(), &graph).unwrap();
        let inst = CpfInstance::new(graph, initial, goal).unwrap();
        assert!(matches!(
            oracle_makespan(&inst, 5),
            Err(OracleError::StateSpaceTooLarge(_))
        ));
    }
}
