//! Direct one-variable-per-placement encoding and its simplified variant.
//!
//! One propositional variable per (agent, vertex, layer) states that the
//! agent occupies the vertex at that layer. Placement cardinality is pairwise,
//! movement is restricted to closed neighborhoods in both time directions,
//! and every move requires its target to be vacant before the step. The
//! vacancy requirement is emitted per directed edge use; together with the
//! per-layer cardinality constraints this also forces sources of moves to be
//! free after the step, so the symmetric half would be redundant.
//!
//! The simplified variant routes vacancy through one auxiliary per vertex
//! and layer ("this vertex is empty"), shrinking the move family from
//! `mu` clauses per directed edge use to one and leaving mostly binary
//! clauses, which propagate well.

use super::{families, Builder};
use crate::cnf::{lit, Lit, VarKey};
use crate::model::CpfInstance;

pub(super) fn build(builder: &mut Builder, inst: &CpfInstance, eta: usize, simplified: bool) {
    let n = inst.graph.vertex_count();
    let mu = inst.agent_count();

    // placed[layer][agent][vertex]
    let mut placed: Vec<Vec<Vec<Lit>>> = Vec::with_capacity(eta + 1);
    // vacant[layer][vertex], simplified only
    let mut vacant: Vec<Vec<Lit>> = Vec::new();
    for layer in 0..=eta {
        placed.push(
            (0..mu)
                .map(|agent| {
                    (0..n)
                        .map(|vertex| {
                            lit(builder.alloc(VarKey::AgentAt { agent, vertex, layer }), true)
                        })
                        .collect()
                })
                .collect(),
        );
        if simplified {
            vacant.push(
                (0..n)
                    .map(|vertex| lit(builder.alloc(VarKey::Vacant { vertex, layer }), true))
                    .collect(),
            );
        }
    }

    // Boundary: every placement variable of the first and last layer is
    // pinned, positively or negatively.
    builder.family(families::BOUNDARY);
    for (layer, arrangement) in [(0, &inst.initial), (eta, &inst.goal)] {
        for agent in 0..mu {
            let home = arrangement.vertex_of(agent);
            for vertex in 0..n {
                let l = placed[layer][agent][vertex];
                builder.unit(if vertex == home { l } else { -l });
            }
        }
    }

    // Each agent occupies exactly one vertex per layer.
    builder.family(families::PLACEMENT_ALO);
    for layer in 0..=eta {
        for agent in 0..mu {
            builder.clause(&placed[layer][agent]);
        }
    }
    builder.family(families::PLACEMENT_AMO);
    for layer in 0..=eta {
        for agent in 0..mu {
            for u in 0..n {
                for v in (u + 1)..n {
                    builder.clause(&[-placed[layer][agent][u], -placed[layer][agent][v]]);
                }
            }
        }
    }

    // Each vertex hosts at most one agent per layer.
    builder.family(families::VERTEX_AMO);
    for layer in 0..=eta {
        for vertex in 0..n {
            for a in 0..mu {
                for b in (a + 1)..mu {
                    builder.clause(&[
                        -placed[layer][a][vertex],
                        -placed[layer][b][vertex],
                    ]);
                }
            }
        }
    }

    // Moves follow edges, in both time directions.
    builder.family(families::MOVE_ADJACENCY);
    for layer in 0..eta {
        for agent in 0..mu {
            for vertex in 0..n {
                let mut forward = vec![
                    -placed[layer][agent][vertex],
                    placed[layer + 1][agent][vertex],
                ];
                forward.extend(
                    inst.graph
                        .neighbors(vertex)
                        .iter()
                        .map(|&u| placed[layer + 1][agent][u]),
                );
                builder.clause(&forward);
                let mut backward = vec![
                    -placed[layer + 1][agent][vertex],
                    placed[layer][agent][vertex],
                ];
                backward.extend(
                    inst.graph
                        .neighbors(vertex)
                        .iter()
                        .map(|&u| placed[layer][agent][u]),
                );
                builder.clause(&backward);
            }
        }
    }

    if simplified {
        // Vacancy auxiliaries: an empty vertex hosts no agent.
        builder.family(families::VACANCY_LINK);
        for layer in 0..=eta {
            for vertex in 0..n {
                for agent in 0..mu {
                    builder.clause(&[-vacant[layer][vertex], -placed[layer][agent][vertex]]);
                }
            }
        }
        builder.family(families::MOVE_VACANCY);
        for layer in 0..eta {
            for agent in 0..mu {
                for from in 0..n {
                    for &to in inst.graph.neighbors(from) {
                        builder.clause(&[
                            -placed[layer][agent][from],
                            -placed[layer + 1][agent][to],
                            vacant[layer][to],
                        ]);
                    }
                }
            }
        }
    } else {
        builder.family(families::MOVE_VACANCY);
        for layer in 0..eta {
            for agent in 0..mu {
                for from in 0..n {
                    for &to in inst.graph.neighbors(from) {
                        for b in 0..mu {
                            builder.clause(&[
                                -placed[layer][agent][from],
                                -placed[layer + 1][agent][to],
                                -placed[layer][b][to],
                            ]);
                        }
                    }
                }
            }
        }
    }
}
