//! Location-based encoding over bit vectors.
//!
//! Each agent carries, per layer, its 0-based vertex index in a bit vector
//! of width `ceil(log2 n)`. Vertex capacity is expressed explicitly: pairwise
//! inequalities between position vectors within a layer, and between every
//! agent's next position and every other agent's current position across
//! consecutive layers (target vacancy). Moves are restricted to closed
//! neighborhoods through equality auxiliaries naming "agent a sits at
//! vertex j".

use super::{families, Builder};
use crate::cnf::{
    const_eq, forbid_extra_states, lit, var_neq, width_for_domain, BitVec, Lit, VarKey,
};
use crate::model::CpfInstance;

struct Layout {
    /// position[layer][agent]
    position: Vec<Vec<BitVec>>,
    /// at[layer][agent][vertex] -> "agent sits at vertex in this layer"
    at: Vec<Vec<Vec<Lit>>>,
}

pub(super) fn build(builder: &mut Builder, inst: &CpfInstance, eta: usize) {
    let n = inst.graph.vertex_count();
    let mu = inst.agent_count();
    let width = width_for_domain(n);

    // Allocation: layer blocks; inside a layer positions, then the
    // at-vertex auxiliaries, then the difference bits of both inequality
    // families anchored at this layer.
    let mut layout = Layout {
        position: Vec::with_capacity(eta + 1),
        at: Vec::with_capacity(eta + 1),
    };
    let mut diff_same: Vec<Vec<BitVec>> = Vec::with_capacity(eta + 1);
    let mut diff_move: Vec<Vec<BitVec>> = Vec::with_capacity(eta);
    for layer in 0..=eta {
        layout.position.push(
            (0..mu)
                .map(|agent| {
                    builder.alloc_bits(width, |bit| VarKey::AgentPos { agent, layer, bit })
                })
                .collect(),
        );
        layout.at.push(
            (0..mu)
                .map(|agent| {
                    (0..n)
                        .map(|vertex| {
                            lit(
                                builder.alloc(VarKey::AuxAtVertex { agent, vertex, layer }),
                                true,
                            )
                        })
                        .collect()
                })
                .collect(),
        );
        let mut same = Vec::new();
        for a in 0..mu {
            for b in (a + 1)..mu {
                same.push(builder.alloc_bits(width, |bit| VarKey::AuxDiffSame {
                    a,
                    b,
                    layer,
                    bit,
                }));
            }
        }
        diff_same.push(same);
        if layer < eta {
            let mut moved = Vec::new();
            for a in 0..mu {
                for b in 0..mu {
                    if a == b {
                        continue;
                    }
                    moved.push(builder.alloc_bits(width, |bit| VarKey::AuxDiffMove {
                        a,
                        b,
                        layer,
                        bit,
                    }));
                }
            }
            diff_move.push(moved);
        }
    }

    builder.family(families::BOUNDARY);
    for agent in 0..mu {
        builder.units(const_eq(
            &layout.position[0][agent],
            inst.initial.vertex_of(agent),
        ));
        builder.units(const_eq(
            &layout.position[eta][agent],
            inst.goal.vertex_of(agent),
        ));
    }

    builder.family(families::DOMAIN);
    for layer in 0..=eta {
        for agent in 0..mu {
            builder.clause_set(forbid_extra_states(&layout.position[layer][agent], n));
        }
    }

    // Equivalence links between position vectors and at-vertex auxiliaries.
    builder.family(families::POSITION_LINK);
    for layer in 0..=eta {
        for agent in 0..mu {
            for vertex in 0..n {
                let guard = layout.at[layer][agent][vertex];
                let value_units = const_eq(&layout.position[layer][agent], vertex);
                for &unit in &value_units {
                    builder.clause(&[-guard, unit]);
                }
                let mut back: Vec<Lit> = vec![guard];
                back.extend(value_units.iter().map(|&u| -u));
                builder.clause(&back);
            }
        }
    }

    // Successors are restricted to the closed neighborhood.
    builder.family(families::MOVE_ADJACENCY);
    for layer in 0..eta {
        for agent in 0..mu {
            for vertex in 0..n {
                let mut clause = vec![
                    -layout.at[layer][agent][vertex],
                    layout.at[layer + 1][agent][vertex],
                ];
                clause.extend(
                    inst.graph
                        .neighbors(vertex)
                        .iter()
                        .map(|&u| layout.at[layer + 1][agent][u]),
                );
                builder.clause(&clause);
            }
        }
    }

    // Pairwise distinctness inside each layer.
    builder.family(families::LAYER_DISTINCT);
    for layer in 0..=eta {
        let mut pair = 0;
        for a in 0..mu {
            for b in (a + 1)..mu {
                builder.clause_set(var_neq(
                    &layout.position[layer][a],
                    &layout.position[layer][b],
                    &diff_same[layer][pair],
                ));
                pair += 1;
            }
        }
    }

    // Target vacancy: an agent's next vertex differs from every other
    // agent's current vertex. Emitted for all ordered pairs; when the agent
    // stays put this is already implied by the layer inequalities, but the
    // unrestricted form keeps the family uniform.
    builder.family(families::TARGET_VACANCY);
    for layer in 0..eta {
        let mut pair = 0;
        for a in 0..mu {
            for b in 0..mu {
                if a == b {
                    continue;
                }
                builder.clause_set(var_neq(
                    &layout.position[layer + 1][a],
                    &layout.position[layer][b],
                    &diff_move[layer][pair],
                ));
                pair += 1;
            }
        }
    }
}
