//! Occupancy-based encoding over bit vectors.
//!
//! Each vertex carries, per layer, the index of its occupant (0 = vacant) in
//! a bit vector of width `ceil(log2(mu + 1))`, plus a transit action for
//! every non-final layer: value 0 means nothing happens at the vertex, values
//! `1..=deg` send the occupant to the k-th neighbor, and values
//! `deg+1..=2*deg` receive an agent from the (k - deg)-th neighbor.
//! Tseitin auxiliaries name vertex emptiness, cross-layer occupant copies,
//! and individual transit values; action consequences are then short clauses
//! over the auxiliaries. Occupant values only propagate and never merge, so
//! pinning both boundary layers makes models correspond exactly to valid
//! move sequences.

use std::collections::HashMap;

use super::{families, Builder};
use crate::cnf::{
    const_eq, forbid_extra_states, lit, var_eq_guarded, width_for_domain, BitVec, Lit,
    VarKey,
};
use crate::model::CpfInstance;

struct Layout {
    /// occupant[layer][vertex]
    occupant: Vec<Vec<BitVec>>,
    /// transit[layer][vertex], layers 0..eta
    transit: Vec<Vec<BitVec>>,
    /// empty[layer][vertex] -> "vertex holds no agent at layer"
    empty: Vec<Vec<Lit>>,
    /// copy[layer][(from, to)] -> "occupant of from at layer equals
    /// occupant of to at layer + 1"
    copy: Vec<HashMap<(usize, usize), Lit>>,
    /// action[layer][vertex][value] -> "transit of vertex at layer == value"
    action: Vec<Vec<Vec<Lit>>>,
}

fn allocate(builder: &mut Builder, inst: &CpfInstance, eta: usize) -> Layout {
    let n = inst.graph.vertex_count();
    let occupant_width = width_for_domain(inst.agent_count() + 1);

    let mut layout = Layout {
        occupant: Vec::with_capacity(eta + 1),
        transit: Vec::with_capacity(eta),
        empty: Vec::with_capacity(eta),
        copy: Vec::with_capacity(eta),
        action: Vec::with_capacity(eta),
    };

    for layer in 0..=eta {
        layout.occupant.push(
            (0..n)
                .map(|vertex| {
                    builder.alloc_bits(occupant_width, |bit| VarKey::Occupant {
                        vertex,
                        layer,
                        bit,
                    })
                })
                .collect(),
        );
        if layer == eta {
            break;
        }
        layout.transit.push(
            (0..n)
                .map(|vertex| {
                    let width = width_for_domain(2 * inst.graph.degree(vertex) + 1);
                    builder.alloc_bits(width, |bit| VarKey::Transit { vertex, layer, bit })
                })
                .collect(),
        );
        layout.empty.push(
            (0..n)
                .map(|vertex| lit(builder.alloc(VarKey::AuxEmpty { vertex, layer }), true))
                .collect(),
        );
        let mut copies = HashMap::new();
        for from in 0..n {
            copies.insert(
                (from, from),
                lit(builder.alloc(VarKey::AuxCopy { from, to: from, layer }), true),
            );
            for &to in inst.graph.neighbors(from) {
                copies.insert(
                    (from, to),
                    lit(builder.alloc(VarKey::AuxCopy { from, to, layer }), true),
                );
            }
        }
        layout.copy.push(copies);
        layout.action.push(
            (0..n)
                .map(|vertex| {
                    (0..=2 * inst.graph.degree(vertex))
                        .map(|action| {
                            lit(
                                builder.alloc(VarKey::AuxTransit { vertex, layer, action }),
                                true,
                            )
                        })
                        .collect()
                })
                .collect(),
        );
    }
    layout
}

pub(super) fn build(builder: &mut Builder, inst: &CpfInstance, eta: usize) {
    let n = inst.graph.vertex_count();
    let mu = inst.agent_count();
    let layout = allocate(builder, inst, eta);

    // Boundary layers: every vertex's occupant is pinned, occupied or not.
    builder.family(families::BOUNDARY);
    for (layer, arrangement) in [(0, &inst.initial), (eta, &inst.goal)] {
        let occupants = arrangement.occupant_map(n);
        for vertex in 0..n {
            let value = occupants[vertex].map_or(0, |agent| agent + 1);
            builder.units(const_eq(&layout.occupant[layer][vertex], value));
        }
    }

    builder.family(families::DOMAIN);
    for layer in 0..=eta {
        for vertex in 0..n {
            builder.clause_set(forbid_extra_states(
                &layout.occupant[layer][vertex],
                mu + 1,
            ));
        }
    }
    for layer in 0..eta {
        for vertex in 0..n {
            builder.clause_set(forbid_extra_states(
                &layout.transit[layer][vertex],
                2 * inst.graph.degree(vertex) + 1,
            ));
        }
    }

    // Emptiness auxiliaries: implication-only link suffices because they
    // appear only positively in action consequences.
    builder.family(families::EMPTY_LINK);
    for layer in 0..eta {
        for vertex in 0..n {
            let guard = layout.empty[layer][vertex];
            for unit in const_eq(&layout.occupant[layer][vertex], 0) {
                builder.clause(&[-guard, unit]);
            }
        }
    }

    // Copy auxiliaries: implication-only link, same reasoning.
    builder.family(families::COPY_LINK);
    for layer in 0..eta {
        for from in 0..n {
            let mut targets: Vec<usize> = vec![from];
            targets.extend_from_slice(inst.graph.neighbors(from));
            targets.sort_unstable();
            for to in targets {
                let guard = layout.copy[layer][&(from, to)];
                builder.clause_set(var_eq_guarded(
                    guard,
                    &layout.occupant[layer][from],
                    &layout.occupant[layer + 1][to],
                ));
            }
        }
    }

    // Transit auxiliaries appear on both sides of implications, so they are
    // linked by full equivalences.
    builder.family(families::TRANSIT_LINK);
    for layer in 0..eta {
        for vertex in 0..n {
            for (action, &guard) in layout.action[layer][vertex].iter().enumerate() {
                let value_units = const_eq(&layout.transit[layer][vertex], action);
                for &unit in &value_units {
                    builder.clause(&[-guard, unit]);
                }
                let mut back: Vec<Lit> = vec![guard];
                back.extend(value_units.iter().map(|&u| -u));
                builder.clause(&back);
            }
        }
    }

    // Action 0: the occupant (or vacancy) persists into the next layer.
    builder.family(families::NOOP_FRAME);
    for layer in 0..eta {
        for vertex in 0..n {
            builder.clause(&[
                -layout.action[layer][vertex][0],
                layout.copy[layer][&(vertex, vertex)],
            ]);
        }
    }

    // Sending: the target neighbor is empty, takes over the occupant, and
    // simultaneously commits to the matching receive action.
    builder.family(families::LEAVE);
    for layer in 0..eta {
        for vertex in 0..n {
            for rank in 1..=inst.graph.degree(vertex) {
                let to = inst.graph.neighbor_by_rank(vertex, rank);
                let guard = layout.action[layer][vertex][rank];
                let reverse_rank = inst
                    .graph
                    .neighbor_rank(to, vertex)
                    .expect("neighbor relation is symmetric");
                builder.clause(&[-guard, layout.empty[layer][to]]);
                builder.clause(&[-guard, layout.copy[layer][&(vertex, to)]]);
                builder.clause(&[
                    -guard,
                    layout.action[layer][to][reverse_rank + inst.graph.degree(to)],
                ]);
            }
        }
    }

    // Receiving: the source neighbor commits to the matching send action.
    builder.family(families::ARRIVE);
    for layer in 0..eta {
        for vertex in 0..n {
            let degree = inst.graph.degree(vertex);
            for rank in 1..=degree {
                let from = inst.graph.neighbor_by_rank(vertex, rank);
                let guard = layout.action[layer][vertex][degree + rank];
                let reverse_rank = inst
                    .graph
                    .neighbor_rank(from, vertex)
                    .expect("neighbor relation is symmetric");
                builder.clause(&[-guard, layout.action[layer][from][reverse_rank]]);
            }
        }
    }
}
