//! Flow-plus-mapping encoding.
//!
//! The flow part treats the layered expansion as a unit-capacity network:
//! a saturation flag per vertex and layer, a wait arc per vertex between
//! consecutive layers, and two directed move arcs per undirected edge and
//! layer (the flow between layers is directed, so each unordered edge needs
//! one variable per direction of use). Arc selection propagates saturation,
//! each saturated vertex has exactly one incoming and one outgoing arc, and
//! a move arc's target must be unsaturated before the step, which rules out
//! swaps and train-like chains.
//!
//! The mapping part names the occupant of every vertex per layer in a bit
//! vector and copies it along every selected arc (wait arcs included, so
//! identities cannot drift while standing still); nonzero occupancy forces
//! saturation. Boundary layers pin both parts.

use std::collections::HashMap;

use super::{families, Builder};
use crate::cnf::{const_eq, lit, var_eq_guarded, width_for_domain, BitVec, Lit, VarKey};
use crate::model::CpfInstance;

struct Layout {
    /// node[layer][vertex]: vertex is saturated by the flow.
    node: Vec<Vec<Lit>>,
    /// wait[layer][vertex]: wait arc selected, layers 0..eta.
    wait: Vec<Vec<Lit>>,
    /// arc[layer][(from, to)]: directed move arc selected, layers 0..eta.
    arc: Vec<HashMap<(usize, usize), Lit>>,
    /// occupant[layer][vertex]
    occupant: Vec<Vec<BitVec>>,
}

pub(super) fn build(builder: &mut Builder, inst: &CpfInstance, eta: usize) {
    let n = inst.graph.vertex_count();
    let occupant_width = width_for_domain(inst.agent_count() + 1);

    let mut layout = Layout {
        node: Vec::with_capacity(eta + 1),
        wait: Vec::with_capacity(eta),
        arc: Vec::with_capacity(eta),
        occupant: Vec::with_capacity(eta + 1),
    };
    for layer in 0..=eta {
        layout.node.push(
            (0..n)
                .map(|vertex| lit(builder.alloc(VarKey::FlowNode { vertex, layer }), true))
                .collect(),
        );
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
        layout.wait.push(
            (0..n)
                .map(|vertex| lit(builder.alloc(VarKey::FlowWait { vertex, layer }), true))
                .collect(),
        );
        let mut arcs = HashMap::new();
        for from in 0..n {
            for &to in inst.graph.neighbors(from) {
                arcs.insert(
                    (from, to),
                    lit(builder.alloc(VarKey::FlowArc { from, to, layer }), true),
                );
            }
        }
        layout.arc.push(arcs);
    }

    // Boundary: occupant value and saturation flag of every vertex.
    builder.family(families::BOUNDARY);
    for (layer, arrangement) in [(0, &inst.initial), (eta, &inst.goal)] {
        let occupants = arrangement.occupant_map(n);
        for vertex in 0..n {
            match occupants[vertex] {
                Some(agent) => {
                    builder.units(const_eq(&layout.occupant[layer][vertex], agent + 1));
                    builder.unit(layout.node[layer][vertex]);
                }
                None => {
                    builder.units(const_eq(&layout.occupant[layer][vertex], 0));
                    builder.unit(-layout.node[layer][vertex]);
                }
            }
        }
    }

    // Selected arcs saturate both endpoints.
    builder.family(families::ARC_ENDPOINTS);
    for layer in 0..eta {
        for vertex in 0..n {
            let wait = layout.wait[layer][vertex];
            builder.clause(&[-wait, layout.node[layer][vertex]]);
            builder.clause(&[-wait, layout.node[layer + 1][vertex]]);
        }
        for from in 0..n {
            for &to in inst.graph.neighbors(from) {
                let arc = layout.arc[layer][&(from, to)];
                builder.clause(&[-arc, layout.node[layer][from]]);
                builder.clause(&[-arc, layout.node[layer + 1][to]]);
            }
        }
    }

    // At most one outgoing and one incoming arc per vertex, rewritten as
    // pairwise exclusions over the wait arc and the incident move arcs.
    builder.family(families::OUTGOING_AMO);
    for layer in 0..eta {
        for vertex in 0..n {
            let mut outgoing = vec![layout.wait[layer][vertex]];
            outgoing.extend(
                inst.graph
                    .neighbors(vertex)
                    .iter()
                    .map(|&to| layout.arc[layer][&(vertex, to)]),
            );
            for i in 0..outgoing.len() {
                for j in (i + 1)..outgoing.len() {
                    builder.clause(&[-outgoing[i], -outgoing[j]]);
                }
            }
        }
    }
    builder.family(families::INCOMING_AMO);
    for layer in 0..eta {
        for vertex in 0..n {
            let mut incoming = vec![layout.wait[layer][vertex]];
            incoming.extend(
                inst.graph
                    .neighbors(vertex)
                    .iter()
                    .map(|&from| layout.arc[layer][&(from, vertex)]),
            );
            for i in 0..incoming.len() {
                for j in (i + 1)..incoming.len() {
                    builder.clause(&[-incoming[i], -incoming[j]]);
                }
            }
        }
    }

    // Saturated vertices are on some path: one outgoing arc below the last
    // layer, one incoming arc above the first.
    builder.family(families::OUTGOING_SUPPORT);
    for layer in 0..eta {
        for vertex in 0..n {
            let mut clause = vec![-layout.node[layer][vertex], layout.wait[layer][vertex]];
            clause.extend(
                inst.graph
                    .neighbors(vertex)
                    .iter()
                    .map(|&to| layout.arc[layer][&(vertex, to)]),
            );
            builder.clause(&clause);
        }
    }
    builder.family(families::INCOMING_SUPPORT);
    for layer in 0..eta {
        for vertex in 0..n {
            let mut clause = vec![
                -layout.node[layer + 1][vertex],
                layout.wait[layer][vertex],
            ];
            clause.extend(
                inst.graph
                    .neighbors(vertex)
                    .iter()
                    .map(|&from| layout.arc[layer][&(from, vertex)]),
            );
            builder.clause(&clause);
        }
    }

    // Non-overlap: a move's target is untouched by the flow before the step.
    builder.family(families::MOVE_FRESH_TARGET);
    for layer in 0..eta {
        for from in 0..n {
            for &to in inst.graph.neighbors(from) {
                builder.clause(&[-layout.arc[layer][&(from, to)], -layout.node[layer][to]]);
            }
        }
    }

    // Mapping: occupants ride the selected arcs, wait arcs included.
    builder.family(families::ARC_AGENT_COPY);
    for layer in 0..eta {
        for vertex in 0..n {
            builder.clause_set(var_eq_guarded(
                layout.wait[layer][vertex],
                &layout.occupant[layer][vertex],
                &layout.occupant[layer + 1][vertex],
            ));
        }
        for from in 0..n {
            for &to in inst.graph.neighbors(from) {
                builder.clause_set(var_eq_guarded(
                    layout.arc[layer][&(from, to)],
                    &layout.occupant[layer][from],
                    &layout.occupant[layer + 1][to],
                ));
            }
        }
    }

    // An occupied vertex is saturated by the flow.
    builder.family(families::OCCUPANCY_FLOW);
    for layer in 0..=eta {
        for vertex in 0..n {
            for bit in 0..layout.occupant[layer][vertex].width() {
                builder.clause(&[
                    -lit(layout.occupant[layer][vertex].bit(bit), true),
                    layout.node[layer][vertex],
                ]);
            }
        }
    }
}
