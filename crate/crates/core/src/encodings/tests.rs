use super::families;
use super::*;
use crate::cnf::{const_eq, write_dimacs};
use crate::model::{Arrangement, CpfInstance, Graph};
use crate::satsolver::{embedded_dpll, SatResult};

fn p3() -> CpfInstance {
    let graph = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
    let initial = Arrangement::new(vec![0], &graph).unwrap();
    let goal = Arrangement::new(vec![2], &graph).unwrap();
    CpfInstance::new(graph, initial, goal).unwrap()
}

fn c4() -> CpfInstance {
    let graph = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    let initial = Arrangement::new(vec![0, 1], &graph).unwrap();
    let goal = Arrangement::new(vec![1, 2], &graph).unwrap();
    CpfInstance::new(graph, initial, goal).unwrap()
}

fn full_grid(width: usize, height: usize, agents: usize, seed: u64) -> CpfInstance {
    crate::bench::generate_grid_instance(&crate::bench::GridSpec {
        width,
        height,
        obstacle_fraction: 0.0,
        agent_count: agents,
        seed,
    })
    .unwrap()
}

fn count_keys(enc: &EncodedInstance, pred: impl Fn(&VarKey) -> bool) -> u64 {
    enc.varmap.iter().filter(|(_, k)| pred(k)).count() as u64
}

fn solve_with_model(enc: &EncodedInstance) -> Vec<bool> {
    match embedded_dpll(&enc.cnf) {
        SatResult::Sat(model) => model,
        other => panic!("expected SAT, got {other:?}"),
    }
}

#[test]
fn inverse_visible_variable_count_matches_the_closed_form() {
    for (inst, eta) in [(p3(), 2), (c4(), 3), (full_grid(3, 3, 2, 1), 4)] {
        let enc = encode(&inst, eta, EncodingKind::Inverse);
        let n = inst.graph.vertex_count();
        let mu = inst.agent_count();
        let occupant_width = crate::cnf::width_for_domain(mu + 1) as u64;
        let transit_bits: u64 = (0..n)
            .map(|v| {
                crate::cnf::width_for_domain(2 * inst.graph.degree(v) + 1) as u64
            })
            .sum();
        let expected = (eta as u64 + 1) * n as u64 * occupant_width
            + eta as u64 * transit_bits;
        let visible = count_keys(&enc, |k| {
            matches!(k, VarKey::Occupant { .. } | VarKey::Transit { .. })
        });
        assert_eq!(visible, expected);
    }
}

#[test]
fn inverse_p3_has_twenty_three_visible_variables() {
    // Occupant bits: 3 layers x 3 vertices x 1 bit; transit bits per inner
    // layer: widths 2 + 3 + 2 for degrees 1, 2, 1.
    let enc = encode(&p3(), 2, EncodingKind::Inverse);
    let visible = count_keys(&enc, |k| {
        matches!(k, VarKey::Occupant { .. } | VarKey::Transit { .. })
    });
    assert_eq!(visible, 23);
}

#[test]
fn inverse_auxiliary_counts() {
    let inst = c4();
    let eta = 3u64;
    let enc = encode(&inst, eta as usize, EncodingKind::Inverse);
    let n = inst.graph.vertex_count() as u64;
    let m = inst.graph.edge_count() as u64;
    assert_eq!(
        count_keys(&enc, |k| matches!(k, VarKey::AuxEmpty { .. })),
        eta * n
    );
    assert_eq!(
        count_keys(&enc, |k| matches!(k, VarKey::AuxCopy { .. })),
        eta * (2 * m + n)
    );
    // One action value per transit state: 2 deg(v) + 1 per vertex.
    assert_eq!(
        count_keys(&enc, |k| matches!(k, VarKey::AuxTransit { .. })),
        eta * (4 * m + n)
    );
}

#[test]
fn alldifferent_variable_counts_match_the_closed_form() {
    for (inst, eta) in [(c4(), 3), (full_grid(3, 3, 3, 5), 4)] {
        let enc = encode(&inst, eta, EncodingKind::AllDifferent);
        let n = inst.graph.vertex_count() as u64;
        let mu = inst.agent_count() as u64;
        let eta = eta as u64;
        let width = crate::cnf::width_for_domain(n as usize) as u64;
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::AgentPos { .. })),
            (eta + 1) * mu * width
        );
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::AuxAtVertex { .. })),
            (eta + 1) * mu * n
        );
        // Every inequality gadget costs 2*width ternary clauses plus one
        // clause over its fresh difference bits.
        let same_pairs = mu * (mu - 1) / 2;
        let ordered_pairs = mu * (mu - 1);
        assert_eq!(
            enc.stats.family(families::LAYER_DISTINCT),
            (eta + 1) * same_pairs * (2 * width + 1)
        );
        assert_eq!(
            enc.stats.family(families::TARGET_VACANCY),
            eta * ordered_pairs * (2 * width + 1)
        );
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::AuxDiffSame { .. })),
            (eta + 1) * same_pairs * width
        );
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::AuxDiffMove { .. })),
            eta * ordered_pairs * width
        );
    }
}

#[test]
fn matching_variable_counts_match_the_directed_arc_layout() {
    for (inst, eta) in [(c4(), 3), (full_grid(3, 3, 2, 9), 4)] {
        let enc = encode(&inst, eta, EncodingKind::Matching);
        let n = inst.graph.vertex_count() as u64;
        let m = inst.graph.edge_count() as u64;
        let mu = inst.agent_count() as u64;
        let eta = eta as u64;
        let width = crate::cnf::width_for_domain(mu as usize + 1) as u64;
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::FlowNode { .. })),
            (eta + 1) * n
        );
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::FlowWait { .. })),
            eta * n
        );
        // Two directed arc variables per undirected edge per layer step:
        // the flow between layers is directed.
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::FlowArc { .. })),
            eta * 2 * m
        );
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::Occupant { .. })),
            (eta + 1) * n * width
        );
    }
}

#[test]
fn direct_variable_count_is_exact() {
    // (eta + 1) * mu * n, nothing else.
    let enc = encode(&p3(), 2, EncodingKind::Direct);
    assert_eq!(enc.stats.variables, 9);
    assert_eq!(enc.cnf.var_count(), 9);
    for (inst, eta) in [(c4(), 3), (full_grid(4, 4, 3, 2), 5)] {
        let enc = encode(&inst, eta, EncodingKind::Direct);
        let expected =
            (eta as u64 + 1) * inst.agent_count() as u64 * inst.graph.vertex_count() as u64;
        assert_eq!(enc.stats.variables, expected);
    }
}

#[test]
fn direct_move_vacancy_family_is_two_eta_mu_squared_edges() {
    for (inst, eta) in [(c4(), 3), (full_grid(3, 3, 2, 3), 4)] {
        let enc = encode(&inst, eta, EncodingKind::Direct);
        let expected = 2
            * eta as u64
            * (inst.agent_count() as u64).pow(2)
            * inst.graph.edge_count() as u64;
        assert_eq!(enc.stats.family(families::MOVE_VACANCY), expected);
    }
}

#[test]
fn simplified_families_match_their_closed_forms() {
    for (inst, eta) in [(c4(), 3), (full_grid(3, 3, 2, 3), 4)] {
        let enc = encode(&inst, eta, EncodingKind::Simplified);
        let n = inst.graph.vertex_count() as u64;
        let m = inst.graph.edge_count() as u64;
        let mu = inst.agent_count() as u64;
        let eta = eta as u64;
        assert_eq!(
            enc.stats.family(families::MOVE_VACANCY),
            2 * eta * mu * m
        );
        assert_eq!(
            enc.stats.family(families::VACANCY_LINK),
            (eta + 1) * mu * n
        );
        assert_eq!(
            count_keys(&enc, |k| matches!(k, VarKey::Vacant { .. })),
            (eta + 1) * n
        );
    }
}

#[test]
fn simplified_is_smaller_than_direct_with_two_or_more_agents() {
    for seed in 0..5 {
        for (w, h, mu) in [(3, 3, 2), (3, 3, 3), (4, 4, 2), (4, 4, 4)] {
            let inst = full_grid(w, h, mu, seed);
            for eta in 1..=3 {
                let direct = encode_stats(&inst, eta, EncodingKind::Direct);
                let simplified = encode_stats(&inst, eta, EncodingKind::Simplified);
                assert!(
                    simplified.clauses < direct.clauses,
                    "{w}x{h} mu={mu} eta={eta}: {} vs {}",
                    simplified.clauses,
                    direct.clauses
                );
            }
        }
    }
}

#[test]
fn every_encoding_decodes_the_unique_p3_walk() {
    let inst = p3();
    for kind in EncodingKind::ALL {
        let enc = encode(&inst, 2, kind);
        let model = solve_with_model(&enc);
        let solution = decode(&enc, &model, &inst).unwrap();
        let positions: Vec<usize> =
            solution.steps.iter().map(|a| a.vertex_of(0)).collect();
        assert_eq!(positions, vec![0, 1, 2], "{kind}");
    }
}

#[test]
fn every_encoding_solves_c4_at_two_steps_but_not_one() {
    let inst = c4();
    for kind in EncodingKind::ALL {
        let infeasible = encode(&inst, 1, kind);
        assert_eq!(
            embedded_dpll(&infeasible.cnf),
            SatResult::Unsat,
            "{kind} at eta 1"
        );
        let enc = encode(&inst, 2, kind);
        let model = solve_with_model(&enc);
        let solution = decode(&enc, &model, &inst).unwrap();
        assert_eq!(solution.makespan(), 2, "{kind}");
    }
}

#[test]
fn zero_agent_instance_encodes_and_decodes_to_empty_arrangements() {
    let graph = Graph::new(2, [(0, 1)]).unwrap();
    let empty = Arrangement::new(vec![], &graph).unwrap();
    let inst = CpfInstance::new(graph, empty.clone(), empty).unwrap();
    for kind in EncodingKind::ALL {
        let enc = encode(&inst, 2, kind);
        let model = solve_with_model(&enc);
        let solution = decode(&enc, &model, &inst).unwrap();
        assert_eq!(solution.steps.len(), 3, "{kind}");
        assert!(solution.steps.iter().all(|a| a.agent_count() == 0));
    }
}

#[test]
fn alldifferent_rejects_two_agents_pinned_to_one_vertex() {
    // Force both agents onto vertex 2 in the middle layer by unit clauses;
    // the pairwise layer inequalities must refute it at every bound.
    for eta in 2..=4 {
        let inst = c4();
        let mut enc = encode(&inst, eta, EncodingKind::AllDifferent);
        for agent in 0..2 {
            for lit in const_eq(&enc.agent_pos_bits(agent, 1), 2) {
                enc.cnf.add_clause(&[lit]);
            }
        }
        assert_eq!(embedded_dpll(&enc.cnf), SatResult::Unsat, "eta {eta}");
    }
}

#[test]
fn matching_rejects_the_one_step_swap_arc_pair() {
    // Opposite directed arcs over one edge in the same step contradict the
    // fresh-target clauses, whatever else the flow does.
    let inst = c4();
    let base = encode(&inst, 2, EncodingKind::Matching);
    assert!(embedded_dpll(&base.cnf).is_sat());

    let mut enc = encode(&inst, 2, EncodingKind::Matching);
    for (from, to) in [(0usize, 1usize), (1, 0)] {
        let var = enc
            .varmap
            .var(&VarKey::FlowArc { from, to, layer: 1 })
            .unwrap();
        enc.cnf.add_clause(&[var as i32]);
    }
    assert_eq!(embedded_dpll(&enc.cnf), SatResult::Unsat);
}

#[test]
fn matching_rejects_flows_that_cross_connect_agents() {
    // A flow sending agent 1's start to agent 2's goal (with agent 2
    // waiting) is a perfectly good anonymous flow, but the mapping part
    // must refute it.
    let inst = c4();
    let mut enc = encode(&inst, 2, EncodingKind::Matching);
    let units = [
        VarKey::FlowArc { from: 0, to: 3, layer: 0 },
        VarKey::FlowArc { from: 3, to: 2, layer: 1 },
        VarKey::FlowWait { vertex: 1, layer: 0 },
        VarKey::FlowWait { vertex: 1, layer: 1 },
    ];
    for key in units {
        let var = enc.varmap.var(&key).unwrap();
        enc.cnf.add_clause(&[var as i32]);
    }
    assert_eq!(embedded_dpll(&enc.cnf), SatResult::Unsat);
}

#[test]
fn distance_heuristic_adds_the_p3_unit_prunes() {
    let inst = p3();
    let enc = encode(&inst, 2, EncodingKind::Direct);
    let before = enc.stats.clauses;
    let enc = apply_distance_heuristic(enc, &crate::expansion::reach_windows(&inst, 2));
    assert!(enc.stats.clauses > before);
    assert_eq!(
        enc.stats.family(families::DISTANCE_PRUNING),
        enc.stats.clauses - before
    );
    // Agent 1 cannot sit on v3 at layer 0 nor on v1 at layer 2.
    let far = enc
        .varmap
        .var(&VarKey::AgentAt { agent: 0, vertex: 2, layer: 0 })
        .unwrap();
    let late = enc
        .varmap
        .var(&VarKey::AgentAt { agent: 0, vertex: 0, layer: 2 })
        .unwrap();
    let units: Vec<Vec<i32>> = enc
        .cnf
        .clauses()
        .filter(|c| c.len() == 1)
        .map(|c| c.to_vec())
        .collect();
    assert!(units.contains(&vec![-(far as i32)]));
    assert!(units.contains(&vec![-(late as i32)]));
}

#[test]
fn distance_heuristic_preserves_satisfiability_on_small_instances() {
    for seed in 0..4 {
        let inst = full_grid(3, 3, 2, seed);
        for kind in EncodingKind::ALL {
            for eta in 1..=4 {
                let plain = encode(&inst, eta, kind);
                let pruned = apply_distance_heuristic(
                    plain.clone(),
                    &crate::expansion::reach_windows(&inst, eta),
                );
                assert_eq!(
                    embedded_dpll(&plain.cnf).is_sat(),
                    embedded_dpll(&pruned.cnf).is_sat(),
                    "{kind} seed {seed} eta {eta}"
                );
            }
        }
    }
}

#[test]
fn encoding_is_byte_deterministic() {
    let inst = full_grid(3, 3, 3, 77);
    for kind in EncodingKind::ALL {
        let mut first = Vec::new();
        let mut second = Vec::new();
        let mut first_map = Vec::new();
        let mut second_map = Vec::new();
        let a = encode(&inst, 3, kind);
        let b = encode(&inst, 3, kind);
        write_dimacs(&a.cnf, &mut first).unwrap();
        write_dimacs(&b.cnf, &mut second).unwrap();
        a.varmap.serialize(&mut first_map).unwrap();
        b.varmap.serialize(&mut second_map).unwrap();
        assert_eq!(first, second, "{kind}");
        assert_eq!(first_map, second_map, "{kind}");
    }
}

#[test]
fn stats_only_build_matches_the_stored_build() {
    for (inst, eta) in [(p3(), 2), (c4(), 3), (full_grid(4, 4, 3, 8), 4)] {
        for kind in EncodingKind::ALL {
            let stored = encode(&inst, eta, kind);
            let stats = encode_stats(&inst, eta, kind);
            assert_eq!(stats, stored.stats, "{kind}");
            let recounted = stored.recount();
            assert_eq!(recounted.variables, stored.stats.variables, "{kind}");
            assert_eq!(recounted.clauses, stored.stats.clauses, "{kind}");
            assert_eq!(
                recounted.total_literals, stored.stats.total_literals,
                "{kind}"
            );
        }
    }
}

#[test]
fn family_counts_cover_every_clause() {
    for kind in EncodingKind::ALL {
        let enc = encode(&c4(), 3, kind);
        let family_total: u64 = enc.stats.families.values().sum();
        assert_eq!(family_total, enc.stats.clauses, "{kind}");
    }
}

#[test]
fn encoding_names_round_trip() {
    for kind in EncodingKind::ALL {
        assert_eq!(kind.name().parse::<EncodingKind>().unwrap(), kind);
    }
    assert!("nonsense".parse::<EncodingKind>().is_err());
}
