//! Temporary timing probe (deleted before final).

use std::time::Instant;

use cpf_core::bench::{generate_grid_instance, GridSpec};
use cpf_core::encodings::{encode_stats, EncodingKind};

#[test]
#[ignore]
fn probe_largest_cell() {
    let spec = GridSpec {
        width: 12,
        height: 12,
        obstacle_fraction: 0.2,
        agent_count: 64,
        seed: 0,
    };
    let inst = generate_grid_instance(&spec).unwrap();
    for kind in EncodingKind::ALL {
        let t = Instant::now();
        let stats = encode_stats(&inst, 24, kind);
        println!(
            "{kind:>13}: vars={:>9} clauses={:>10} len={:.3} in {:?}",
            stats.variables,
            stats.clauses,
            stats.mean_clause_length(),
            t.elapsed()
        );
    }
}
