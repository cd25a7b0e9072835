//! Benchmark harness: 4-connected grid instances with random obstacles and
//! random arrangements, plus encoding-size and runtime/quality studies with
//! CSV reports.
//!
//! All randomness flows through a ChaCha8 stream seeded per instance, with
//! bounded draws made by modulo rejection sampling (draw 64 bits, retry
//! while the draw falls into the final partial block, then reduce), so a
//! given `GridSpec` produces the same instance on every platform.

use std::io::{self, Write};
use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::driver::{find_optimal, DriverConfig, Precheck, SolveOutcome};
use crate::encodings::{encode_stats, EncodingKind, EncodingStats};
use crate::model::{metrics, Arrangement, CpfInstance, Graph};
use crate::oracle::{oracle_decision, OracleError};

/// Specification of one random grid instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Fraction of cells removed as obstacles; the obstacle count is
    /// `floor(fraction * width * height)`.
    pub obstacle_fraction: f64,
    pub agent_count: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, agent_count: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            obstacle_fraction: 0.20,
            agent_count,
            seed,
        }
    }

    pub fn obstacle_count(&self) -> usize {
        (self.obstacle_fraction * (self.width * self.height) as f64).floor() as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("{agents} agents do not fit into {free} free cells")]
    TooManyAgents { agents: usize, free: usize },
    #[error("grid must have at least one cell")]
    EmptyGrid,
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

/// Deterministic seeded randomness for instance generation.
struct SeededRng(ChaCha8Rng);

impl SeededRng {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform draw from `0..bound` by modulo rejection: reject the draws in
    /// the final partial block of the 64-bit range, then reduce.
    fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0);
        let bound = bound as u64;
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let draw = self.0.next_u64();
            if draw < zone {
                return (draw % bound) as usize;
            }
        }
    }
}

/// Draws `count` distinct values from `0..universe` by a partial
/// Fisher-Yates shuffle.
fn sample_without_replacement(
    rng: &mut SeededRng,
    universe: usize,
    count: usize,
) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..universe).collect();
    for i in 0..count {
        let j = i + rng.below(universe - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Generates the 4-connected grid instance defined by `spec`: obstacle
/// cells are removed from the graph entirely, then starts and goals are
/// placed one by one, uniformly over the cells still unoccupied in the
/// respective arrangement. The obstacle sample may disconnect the grid;
/// feasibility is the solvability filter's concern, not the generator's.
pub fn generate_grid_instance(spec: &GridSpec) -> Result<CpfInstance, BenchError> {
    let cells = spec.width * spec.height;
    if cells == 0 {
        return Err(BenchError::EmptyGrid);
    }
    let obstacle_count = spec.obstacle_count();
    let free = cells - obstacle_count.min(cells);
    if spec.agent_count > free {
        return Err(BenchError::TooManyAgents {
            agents: spec.agent_count,
            free,
        });
    }

    let mut rng = SeededRng::new(spec.seed);
    let mut is_obstacle = vec![false; cells];
    for cell in sample_without_replacement(&mut rng, cells, obstacle_count) {
        is_obstacle[cell] = true;
    }

    // Surviving cells become vertices in row-major order.
    let mut vertex_of_cell = vec![usize::MAX; cells];
    let mut vertex_count = 0;
    for cell in 0..cells {
        if !is_obstacle[cell] {
            vertex_of_cell[cell] = vertex_count;
            vertex_count += 1;
        }
    }
    let mut edges = Vec::new();
    for row in 0..spec.height {
        for col in 0..spec.width {
            let cell = row * spec.width + col;
            if is_obstacle[cell] {
                continue;
            }
            if col + 1 < spec.width && !is_obstacle[cell + 1] {
                edges.push((vertex_of_cell[cell], vertex_of_cell[cell + 1]));
            }
            if row + 1 < spec.height && !is_obstacle[cell + spec.width] {
                edges.push((vertex_of_cell[cell], vertex_of_cell[cell + spec.width]));
            }
        }
    }
    let graph = Graph::new(vertex_count, edges).expect("grid edges are simple");

    let place = |rng: &mut SeededRng| {
        let mut taken = vec![false; vertex_count];
        let mut placed = Vec::with_capacity(spec.agent_count);
        for _ in 0..spec.agent_count {
            let mut pick = rng.below(vertex_count - placed.len());
            let mut vertex = 0;
            loop {
                if !taken[vertex] {
                    if pick == 0 {
                        break;
                    }
                    pick -= 1;
                }
                vertex += 1;
            }
            taken[vertex] = true;
            placed.push(vertex);
        }
        placed
    };
    let initial = Arrangement::new(place(&mut rng), &graph).expect("in range");
    let goal = Arrangement::new(place(&mut rng), &graph).expect("in range");
    Ok(CpfInstance::new(graph, initial, goal).expect("generator invariants"))
}

/// Largest joint state space the solvability filter hands to the oracle.
const ORACLE_FILTER_BUDGET: u128 = 2_000_000;

/// True when the instance is worth a runtime measurement: the pre-check
/// passes and either the brute-force oracle (desk scale) or a driver run
/// (anything larger) finds a solution.
pub fn filter_solvable(inst: &CpfInstance, cfg: &DriverConfig) -> Result<bool, BenchError> {
    if precheck_rejects(inst) {
        return Ok(false);
    }
    let n = inst.graph.vertex_count() as u128;
    let mut space = 1u128;
    for _ in 0..inst.agent_count() {
        space = space.saturating_mul(n);
    }
    if space <= ORACLE_FILTER_BUDGET {
        let cap = inst.graph.vertex_count() * (inst.agent_count() + 1);
        return Ok(oracle_decision(inst, cap)?);
    }
    let report = find_optimal(inst, cfg);
    Ok(matches!(report.outcome, SolveOutcome::Optimal { .. }))
}

fn precheck_rejects(inst: &CpfInstance) -> bool {
    matches!(crate::driver::precheck(inst), Precheck::Unsolvable(_))
}

/// One encode-only measurement.
#[derive(Debug, Clone)]
pub struct SizeRow {
    pub grid: String,
    pub eta: usize,
    pub agents: usize,
    pub encoding: EncodingKind,
    pub seed: u64,
    pub variables: u64,
    pub clauses: u64,
    pub ratio: f64,
    pub mean_clause_length: f64,
}

/// Mean measures over the instances of one (grid, agents, encoding) cell.
#[derive(Debug, Clone)]
pub struct SizeAggregate {
    pub grid: String,
    pub eta: usize,
    pub agents: usize,
    pub encoding: EncodingKind,
    pub instances: usize,
    pub mean_variables: f64,
    pub mean_clauses: f64,
    pub mean_ratio: f64,
    pub mean_length: f64,
}

/// One solved instance in the runtime study.
#[derive(Debug, Clone)]
pub struct RuntimeRow {
    pub grid: String,
    pub agents: usize,
    pub encoding: EncodingKind,
    pub seed: u64,
    pub solved: bool,
    pub runtime: Duration,
    pub makespan: Option<usize>,
    pub total_moves: Option<usize>,
}

/// Aggregates of one (grid, agents, encoding) runtime cell.
#[derive(Debug, Clone)]
pub struct RuntimeAggregate {
    pub grid: String,
    pub agents: usize,
    pub encoding: EncodingKind,
    pub instances: usize,
    pub solved: usize,
    /// A cell is censored when some instance missed the budget; censored
    /// cells end the agent progression for their encoding.
    pub censored: bool,
    pub mean_runtime: Duration,
    pub median_runtime: Duration,
    pub mean_makespan: f64,
    pub mean_total_moves: f64,
}

/// Sorted per-instance differences in total moves against the simplified
/// encoding's solutions.
#[derive(Debug, Clone)]
pub struct MovesDiffRow {
    pub grid: String,
    pub agents: usize,
    pub encoding: EncodingKind,
    pub rank: usize,
    pub diff: i64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub size_rows: Vec<SizeRow>,
    pub size_aggregates: Vec<SizeAggregate>,
    pub runtime_rows: Vec<RuntimeRow>,
    pub runtime_aggregates: Vec<RuntimeAggregate>,
    pub moves_diff: Vec<MovesDiffRow>,
}

/// One cell of the size study: a grid shape with a fixed expansion depth,
/// measured at each agent count.
#[derive(Debug, Clone)]
pub struct SizeCell {
    pub width: usize,
    pub height: usize,
    pub obstacle_fraction: f64,
    pub eta: usize,
    pub agent_counts: Vec<usize>,
    pub base_seed: u64,
}

/// Encodes (without solving) `seeds_per_cell` instances per cell and agent
/// count, recording the four size measures per encoding. The distance
/// heuristic is a solving aid and is not compiled in here.
pub fn size_study(
    cells: &[SizeCell],
    encodings: &[EncodingKind],
    seeds_per_cell: usize,
) -> BenchReport {
    let mut report = BenchReport::default();
    for cell in cells {
        let grid = format!("{}x{}", cell.width, cell.height);
        for &agents in &cell.agent_counts {
            let mut stats_per_encoding: Vec<Vec<EncodingStats>> =
                vec![Vec::new(); encodings.len()];
            for k in 0..seeds_per_cell {
                let spec = GridSpec {
                    width: cell.width,
                    height: cell.height,
                    obstacle_fraction: cell.obstacle_fraction,
                    agent_count: agents,
                    seed: cell.base_seed + k as u64,
                };
                let inst = generate_grid_instance(&spec)
                    .expect("size study cells fit their grids");
                for (e, &encoding) in encodings.iter().enumerate() {
                    let stats = encode_stats(&inst, cell.eta, encoding);
                    report.size_rows.push(SizeRow {
                        grid: grid.clone(),
                        eta: cell.eta,
                        agents,
                        encoding,
                        seed: spec.seed,
                        variables: stats.variables,
                        clauses: stats.clauses,
                        ratio: stats.ratio(),
                        mean_clause_length: stats.mean_clause_length(),
                    });
                    stats_per_encoding[e].push(stats);
                }
            }
            for (e, &encoding) in encodings.iter().enumerate() {
                let list = &stats_per_encoding[e];
                let count = list.len() as f64;
                report.size_aggregates.push(SizeAggregate {
                    grid: grid.clone(),
                    eta: cell.eta,
                    agents,
                    encoding,
                    instances: list.len(),
                    mean_variables: list.iter().map(|s| s.variables as f64).sum::<f64>()
                        / count,
                    mean_clauses: list.iter().map(|s| s.clauses as f64).sum::<f64>() / count,
                    mean_ratio: list.iter().map(|s| s.ratio()).sum::<f64>() / count,
                    mean_length: list.iter().map(|s| s.mean_clause_length()).sum::<f64>()
                        / count,
                });
            }
        }
    }
    report
}

/// One cell of the runtime study.
#[derive(Debug, Clone)]
pub struct RuntimeCell {
    pub width: usize,
    pub height: usize,
    pub obstacle_fraction: f64,
    /// Agent counts in increasing order; an encoding stops after its first
    /// censored cell, mirroring the until-all-ten-solve stopping rule.
    pub agent_counts: Vec<usize>,
    pub base_seed: u64,
}

/// Solves `seeds_per_cell` solvable instances per cell with every encoding,
/// recording wall time (encoding included), makespan, and total moves. The
/// same instances are solved by every encoding so that per-instance move
/// differences are meaningful.
pub fn runtime_study(
    cells: &[RuntimeCell],
    encodings: &[EncodingKind],
    base_cfg: &DriverConfig,
    seeds_per_cell: usize,
) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::default();
    for cell in cells {
        let grid = format!("{}x{}", cell.width, cell.height);
        let mut alive: Vec<bool> = vec![true; encodings.len()];
        let mut next_seed = cell.base_seed;
        for &agents in &cell.agent_counts {
            if !alive.iter().any(|&a| a) {
                break;
            }
            // Collect solvable instances, regenerating with the next seed
            // on rejection.
            let mut instances = Vec::with_capacity(seeds_per_cell);
            while instances.len() < seeds_per_cell {
                let spec = GridSpec {
                    width: cell.width,
                    height: cell.height,
                    obstacle_fraction: cell.obstacle_fraction,
                    agent_count: agents,
                    seed: next_seed,
                };
                next_seed += 1;
                let inst = generate_grid_instance(&spec)?;
                if filter_solvable(&inst, base_cfg)? {
                    instances.push((spec.seed, inst));
                }
            }

            let mut moves_by_encoding: Vec<Vec<Option<i64>>> =
                vec![vec![None; instances.len()]; encodings.len()];
            for (e, &encoding) in encodings.iter().enumerate() {
                if !alive[e] {
                    continue;
                }
                let cfg = DriverConfig {
                    encoding,
                    ..base_cfg.clone()
                };
                let mut runtimes = Vec::new();
                let mut makespans = Vec::new();
                let mut moves = Vec::new();
                let mut solved = 0usize;
                for (i, (seed, inst)) in instances.iter().enumerate() {
                    let run = find_optimal(inst, &cfg);
                    let row = match &run.outcome {
                        SolveOutcome::Optimal {
                            makespan, solution, ..
                        } => {
                            let m = metrics(solution);
                            solved += 1;
                            makespans.push(*makespan as f64);
                            moves.push(m.total_moves as f64);
                            moves_by_encoding[e][i] = Some(m.total_moves as i64);
                            RuntimeRow {
                                grid: grid.clone(),
                                agents,
                                encoding,
                                seed: *seed,
                                solved: true,
                                runtime: run.elapsed,
                                makespan: Some(*makespan),
                                total_moves: Some(m.total_moves),
                            }
                        }
                        _ => RuntimeRow {
                            grid: grid.clone(),
                            agents,
                            encoding,
                            seed: *seed,
                            solved: false,
                            runtime: run.elapsed,
                            makespan: None,
                            total_moves: None,
                        },
                    };
                    runtimes.push(run.elapsed);
                    report.runtime_rows.push(row);
                }
                let censored = solved < instances.len();
                if censored {
                    alive[e] = false;
                }
                let mean_runtime = runtimes.iter().sum::<Duration>() / runtimes.len() as u32;
                let mut sorted = runtimes.clone();
                sorted.sort();
                let median_runtime = if sorted.len() % 2 == 1 {
                    sorted[sorted.len() / 2]
                } else {
                    (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2
                };
                report.runtime_aggregates.push(RuntimeAggregate {
                    grid: grid.clone(),
                    agents,
                    encoding,
                    instances: instances.len(),
                    solved,
                    censored,
                    mean_runtime,
                    median_runtime,
                    mean_makespan: mean(&makespans),
                    mean_total_moves: mean(&moves),
                });
            }

            // Per-instance total-move differences against the simplified
            // encoding, sorted ascending per encoding.
            if let Some(s) = encodings
                .iter()
                .position(|&k| k == EncodingKind::Simplified)
            {
                for (e, &encoding) in encodings.iter().enumerate() {
                    if e == s {
                        continue;
                    }
                    let mut diffs: Vec<i64> = (0..instances.len())
                        .filter_map(|i| {
                            Some(moves_by_encoding[e][i]? - moves_by_encoding[s][i]?)
                        })
                        .collect();
                    diffs.sort_unstable();
                    for (rank, diff) in diffs.into_iter().enumerate() {
                        report.moves_diff.push(MovesDiffRow {
                            grid: grid.clone(),
                            agents,
                            encoding,
                            rank,
                            diff,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

impl BenchReport {
    /// Size study CSV: instance rows followed by aggregate rows.
    pub fn write_size_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(
            w,
            "row,grid,eta,agents,encoding,seed,variables,clauses,ratio,length"
        )?;
        for r in &self.size_rows {
            writeln!(
                w,
                "instance,{},{},{},{},{},{},{},{:.4},{:.4}",
                r.grid,
                r.eta,
                r.agents,
                r.encoding,
                r.seed,
                r.variables,
                r.clauses,
                r.ratio,
                r.mean_clause_length
            )?;
        }
        for a in &self.size_aggregates {
            writeln!(
                w,
                "mean,{},{},{},{},,{:.1},{:.1},{:.4},{:.4}",
                a.grid, a.eta, a.agents, a.encoding, a.mean_variables, a.mean_clauses,
                a.mean_ratio, a.mean_length
            )?;
        }
        Ok(())
    }

    /// Runtime study CSV: per-run rows, aggregates, and the sorted
    /// total-move differences against the simplified encoding.
    pub fn write_runtime_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(
            w,
            "row,grid,agents,encoding,seed,solved,runtime_s,makespan,total_moves"
        )?;
        for r in &self.runtime_rows {
            writeln!(
                w,
                "instance,{},{},{},{},{},{:.4},{},{}",
                r.grid,
                r.agents,
                r.encoding,
                r.seed,
                r.solved,
                r.runtime.as_secs_f64(),
                r.makespan.map_or(String::new(), |m| m.to_string()),
                r.total_moves.map_or(String::new(), |m| m.to_string()),
            )?;
        }
        writeln!(w)?;
        writeln!(
            w,
            "row,grid,agents,encoding,instances,solved,censored,mean_runtime_s,median_runtime_s,mean_makespan,mean_total_moves"
        )?;
        for a in &self.runtime_aggregates {
            writeln!(
                w,
                "aggregate,{},{},{},{},{},{},{:.4},{:.4},{:.2},{:.2}",
                a.grid,
                a.agents,
                a.encoding,
                a.instances,
                a.solved,
                a.censored,
                a.mean_runtime.as_secs_f64(),
                a.median_runtime.as_secs_f64(),
                a.mean_makespan,
                a.mean_total_moves,
            )?;
        }
        writeln!(w)?;
        writeln!(w, "row,grid,agents,encoding,rank,moves_diff_vs_simplified")?;
        for d in &self.moves_diff {
            writeln!(
                w,
                "moves-diff,{},{},{},{},{}",
                d.grid, d.agents, d.encoding, d.rank, d.diff
            )?;
        }
        Ok(())
    }
}
