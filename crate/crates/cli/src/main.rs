//! Command-line front end: solve, encode, validate, oracle, instance
//! generation, and the benchmark studies.
//!
//! Exit codes: 0 success, 1 unsolvable/invalid, 2 usage error, 3 file parse
//! error, 4 solver error, 5 timeout or bound cap reached.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use cpf_core::bench::{
    generate_grid_instance, runtime_study, size_study, GridSpec, RuntimeCell, SizeCell,
};
use cpf_core::cnf::{read_dimacs, write_dimacs};
use cpf_core::driver::{find_optimal, DriverConfig, QueryVerdict, SolveOutcome, UnknownReason};
use cpf_core::encodings::{apply_distance_heuristic, encode, EncodingKind};
use cpf_core::expansion::reach_windows;
use cpf_core::model::{
    metrics, read_instance, read_solution, validate_solution, write_instance,
    write_solution, CpfInstance,
};
use cpf_core::oracle::{oracle_makespan, OracleOutcome};
use cpf_core::satsolver::{embedded_dpll, SatResult, SolverConfig};

const EXIT_OK: i32 = 0;
const EXIT_UNSOLVABLE: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_PARSE: i32 = 3;
const EXIT_SOLVER: i32 = 4;
const EXIT_UNKNOWN: i32 = 5;

#[derive(Parser)]
#[command(
    name = "cpf",
    version,
    about = "Makespan-optimal cooperative path-finding via SAT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// External solver command template; `{cnf}` is replaced by the DIMACS
    /// file path. Without this flag (or the CPF_SAT_SOLVER environment
    /// variable) the embedded solver runs.
    #[arg(long)]
    solver: Option<String>,
    /// Per-instance time budget in seconds.
    #[arg(long, default_value_t = 256)]
    timeout: u64,
}

impl SolverArgs {
    fn solver_config(&self) -> SolverConfig {
        let command = self
            .solver
            .clone()
            .or_else(|| std::env::var("CPF_SAT_SOLVER").ok());
        let cfg = match command {
            Some(command) => SolverConfig::external(command),
            None => SolverConfig::embedded(),
        };
        cfg.with_time_limit(Duration::from_secs(self.timeout))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Find a makespan-optimal solution for an instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// One of: inverse, alldifferent, matching, direct, simplified.
        #[arg(long, default_value = "simplified")]
        encoding: String,
        /// Disable the distance-heuristic pruning clauses.
        #[arg(long)]
        no_heuristic: bool,
        /// Largest makespan bound to try before giving up.
        #[arg(long)]
        eta_cap: Option<usize>,
        /// Where to write the solution (default: instance path with .sol).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compile one bounded-makespan query to DIMACS.
    Encode {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "simplified")]
        encoding: String,
        /// Makespan bound (number of time steps).
        #[arg(long)]
        eta: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the variable dictionary (one `<satvar> <key>` line
        /// per variable).
        #[arg(long)]
        varmap: Option<PathBuf>,
        #[arg(long)]
        no_heuristic: bool,
    },
    /// Check a solution file against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Brute-force optimal makespan by search over the joint state space.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Depth cap of the search.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Generate a random 4-connected grid instance.
    Gen {
        /// Grid dimensions, e.g. 4x4.
        #[arg(long)]
        grid: String,
        /// Fraction of cells removed as obstacles.
        #[arg(long, default_value_t = 0.2)]
        obstacles: f64,
        #[arg(long)]
        agents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encoding-size study: encode without solving, report size measures.
    BenchSize {
        /// Grid dimensions, repeatable; pairs up with --eta by position.
        #[arg(long, required = true)]
        grid: Vec<String>,
        /// Expansion depth per grid, repeatable.
        #[arg(long, required = true)]
        eta: Vec<usize>,
        /// Comma-separated agent counts.
        #[arg(long, default_value = "1,2,4,8,16")]
        agents: String,
        #[arg(long, default_value_t = 0.2)]
        obstacles: f64,
        /// Instances per cell.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Comma-separated encodings or `all`.
        #[arg(long, default_value = "all")]
        encodings: String,
        /// CSV output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runtime/quality study: solve filtered-solvable instances per cell.
    BenchRuntime {
        #[arg(long, required = true)]
        grid: Vec<String>,
        /// Comma-separated agent counts in increasing order.
        #[arg(long, default_value = "1,2,3")]
        agents: String,
        #[arg(long, default_value_t = 0.2)]
        obstacles: f64,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long, default_value = "all")]
        encodings: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve a DIMACS CNF file with the embedded solver; prints
    /// SAT-competition output (also usable as an external solver command).
    DimacsSolve {
        file: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli.command));
}

fn usage_error(message: &str) -> i32 {
    eprintln!("error: {message}");
    EXIT_USAGE
}

fn load_instance(path: &Path) -> Result<CpfInstance, i32> {
    let file = File::open(path).map_err(|e| {
        eprintln!("error: cannot open {}: {e}", path.display());
        EXIT_PARSE
    })?;
    read_instance(BufReader::new(file)).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_PARSE
    })
}

fn parse_encoding(name: &str) -> Result<EncodingKind, i32> {
    name.parse::<EncodingKind>().map_err(|e| usage_error(&e.to_string()))
}

fn parse_encodings(list: &str) -> Result<Vec<EncodingKind>, i32> {
    if list.eq_ignore_ascii_case("all") {
        return Ok(EncodingKind::ALL.to_vec());
    }
    list.split(',')
        .map(|name| parse_encoding(name.trim()))
        .collect()
}

fn parse_grid(dim: &str) -> Result<(usize, usize), i32> {
    let parts: Vec<&str> = dim.split(['x', 'X']).collect();
    if parts.len() == 2 {
        if let (Ok(w), Ok(h)) = (parts[0].parse(), parts[1].parse()) {
            if w > 0 && h > 0 {
                return Ok((w, h));
            }
        }
    }
    Err(usage_error(&format!(
        "invalid grid {dim:?}, expected <width>x<height>"
    )))
}

fn parse_agent_list(list: &str) -> Result<Vec<usize>, i32> {
    list.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage_error(&format!("invalid agent count {t:?}")))
        })
        .collect()
}

fn create_out(path: &Path) -> Result<BufWriter<File>, i32> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", path.display());
        EXIT_PARSE
    })
}

/// Writing to a closed stdout (e.g. piping into `head`) is not an error.
fn ignore_broken_pipe(result: std::io::Result<()>) -> std::io::Result<()> {
    match result {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn run(command: Command) -> i32 {
    match command {
        Command::Solve {
            instance,
            encoding,
            no_heuristic,
            eta_cap,
            out,
            solver,
        } => cmd_solve(instance, encoding, no_heuristic, eta_cap, out, solver),
        Command::Encode {
            instance,
            encoding,
            eta,
            out,
            varmap,
            no_heuristic,
        } => cmd_encode(instance, encoding, eta, out, varmap, no_heuristic),
        Command::Validate { instance, solution } => cmd_validate(instance, solution),
        Command::Oracle { instance, cap } => cmd_oracle(instance, cap),
        Command::Gen {
            grid,
            obstacles,
            agents,
            seed,
            out,
        } => cmd_gen(grid, obstacles, agents, seed, out),
        Command::BenchSize {
            grid,
            eta,
            agents,
            obstacles,
            seeds,
            base_seed,
            encodings,
            out,
        } => cmd_bench_size(grid, eta, agents, obstacles, seeds, base_seed, encodings, out),
        Command::BenchRuntime {
            grid,
            agents,
            obstacles,
            seeds,
            base_seed,
            encodings,
            out,
            solver,
        } => cmd_bench_runtime(
            grid, agents, obstacles, seeds, base_seed, encodings, out, solver,
        ),
        Command::DimacsSolve { file } => cmd_dimacs_solve(file),
    }
}

fn cmd_solve(
    instance_path: PathBuf,
    encoding: String,
    no_heuristic: bool,
    eta_cap: Option<usize>,
    out: Option<PathBuf>,
    solver: SolverArgs,
) -> i32 {
    let inst = match load_instance(&instance_path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let encoding = match parse_encoding(&encoding) {
        Ok(kind) => kind,
        Err(code) => return code,
    };
    let cfg = DriverConfig {
        encoding,
        use_distance_heuristic: !no_heuristic,
        eta_cap,
        time_budget: Duration::from_secs(solver.timeout),
        solver: solver.solver_config(),
        ..DriverConfig::default()
    };
    println!(
        "instance: {} (n={}, m={}, agents={})",
        instance_path.display(),
        inst.graph.vertex_count(),
        inst.graph.edge_count(),
        inst.agent_count()
    );
    println!(
        "encoding: {encoding}, distance heuristic: {}",
        if no_heuristic { "off" } else { "on" }
    );
    let report = find_optimal(&inst, &cfg);
    for query in &report.queries {
        println!(
            "eta={}: {} ({:.1} ms)",
            query.eta,
            match query.verdict {
                QueryVerdict::Sat => "SAT",
                QueryVerdict::Unsat => "UNSAT",
            },
            query.elapsed.as_secs_f64() * 1e3
        );
    }
    match report.outcome {
        SolveOutcome::Optimal {
            makespan,
            solution,
            unsat_below,
        } => {
            // Belt and braces: re-validate through the same path the
            // validate subcommand uses before printing anything.
            if let Err(defect) = validate_solution(&solution, &inst) {
                eprintln!("internal error: solution failed validation: {defect}");
                return EXIT_SOLVER;
            }
            let m = metrics(&solution);
            println!(
                "optimal makespan: {makespan}{}",
                if unsat_below {
                    " (all smaller bounds refuted)"
                } else {
                    ""
                }
            );
            println!("total moves: {}", m.total_moves);
            let out_path = out.unwrap_or_else(|| instance_path.with_extension("sol"));
            match create_out(&out_path) {
                Ok(mut w) => {
                    if let Err(e) = write_solution(&solution, &mut w).and_then(|_| w.flush())
                    {
                        eprintln!("error: cannot write {}: {e}", out_path.display());
                        return EXIT_PARSE;
                    }
                }
                Err(code) => return code,
            }
            println!("solution written to {}", out_path.display());
            EXIT_OK
        }
        SolveOutcome::Unsolvable(reason) => {
            println!("unsolvable: {reason}");
            EXIT_UNSOLVABLE
        }
        SolveOutcome::Unknown(reason) => {
            println!("unknown: {reason}");
            match reason {
                UnknownReason::SolverFailure { .. } | UnknownReason::DecodeFailure { .. } => {
                    EXIT_SOLVER
                }
                _ => EXIT_UNKNOWN,
            }
        }
    }
}

fn cmd_encode(
    instance_path: PathBuf,
    encoding: String,
    eta: usize,
    out: PathBuf,
    varmap: Option<PathBuf>,
    no_heuristic: bool,
) -> i32 {
    if eta == 0 {
        return usage_error("--eta must be at least 1");
    }
    let inst = match load_instance(&instance_path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let encoding = match parse_encoding(&encoding) {
        Ok(kind) => kind,
        Err(code) => return code,
    };
    let mut enc = encode(&inst, eta, encoding);
    if !no_heuristic {
        enc = apply_distance_heuristic(enc, &reach_windows(&inst, eta));
    }
    match create_out(&out) {
        Ok(mut w) => {
            if let Err(e) = write_dimacs(&enc.cnf, &mut w).and_then(|_| w.flush()) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return EXIT_PARSE;
            }
        }
        Err(code) => return code,
    }
    if let Some(map_path) = varmap {
        match create_out(&map_path) {
            Ok(mut w) => {
                if let Err(e) = enc.varmap.serialize(&mut w).and_then(|_| w.flush()) {
                    eprintln!("error: cannot write {}: {e}", map_path.display());
                    return EXIT_PARSE;
                }
            }
            Err(code) => return code,
        }
    }
    println!(
        "{}: {} variables, {} clauses (ratio {:.3}, mean length {:.3})",
        out.display(),
        enc.stats.variables,
        enc.stats.clauses,
        enc.stats.ratio(),
        enc.stats.mean_clause_length()
    );
    EXIT_OK
}

fn cmd_validate(instance_path: PathBuf, solution_path: PathBuf) -> i32 {
    let inst = match load_instance(&instance_path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let file = match File::open(&solution_path) {
        Ok(file) => file,
        Err(e) => {
            eprintln!("error: cannot open {}: {e}", solution_path.display());
            return EXIT_PARSE;
        }
    };
    let solution = match read_solution(BufReader::new(file), &inst.graph) {
        Ok(solution) => solution,
        Err(e) => {
            eprintln!("error: {}: {e}", solution_path.display());
            return EXIT_PARSE;
        }
    };
    match validate_solution(&solution, &inst) {
        Ok(()) => {
            let m = metrics(&solution);
            println!("valid: {m}");
            EXIT_OK
        }
        Err(defect) => {
            println!("invalid: {defect}");
            EXIT_UNSOLVABLE
        }
    }
}

fn cmd_oracle(instance_path: PathBuf, cap: Option<usize>) -> i32 {
    let inst = match load_instance(&instance_path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let cap = cap.unwrap_or_else(|| {
        inst.graph.vertex_count() * (inst.agent_count() + 1)
    });
    match oracle_makespan(&inst, cap) {
        Ok(OracleOutcome::Makespan(m)) => {
            println!("optimal makespan: {m}");
            EXIT_OK
        }
        Ok(OracleOutcome::UnsolvableWithinCap { reachable, exhausted }) => {
            println!(
                "no solution within {cap} steps ({reachable} reachable states{})",
                if exhausted { ", space exhausted" } else { "" }
            );
            EXIT_UNSOLVABLE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn cmd_gen(
    grid: String,
    obstacles: f64,
    agents: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> i32 {
    let (width, height) = match parse_grid(&grid) {
        Ok(dim) => dim,
        Err(code) => return code,
    };
    let spec = GridSpec {
        width,
        height,
        obstacle_fraction: obstacles,
        agent_count: agents,
        seed,
    };
    let inst = match generate_grid_instance(&spec) {
        Ok(inst) => inst,
        Err(e) => return usage_error(&e.to_string()),
    };
    let result = match out {
        Some(path) => match create_out(&path) {
            Ok(mut w) => write_instance(&inst, &mut w).and_then(|_| w.flush()),
            Err(code) => return code,
        },
        None => ignore_broken_pipe(write_instance(&inst, std::io::stdout().lock())),
    };
    if let Err(e) = result {
        eprintln!("error: cannot write instance: {e}");
        return EXIT_PARSE;
    }
    EXIT_OK
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench_size(
    grids: Vec<String>,
    etas: Vec<usize>,
    agents: String,
    obstacles: f64,
    seeds: usize,
    base_seed: u64,
    encodings: String,
    out: Option<PathBuf>,
) -> i32 {
    if grids.len() != etas.len() {
        return usage_error("--grid and --eta must be given the same number of times");
    }
    let agent_counts = match parse_agent_list(&agents) {
        Ok(list) => list,
        Err(code) => return code,
    };
    let encodings = match parse_encodings(&encodings) {
        Ok(list) => list,
        Err(code) => return code,
    };
    let mut cells = Vec::new();
    for (dim, &eta) in grids.iter().zip(&etas) {
        let (width, height) = match parse_grid(dim) {
            Ok(dim) => dim,
            Err(code) => return code,
        };
        cells.push(SizeCell {
            width,
            height,
            obstacle_fraction: obstacles,
            eta,
            agent_counts: agent_counts.clone(),
            base_seed,
        });
    }
    let report = size_study(&cells, &encodings, seeds);
    let result = match out {
        Some(path) => match create_out(&path) {
            Ok(mut w) => report.write_size_csv(&mut w).and_then(|_| w.flush()),
            Err(code) => return code,
        },
        None => ignore_broken_pipe(report.write_size_csv(std::io::stdout().lock())),
    };
    if let Err(e) = result {
        eprintln!("error: cannot write report: {e}");
        return EXIT_PARSE;
    }
    EXIT_OK
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench_runtime(
    grids: Vec<String>,
    agents: String,
    obstacles: f64,
    seeds: usize,
    base_seed: u64,
    encodings: String,
    out: Option<PathBuf>,
    solver: SolverArgs,
) -> i32 {
    let agent_counts = match parse_agent_list(&agents) {
        Ok(list) => list,
        Err(code) => return code,
    };
    let encodings = match parse_encodings(&encodings) {
        Ok(list) => list,
        Err(code) => return code,
    };
    let mut cells = Vec::new();
    for dim in &grids {
        let (width, height) = match parse_grid(dim) {
            Ok(dim) => dim,
            Err(code) => return code,
        };
        cells.push(RuntimeCell {
            width,
            height,
            obstacle_fraction: obstacles,
            agent_counts: agent_counts.clone(),
            base_seed,
        });
    }
    let cfg = DriverConfig {
        time_budget: Duration::from_secs(solver.timeout),
        solver: solver.solver_config(),
        ..DriverConfig::default()
    };
    let report = match runtime_study(&cells, &encodings, &cfg, seeds) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    let result = match out {
        Some(path) => match create_out(&path) {
            Ok(mut w) => report.write_runtime_csv(&mut w).and_then(|_| w.flush()),
            Err(code) => return code,
        },
        None => ignore_broken_pipe(report.write_runtime_csv(std::io::stdout().lock())),
    };
    if let Err(e) = result {
        eprintln!("error: cannot write report: {e}");
        return EXIT_PARSE;
    }
    EXIT_OK
}

fn cmd_dimacs_solve(file: PathBuf) -> i32 {
    let text = match std::fs::read_to_string(&file) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("c error: cannot read {}: {e}", file.display());
            return EXIT_PARSE;
        }
    };
    let cnf = match read_dimacs(&text) {
        Ok(cnf) => cnf,
        Err(e) => {
            eprintln!("c error: {}: {e}", file.display());
            return EXIT_PARSE;
        }
    };
    match embedded_dpll(&cnf) {
        SatResult::Sat(model) => {
            println!("s SATISFIABLE");
            let mut line = String::from("v");
            for (i, &value) in model.iter().enumerate() {
                let lit = if value { (i + 1) as i64 } else { -((i + 1) as i64) };
                line.push(' ');
                line.push_str(&lit.to_string());
                if line.len() > 72 {
                    println!("{line}");
                    line = String::from("v");
                }
            }
            line.push_str(" 0");
            println!("{line}");
            10
        }
        SatResult::Unsat => {
            println!("s UNSATISFIABLE");
            20
        }
        SatResult::Timeout | SatResult::SolverError(_) => EXIT_SOLVER,
    }
}
