//! Makespan-optimal cooperative path-finding (CPF) via reduction to SAT.
//!
//! A CPF instance places agents on vertices of an undirected graph and asks
//! for a sequence of non-colliding simultaneous moves that relocates every
//! agent to its goal vertex. This crate compiles the bounded-makespan decision
//! problem into CNF (five exchangeable encodings), drives a SAT back-end
//! through increasing makespan bounds until the first satisfiable bound, and
//! decodes the model back into a verified move sequence.
//!
//! Modules:
//! - [`model`] — instances, arrangements, solutions, validity checking, file I/O
//! - [`expansion`] — time expansion graph, reachability windows, path checks
//! - [`cnf`] — clause database, bit-vector gadgets, DIMACS I/O
//! - [`encodings`] — the five CPF-to-CNF encoders and solution decoding
//! - [`satsolver`] — embedded DPLL and external solver subprocess runner
//! - [`driver`] — sequential increasing makespan search
//! - [`oracle`] — brute-force BFS over the joint configuration space
//! - [`bench`] — grid instance generator and size/runtime studies

pub mod bench;
pub mod cnf;
pub mod driver;
pub mod encodings;
pub mod expansion;
pub mod model;
pub mod oracle;
pub mod satsolver;
