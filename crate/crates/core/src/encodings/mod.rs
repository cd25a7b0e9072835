//! The five CPF-to-CNF encoders, distance-heuristic clause injection, and
//! per-encoding solution decoding.
//!
//! Every encoder compiles the question "does this instance admit a solution
//! of makespan exactly `eta`?" into CNF over variables describing the agent
//! arrangement at each of the `eta + 1` time layers. Variable ids are
//! allocated in layer blocks with a fixed family order inside each layer, so
//! the same instance, bound, and encoding always produce byte-identical
//! output.

mod alldifferent;
mod direct;
mod inverse;
mod matching;
#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cnf::{const_neq, width_for_domain, BitVec, Cnf, Lit, Var, VarKey, VarMap};
use crate::expansion::ReachWindows;
use crate::model::{Arrangement, CpfInstance, Solution, SolutionDefect};

/// Clause-family labels used for per-family size accounting.
pub mod families {
    /// Unit clauses pinning the initial and goal layers.
    pub const BOUNDARY: &str = "boundary";
    /// Clauses forbidding bit-vector values outside the finite domain.
    pub const DOMAIN: &str = "domain";
    /// Links from vertex-empty auxiliaries to occupant bits.
    pub const EMPTY_LINK: &str = "empty-link";
    /// Links from copy auxiliaries to occupant equality across layers.
    pub const COPY_LINK: &str = "copy-link";
    /// Equivalences between transit auxiliaries and transit values.
    pub const TRANSIT_LINK: &str = "transit-link";
    /// No transit action keeps a vertex's occupant.
    pub const NOOP_FRAME: &str = "noop-frame";
    /// Consequences of a vertex sending its agent to a neighbor.
    pub const LEAVE: &str = "leave";
    /// Consequences of a vertex receiving an agent from a neighbor.
    pub const ARRIVE: &str = "arrive";
    /// Equivalences naming "agent a sits at vertex j" for position vectors.
    pub const POSITION_LINK: &str = "position-link";
    /// Successor vertices are restricted to the closed neighborhood.
    pub const MOVE_ADJACENCY: &str = "move-adjacency";
    /// Pairwise inequality of agent positions within one layer.
    pub const LAYER_DISTINCT: &str = "layer-distinct";
    /// A moving agent's next vertex differs from every other agent's
    /// current vertex.
    pub const TARGET_VACANCY: &str = "target-vacancy";
    /// Selected arcs saturate their endpoints.
    pub const ARC_ENDPOINTS: &str = "arc-endpoints";
    /// At most one outgoing arc per vertex and layer.
    pub const OUTGOING_AMO: &str = "outgoing-amo";
    /// At most one incoming arc per vertex and layer.
    pub const INCOMING_AMO: &str = "incoming-amo";
    /// Saturated vertices have an outgoing arc.
    pub const OUTGOING_SUPPORT: &str = "outgoing-support";
    /// Saturated vertices have an incoming arc.
    pub const INCOMING_SUPPORT: &str = "incoming-support";
    /// A move arc's target is unsaturated before the step.
    pub const MOVE_FRESH_TARGET: &str = "move-fresh-target";
    /// Selected arcs copy the occupant value along the arc.
    pub const ARC_AGENT_COPY: &str = "arc-agent-copy";
    /// Nonzero occupancy implies flow saturation.
    pub const OCCUPANCY_FLOW: &str = "occupancy-flow";
    /// Each agent occupies at most one vertex per layer.
    pub const PLACEMENT_AMO: &str = "placement-amo";
    /// Each agent occupies at least one vertex per layer.
    pub const PLACEMENT_ALO: &str = "placement-alo";
    /// Each vertex hosts at most one agent per layer.
    pub const VERTEX_AMO: &str = "vertex-amo";
    /// A move's target vertex is vacant before the step.
    pub const MOVE_VACANCY: &str = "move-vacancy";
    /// Vacancy auxiliaries imply the absence of every agent.
    pub const VACANCY_LINK: &str = "vacancy-link";
    /// Unit/inequality clauses from the distance heuristic.
    pub const DISTANCE_PRUNING: &str = "distance-pruning";
}

/// The five encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncodingKind {
    Inverse,
    AllDifferent,
    Matching,
    Direct,
    Simplified,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 5] = [
        EncodingKind::Inverse,
        EncodingKind::AllDifferent,
        EncodingKind::Matching,
        EncodingKind::Direct,
        EncodingKind::Simplified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Inverse => "inverse",
            EncodingKind::AllDifferent => "alldifferent",
            EncodingKind::Matching => "matching",
            EncodingKind::Direct => "direct",
            EncodingKind::Simplified => "simplified",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown encoding {0:?} (expected inverse, alldifferent, matching, direct, or simplified)")]
pub struct UnknownEncoding(pub String);

impl FromStr for EncodingKind {
    type Err = UnknownEncoding;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "inverse" | "inv" => Ok(EncodingKind::Inverse),
            "alldifferent" | "alldiff" | "diff" => Ok(EncodingKind::AllDifferent),
            "matching" | "match" => Ok(EncodingKind::Matching),
            "direct" | "dir" => Ok(EncodingKind::Direct),
            "simplified" | "sim" => Ok(EncodingKind::Simplified),
            _ => Err(UnknownEncoding(s.to_string())),
        }
    }
}

/// Size measures of an encoded formula, plus per-family clause counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodingStats {
    pub variables: u64,
    pub clauses: u64,
    pub total_literals: u64,
    pub families: BTreeMap<&'static str, u64>,
}

impl EncodingStats {
    /// Clauses per variable; 0 for a formula without variables.
    pub fn ratio(&self) -> f64 {
        if self.variables == 0 {
            0.0
        } else {
            self.clauses as f64 / self.variables as f64
        }
    }

    /// Mean clause length; 0 for a formula without clauses.
    pub fn mean_clause_length(&self) -> f64 {
        if self.clauses == 0 {
            0.0
        } else {
            self.total_literals as f64 / self.clauses as f64
        }
    }

    pub fn family(&self, name: &str) -> u64 {
        self.families.get(name).copied().unwrap_or(0)
    }
}

/// A compiled bounded-makespan query.
#[derive(Debug, Clone)]
pub struct EncodedInstance {
    pub kind: EncodingKind,
    pub eta: usize,
    pub vertex_count: usize,
    pub agent_count: usize,
    pub cnf: Cnf,
    pub varmap: VarMap,
    pub stats: EncodingStats,
}

impl EncodedInstance {
    /// Recomputes the three table measures from the stored clause set.
    pub fn recount(&self) -> EncodingStats {
        EncodingStats {
            variables: self.cnf.var_count() as u64,
            clauses: self.cnf.clause_count() as u64,
            total_literals: self.cnf.total_literals() as u64,
            families: self.stats.families.clone(),
        }
    }

    fn occupant_bits(&self, vertex: usize, layer: usize) -> BitVec {
        let width = width_for_domain(self.agent_count + 1);
        BitVec::new(
            (0..width)
                .map(|bit| {
                    self.varmap
                        .var(&VarKey::Occupant { vertex, layer, bit })
                        .expect("occupant bit allocated")
                })
                .collect(),
        )
    }

    fn agent_pos_bits(&self, agent: usize, layer: usize) -> BitVec {
        let width = width_for_domain(self.vertex_count);
        BitVec::new(
            (0..width)
                .map(|bit| {
                    self.varmap
                        .var(&VarKey::AgentPos { agent, layer, bit })
                        .expect("position bit allocated")
                })
                .collect(),
        )
    }
}

/// Shared emission context for the encoders. Construction in stats-only mode
/// runs the identical allocation and clause pipeline without storing
/// anything, so recorded stats always match a stored build.
pub(crate) struct Builder {
    varmap: VarMap,
    cnf: Option<Cnf>,
    clauses: u64,
    total_literals: u64,
    families: BTreeMap<&'static str, u64>,
    family: &'static str,
    contradictions: usize,
    scratch: Vec<Lit>,
}

impl Builder {
    fn new(stats_only: bool) -> Self {
        Self {
            varmap: VarMap::new(),
            cnf: if stats_only { None } else { Some(Cnf::new(0)) },
            clauses: 0,
            total_literals: 0,
            families: BTreeMap::new(),
            family: families::BOUNDARY,
            contradictions: 0,
            scratch: Vec::new(),
        }
    }

    pub(crate) fn alloc(&mut self, key: VarKey) -> Var {
        let var = self.varmap.alloc(key);
        if let Some(cnf) = &mut self.cnf {
            cnf.grow_vars(self.varmap.len());
        }
        var
    }

    pub(crate) fn alloc_bits(
        &mut self,
        width: usize,
        key: impl Fn(usize) -> VarKey,
    ) -> BitVec {
        BitVec::new((0..width).map(|bit| self.alloc(key(bit))).collect())
    }

    pub(crate) fn family(&mut self, name: &'static str) {
        self.family = name;
    }

    /// Emits one clause under the current family. Duplicate literals are
    /// dropped and tautologies skipped; an empty clause is materialized as a
    /// fresh contradiction variable asserted both ways.
    pub(crate) fn clause(&mut self, lits: &[Lit]) {
        if lits.is_empty() {
            let index = self.contradictions;
            self.contradictions += 1;
            let v = self.alloc(VarKey::Contradiction { index }) as Lit;
            self.count_stored(&[v]);
            self.count_stored(&[-v]);
            return;
        }
        self.scratch.clear();
        for &l in lits {
            if self.scratch.contains(&-l) {
                return; // tautology
            }
            if !self.scratch.contains(&l) {
                self.scratch.push(l);
            }
        }
        let mut scratch = std::mem::take(&mut self.scratch);
        self.count_stored(&scratch);
        scratch.clear();
        self.scratch = scratch;
    }

    fn count_stored(&mut self, lits: &[Lit]) {
        self.clauses += 1;
        self.total_literals += lits.len() as u64;
        *self.families.entry(self.family).or_insert(0) += 1;
        if let Some(cnf) = &mut self.cnf {
            let stored = cnf.add_clause(lits);
            debug_assert!(stored, "normalized clause must be storable");
        }
    }

    pub(crate) fn unit(&mut self, l: Lit) {
        self.clause(&[l]);
    }

    pub(crate) fn clause_set(&mut self, set: Vec<Vec<Lit>>) {
        for c in set {
            self.clause(&c);
        }
    }

    pub(crate) fn units(&mut self, lits: Vec<Lit>) {
        for l in lits {
            self.unit(l);
        }
    }

    fn stats(&self) -> EncodingStats {
        EncodingStats {
            variables: self.varmap.len() as u64,
            clauses: self.clauses,
            total_literals: self.total_literals,
            families: self.families.clone(),
        }
    }
}

fn build(builder: &mut Builder, inst: &CpfInstance, eta: usize, kind: EncodingKind) {
    assert!(eta >= 1, "encoders require a makespan bound of at least 1");
    match kind {
        EncodingKind::Inverse => inverse::build(builder, inst, eta),
        EncodingKind::AllDifferent => alldifferent::build(builder, inst, eta),
        EncodingKind::Matching => matching::build(builder, inst, eta),
        EncodingKind::Direct => direct::build(builder, inst, eta, false),
        EncodingKind::Simplified => direct::build(builder, inst, eta, true),
    }
}

/// Compiles `inst` at makespan bound `eta` with the chosen encoding.
pub fn encode(inst: &CpfInstance, eta: usize, kind: EncodingKind) -> EncodedInstance {
    let mut builder = Builder::new(false);
    build(&mut builder, inst, eta, kind);
    let stats = builder.stats();
    EncodedInstance {
        kind,
        eta,
        vertex_count: inst.graph.vertex_count(),
        agent_count: inst.agent_count(),
        cnf: builder.cnf.expect("stored build"),
        varmap: builder.varmap,
        stats,
    }
}

/// Runs the full encoding pipeline but records sizes only. Used by the size
/// study, where the largest formulas would be wasteful to materialize.
pub fn encode_stats(inst: &CpfInstance, eta: usize, kind: EncodingKind) -> EncodingStats {
    let mut builder = Builder::new(true);
    build(&mut builder, inst, eta, kind);
    builder.stats()
}

pub fn encode_inverse(inst: &CpfInstance, eta: usize) -> EncodedInstance {
    encode(inst, eta, EncodingKind::Inverse)
}

pub fn encode_alldifferent(inst: &CpfInstance, eta: usize) -> EncodedInstance {
    encode(inst, eta, EncodingKind::AllDifferent)
}

pub fn encode_matching(inst: &CpfInstance, eta: usize) -> EncodedInstance {
    encode(inst, eta, EncodingKind::Matching)
}

pub fn encode_direct(inst: &CpfInstance, eta: usize) -> EncodedInstance {
    encode(inst, eta, EncodingKind::Direct)
}

pub fn encode_simplified(inst: &CpfInstance, eta: usize) -> EncodedInstance {
    encode(inst, eta, EncodingKind::Simplified)
}

/// Appends the distance-heuristic pruning clauses for every excluded
/// (agent, vertex, layer) triple. The added clauses are logical consequences
/// of the base formula, so satisfiability at any bound is unchanged.
pub fn apply_distance_heuristic(
    mut enc: EncodedInstance,
    windows: &ReachWindows,
) -> EncodedInstance {
    assert_eq!(windows.eta(), enc.eta, "windows computed for a different bound");
    let mut added_clauses = 0u64;
    let mut added_literals = 0u64;
    let mut contradictions = 0usize;
    let mut add = |cnf: &mut Cnf, lits: &[Lit]| {
        if cnf.add_clause(lits) {
            added_clauses += 1;
            added_literals += lits.len() as u64;
        }
    };
    for (agent, vertex, layer) in windows.excluded() {
        match enc.kind {
            EncodingKind::Direct | EncodingKind::Simplified => {
                let var = enc
                    .varmap
                    .var(&VarKey::AgentAt { agent, vertex, layer })
                    .expect("placement variable allocated");
                add(&mut enc.cnf, &[-(var as Lit)]);
            }
            EncodingKind::Inverse | EncodingKind::Matching => {
                let bits = enc.occupant_bits(vertex, layer);
                match const_neq(&bits, agent + 1) {
                    Some(clause) => add(&mut enc.cnf, &clause),
                    None => contradictions += 1,
                }
            }
            EncodingKind::AllDifferent => {
                let bits = enc.agent_pos_bits(agent, layer);
                match const_neq(&bits, vertex) {
                    Some(clause) => add(&mut enc.cnf, &clause),
                    None => contradictions += 1,
                }
            }
        }
    }
    // A width-0 inequality means the instance is trivially unsolvable under
    // this pruning; assert a fresh contradiction.
    for _ in 0..contradictions.min(1) {
        let v = enc.varmap.alloc(VarKey::Contradiction { index: usize::MAX });
        enc.cnf.grow_vars(enc.varmap.len());
        enc.stats.variables += 1;
        add(&mut enc.cnf, &[v as Lit]);
        add(&mut enc.cnf, &[-(v as Lit)]);
    }
    enc.stats.clauses += added_clauses;
    enc.stats.total_literals += added_literals;
    *enc.stats
        .families
        .entry(families::DISTANCE_PRUNING)
        .or_insert(0) += added_clauses;
    enc
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("layer {layer}: occupant value {value} at vertex {vertex} exceeds the agent count")]
    OccupantOutOfRange {
        vertex: usize,
        layer: usize,
        value: usize,
    },
    #[error("layer {layer}: position value {value} of agent {agent} is not a vertex")]
    PositionOutOfRange {
        agent: usize,
        layer: usize,
        value: usize,
    },
    #[error("layer {layer}: agent {agent} is placed more than once")]
    MultiplePlacements { agent: usize, layer: usize },
    #[error("layer {layer}: agent {agent} is not placed anywhere")]
    MissingPlacement { agent: usize, layer: usize },
    #[error("decoded steps do not form a valid solution: {0}")]
    Invalid(SolutionDefect),
}

/// Rebuilds the arrangement sequence from a satisfying assignment and checks
/// it against the instance. A failure here indicates an encoder bug, never a
/// property of the instance.
pub fn decode(
    enc: &EncodedInstance,
    model: &[bool],
    inst: &CpfInstance,
) -> Result<Solution, DecodeError> {
    let mu = inst.agent_count();
    let n = inst.graph.vertex_count();
    let mut steps = Vec::with_capacity(enc.eta + 1);
    for layer in 0..=enc.eta {
        let mut positions: Vec<Option<usize>> = vec![None; mu];
        match enc.kind {
            EncodingKind::Inverse | EncodingKind::Matching => {
                for vertex in 0..n {
                    let value = enc.occupant_bits(vertex, layer).value(model);
                    if value == 0 {
                        continue;
                    }
                    if value > mu {
                        return Err(DecodeError::OccupantOutOfRange {
                            vertex,
                            layer,
                            value,
                        });
                    }
                    let agent = value - 1;
                    if positions[agent].replace(vertex).is_some() {
                        return Err(DecodeError::MultiplePlacements { agent, layer });
                    }
                }
            }
            EncodingKind::AllDifferent => {
                for (agent, slot) in positions.iter_mut().enumerate() {
                    let value = enc.agent_pos_bits(agent, layer).value(model);
                    if value >= n {
                        return Err(DecodeError::PositionOutOfRange {
                            agent,
                            layer,
                            value,
                        });
                    }
                    *slot = Some(value);
                }
            }
            EncodingKind::Direct | EncodingKind::Simplified => {
                for (agent, slot) in positions.iter_mut().enumerate() {
                    for vertex in 0..n {
                        let var = enc
                            .varmap
                            .var(&VarKey::AgentAt { agent, vertex, layer })
                            .expect("placement variable allocated");
                        if model[(var - 1) as usize] {
                            if slot.replace(vertex).is_some() {
                                return Err(DecodeError::MultiplePlacements {
                                    agent,
                                    layer,
                                });
                            }
                        }
                    }
                }
            }
        }
        let mut resolved = Vec::with_capacity(mu);
        for (agent, slot) in positions.into_iter().enumerate() {
            resolved.push(slot.ok_or(DecodeError::MissingPlacement { agent, layer })?);
        }
        steps.push(
            Arrangement::new(resolved, &inst.graph).expect("decoded vertices in range"),
        );
    }
    let solution = Solution::new(steps);
    crate::model::validate_solution(&solution, inst).map_err(DecodeError::Invalid)?;
    Ok(solution)
}

/// Serializes the formula and its variable dictionary side by side.
pub fn write_varmap(enc: &EncodedInstance, w: impl std::io::Write) -> std::io::Result<()> {
    enc.varmap.serialize(w)
}
