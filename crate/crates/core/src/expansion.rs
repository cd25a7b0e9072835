//! Time expansion of the environment graph and derived pruning data.
//!
//! The time expansion graph over `eta + 1` layers connects `[u, l]` to
//! `[v, l+1]` whenever `{u, v}` is an edge or `u == v` (a wait arc). Bounded
//! makespan solutions correspond exactly to collections of vertex-disjoint,
//! non-overlapping layer-spanning paths in it; the encoders index its nodes
//! arithmetically, so the explicit structure here exists for checks and tests.

use thiserror::Error;

use crate::model::{AgentId, Arrangement, CpfInstance, Graph, Solution, VertexId};

/// Explicit view of the layered expansion of a graph. Arcs are implicit and
/// enumerated on demand.
#[derive(Debug, Clone)]
pub struct TimeExpansion<'a> {
    graph: &'a Graph,
    eta: usize,
}

/// Builds the expansion with `eta + 1` layers (indexed `0..=eta`).
pub fn expand(graph: &Graph, eta: usize) -> TimeExpansion<'_> {
    TimeExpansion { graph, eta }
}

impl<'a> TimeExpansion<'a> {
    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn layer_count(&self) -> usize {
        self.eta + 1
    }

    pub fn node_count(&self) -> usize {
        self.graph.vertex_count() * (self.eta + 1)
    }

    /// Each unordered edge contributes two arcs per layer transition, plus
    /// one wait arc per vertex: `eta * (2|E| + |V|)` arcs in total.
    pub fn arc_count(&self) -> usize {
        self.eta * (2 * self.graph.edge_count() + self.graph.vertex_count())
    }

    pub fn has_arc(&self, from: (VertexId, usize), to: (VertexId, usize)) -> bool {
        let ((u, l), (v, l2)) = (from, to);
        l2 == l + 1
            && l < self.eta
            && u < self.graph.vertex_count()
            && v < self.graph.vertex_count()
            && (u == v || self.graph.has_edge(u, v))
    }

    /// Outgoing arcs of `[v, l]`: one per neighbor plus the wait arc.
    pub fn out_degree(&self, _v: VertexId, l: usize) -> usize {
        if l >= self.eta {
            0
        } else {
            self.graph.degree(_v) + 1
        }
    }

    /// Enumerates all arcs in deterministic order.
    pub fn arcs(&self) -> Vec<((VertexId, usize), (VertexId, usize))> {
        let mut arcs = Vec::with_capacity(self.arc_count());
        for l in 0..self.eta {
            for v in 0..self.graph.vertex_count() {
                arcs.push(((v, l), (v, l + 1)));
                for &u in self.graph.neighbors(v) {
                    arcs.push(((v, l), (u, l + 1)));
                }
            }
        }
        arcs
    }
}

/// Per-agent reachability windows used as the distance heuristic.
///
/// Agent `i` can occupy `[v, l]` only if `v` is reachable from its start in
/// at most `l` steps and its goal is reachable from `v` in at most `eta - l`
/// steps. Because wait arcs allow padding, a directed path of length exactly
/// `l` exists in the expansion iff the plain graph distance is at most `l`,
/// so two BFS passes per agent over the base graph suffice.
#[derive(Debug, Clone)]
pub struct ReachWindows {
    eta: usize,
    /// `forward[agent][vertex]` = distance from the agent's start, if reachable.
    forward: Vec<Vec<Option<usize>>>,
    /// `backward[agent][vertex]` = distance to the agent's goal, if reachable.
    backward: Vec<Vec<Option<usize>>>,
}

pub fn reach_windows(inst: &CpfInstance, eta: usize) -> ReachWindows {
    let mut forward = Vec::with_capacity(inst.agent_count());
    let mut backward = Vec::with_capacity(inst.agent_count());
    for agent in 0..inst.agent_count() {
        forward.push(inst.graph.bfs_distances(inst.initial.vertex_of(agent)));
        backward.push(inst.graph.bfs_distances(inst.goal.vertex_of(agent)));
    }
    ReachWindows {
        eta,
        forward,
        backward,
    }
}

impl ReachWindows {
    pub fn eta(&self) -> usize {
        self.eta
    }

    /// True when agent `agent` may occupy `vertex` at layer `layer`.
    pub fn allows(&self, agent: AgentId, vertex: VertexId, layer: usize) -> bool {
        debug_assert!(layer <= self.eta);
        let fwd_ok = matches!(self.forward[agent][vertex], Some(d) if d <= layer);
        let bwd_ok = matches!(self.backward[agent][vertex], Some(d) if d <= self.eta - layer);
        fwd_ok && bwd_ok
    }

    /// All excluded `(agent, vertex, layer)` triples in deterministic order.
    pub fn excluded(&self) -> Vec<(AgentId, VertexId, usize)> {
        let mut out = Vec::new();
        for agent in 0..self.forward.len() {
            for vertex in 0..self.forward[agent].len() {
                for layer in 0..=self.eta {
                    if !self.allows(agent, vertex, layer) {
                        out.push((agent, vertex, layer));
                    }
                }
            }
        }
        out
    }

    /// True when some agent has no admissible cell in some layer, i.e. the
    /// instance cannot be solved within `eta` steps for distance reasons.
    pub fn infeasible(&self) -> bool {
        (0..self.forward.len()).any(|agent| {
            (0..=self.eta).any(|layer| {
                (0..self.forward[agent].len()).all(|v| !self.allows(agent, v, layer))
            })
        })
    }
}

/// One layer-spanning path per agent; `paths[i][l]` is the vertex agent `i`
/// occupies at layer `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCollection {
    pub paths: Vec<Vec<VertexId>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("expected {expected} paths, found {found}")]
    PathCountMismatch { expected: usize, found: usize },
    #[error("path {path} has {found} nodes, expected {expected}")]
    WrongLength {
        path: usize,
        found: usize,
        expected: usize,
    },
}

/// Checks that the collection encodes a solution of makespan `eta`:
/// every consecutive pair is an expansion arc, path `i` connects the start of
/// agent `i` to its goal, no two paths share a node, and between any two
/// consecutive layers the sources and targets of non-trivial arcs are
/// disjoint vertex sets. Wrong path counts or lengths are input errors.
pub fn check_paths(
    collection: &PathCollection,
    inst: &CpfInstance,
    eta: usize,
) -> Result<bool, PathError> {
    let mu = inst.agent_count();
    if collection.paths.len() != mu {
        return Err(PathError::PathCountMismatch {
            expected: mu,
            found: collection.paths.len(),
        });
    }
    for (i, path) in collection.paths.iter().enumerate() {
        if path.len() != eta + 1 {
            return Err(PathError::WrongLength {
                path: i,
                found: path.len(),
                expected: eta + 1,
            });
        }
    }

    let expansion = expand(&inst.graph, eta);
    for (i, path) in collection.paths.iter().enumerate() {
        if path[0] != inst.initial.vertex_of(i) || path[eta] != inst.goal.vertex_of(i) {
            return Ok(false);
        }
        for l in 0..eta {
            if !expansion.has_arc((path[l], l), (path[l + 1], l + 1)) {
                return Ok(false);
            }
        }
    }
    // Vertex-disjointness: no two paths visit the same node of the expansion.
    for l in 0..=eta {
        let mut seen = vec![false; inst.graph.vertex_count()];
        for path in &collection.paths {
            if seen[path[l]] {
                return Ok(false);
            }
            seen[path[l]] = true;
        }
    }
    // Non-overlapping: endpoints of non-trivial arcs between layers l and
    // l+1 form disjoint source/target sets.
    for l in 0..eta {
        let mut sources = vec![false; inst.graph.vertex_count()];
        for path in &collection.paths {
            if path[l] != path[l + 1] {
                sources[path[l]] = true;
            }
        }
        for path in &collection.paths {
            if path[l] != path[l + 1] && sources[path[l + 1]] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The forward construction: path `i` is agent `i`'s trajectory.
pub fn solution_to_paths(sol: &Solution) -> PathCollection {
    let mu = sol.steps[0].agent_count();
    let paths = (0..mu)
        .map(|agent| sol.steps.iter().map(|arr| arr.vertex_of(agent)).collect())
        .collect();
    PathCollection { paths }
}

/// Reassembles the step sequence from a path collection. The result may be
/// invalid; run it through `validate_solution`.
pub fn paths_to_solution(collection: &PathCollection, graph: &Graph) -> Solution {
    let layers = collection.paths.first().map_or(1, Vec::len);
    let steps = (0..layers)
        .map(|l| {
            Arrangement::new(
                collection.paths.iter().map(|path| path[l]).collect(),
                graph,
            )
            .expect("path vertices are in range")
        })
        .collect();
    Solution::new(steps)
}
