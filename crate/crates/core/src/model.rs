//! CPF instance and solution model: graphs, arrangements, validity conditions,
//! solution metrics and the line-oriented instance/solution file formats.
//!
//! A transition from one arrangement to the next is valid when
//! (1) every agent stays put or moves along an edge,
//! (2) every moving agent's target vertex was vacant before the step, and
//! (3) no two agents occupy the same vertex after the step.
//!
//! Vertices and agents are indexed from 0 internally; the text formats use
//! 1-based ids.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// 0-based vertex index.
pub type VertexId = usize;
/// 0-based agent index.
pub type AgentId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("vertex id {0} out of range (graph has {1} vertices)")]
    VertexOutOfRange(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("agent {0} and agent {1} share vertex {2}")]
    SharedVertex(usize, usize, usize),
    #[error("instance has {0} agents but only {1} vertices")]
    TooManyAgents(usize, usize),
    #[error("arrangements place different agent sets ({0} vs {1} agents)")]
    AgentSetMismatch(usize, usize),
}

/// An undirected simple graph with a deterministic neighbor ordering.
///
/// Neighbors of each vertex are kept sorted by ascending vertex index; the
/// 1-based position of a neighbor in that list is its ordering number, and
/// the resulting assignment is a bijection onto `1..=degree(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered vertex pairs. Rejects self-loops,
    /// duplicate edges and out-of-range endpoints.
    pub fn new(
        vertex_count: usize,
        edge_list: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ModelError> {
        let mut edges = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (a, b) in edge_list {
            if a >= vertex_count {
                return Err(ModelError::VertexOutOfRange(a, vertex_count));
            }
            if b >= vertex_count {
                return Err(ModelError::VertexOutOfRange(b, vertex_count));
            }
            if a == b {
                return Err(ModelError::SelfLoop(a));
            }
            let key = (a.min(b), a.max(b));
            if !edges.insert(key) {
                return Err(ModelError::DuplicateEdge(key.0, key.1));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            vertex_count,
            edges,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Normalized edges `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    /// Neighbors of `v` in ascending vertex order.
    pub fn neighbors(&self, v: VertexId) -> &[usize] {
        &self.adjacency[v]
    }

    /// 1-based ordering number of neighbor `u` of `v`.
    pub fn neighbor_rank(&self, v: VertexId, u: VertexId) -> Option<usize> {
        self.adjacency[v].binary_search(&u).ok().map(|i| i + 1)
    }

    /// Inverse of [`Graph::neighbor_rank`]: the `rank`-th (1-based) neighbor of `v`.
    pub fn neighbor_by_rank(&self, v: VertexId, rank: usize) -> VertexId {
        self.adjacency[v][rank - 1]
    }

    /// BFS distances from `from`; `None` marks unreachable vertices.
    pub fn bfs_distances(&self, from: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count];
        dist[from] = Some(0);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &u in &self.adjacency[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Connected component id per vertex (ids are 0-based, assigned in
    /// ascending order of each component's smallest vertex).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for start in 0..self.vertex_count {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &self.adjacency[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// A placement of all agents at one time step: agent index -> vertex.
///
/// The structure itself only checks vertex ranges so that candidate
/// arrangements (possibly colliding) can be represented and then rejected by
/// validation; [`CpfInstance`] and [`validate_transition`] enforce injectivity
/// where the model requires it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arrangement {
    location: Vec<VertexId>,
}

impl Arrangement {
    pub fn new(location: Vec<VertexId>, graph: &Graph) -> Result<Self, ModelError> {
        for &v in &location {
            if v >= graph.vertex_count() {
                return Err(ModelError::VertexOutOfRange(v, graph.vertex_count()));
            }
        }
        Ok(Self { location })
    }

    pub fn agent_count(&self) -> usize {
        self.location.len()
    }

    pub fn vertex_of(&self, agent: AgentId) -> VertexId {
        self.location[agent]
    }

    pub fn positions(&self) -> &[VertexId] {
        &self.location
    }

    /// True when no two agents share a vertex.
    pub fn is_injective(&self) -> bool {
        let mut seen = self.location.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Inverse location function: vertex -> occupying agent, `None` if vacant.
    /// Meaningful only for injective arrangements.
    pub fn occupant_map(&self, vertex_count: usize) -> Vec<Option<AgentId>> {
        let mut map = vec![None; vertex_count];
        for (agent, &v) in self.location.iter().enumerate() {
            map[v] = Some(agent);
        }
        map
    }

    fn first_collision(&self) -> Option<(AgentId, AgentId, VertexId)> {
        for a in 0..self.location.len() {
            for b in (a + 1)..self.location.len() {
                if self.location[a] == self.location[b] {
                    return Some((a, b, self.location[a]));
                }
            }
        }
        None
    }
}

/// A CPF instance: a graph plus initial and goal arrangements of the same
/// agent set. Both boundary arrangements must be injective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpfInstance {
    pub graph: Graph,
    pub initial: Arrangement,
    pub goal: Arrangement,
}

impl CpfInstance {
    pub fn new(
        graph: Graph,
        initial: Arrangement,
        goal: Arrangement,
    ) -> Result<Self, ModelError> {
        if initial.agent_count() != goal.agent_count() {
            return Err(ModelError::AgentSetMismatch(
                initial.agent_count(),
                goal.agent_count(),
            ));
        }
        if initial.agent_count() > graph.vertex_count() {
            return Err(ModelError::TooManyAgents(
                initial.agent_count(),
                graph.vertex_count(),
            ));
        }
        for arr in [&initial, &goal] {
            if let Some((a, b, v)) = arr.first_collision() {
                return Err(ModelError::SharedVertex(a, b, v));
            }
            for &v in arr.positions() {
                if v >= graph.vertex_count() {
                    return Err(ModelError::VertexOutOfRange(v, graph.vertex_count()));
                }
            }
        }
        Ok(Self {
            graph,
            initial,
            goal,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.initial.agent_count()
    }
}

/// A candidate solution: the sequence of arrangements, one per time step.
/// The makespan is `steps.len() - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub steps: Vec<Arrangement>,
}

impl Solution {
    pub fn new(steps: Vec<Arrangement>) -> Self {
        assert!(!steps.is_empty(), "a solution has at least one arrangement");
        Self { steps }
    }

    pub fn makespan(&self) -> usize {
        self.steps.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolutionMetrics {
    pub makespan: usize,
    /// Count of (agent, step) pairs where the agent changed vertex,
    /// also called the sum of costs.
    pub total_moves: usize,
}

/// The reason a transition between two arrangements is invalid.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransitionError {
    #[error("arrangements place different agent sets ({0} vs {1} agents)")]
    AgentSetMismatch(usize, usize),
    #[error("agent {agent} jumps from vertex {from} to non-adjacent vertex {to}")]
    NotAlongEdge {
        agent: AgentId,
        from: VertexId,
        to: VertexId,
    },
    #[error("agent {agent} moves into vertex {to} still occupied by agent {occupant}")]
    TargetOccupied {
        agent: AgentId,
        to: VertexId,
        occupant: AgentId,
    },
    #[error("agents {first} and {second} both end up in vertex {vertex}")]
    Collision {
        first: AgentId,
        second: AgentId,
        vertex: VertexId,
    },
}

/// Checks validity conditions (1)-(3) for one step.
///
/// `AgentSetMismatch` is an input error (the question is ill-posed); every
/// other variant reports the first violated condition.
pub fn validate_transition(
    before: &Arrangement,
    after: &Arrangement,
    graph: &Graph,
) -> Result<(), TransitionError> {
    if before.agent_count() != after.agent_count() {
        return Err(TransitionError::AgentSetMismatch(
            before.agent_count(),
            after.agent_count(),
        ));
    }
    let occupied_before = before.occupant_map(graph.vertex_count());
    for agent in 0..before.agent_count() {
        let from = before.vertex_of(agent);
        let to = after.vertex_of(agent);
        if from == to {
            continue;
        }
        // Condition (1): moves follow edges.
        if !graph.has_edge(from, to) {
            return Err(TransitionError::NotAlongEdge { agent, from, to });
        }
        // Condition (2): the target was vacant before the step. This makes
        // the check asymmetric: train-like chains where an agent enters a
        // vertex vacated in the same step are invalid.
        if let Some(occupant) = occupied_before[to] {
            return Err(TransitionError::TargetOccupied {
                agent,
                to,
                occupant,
            });
        }
    }
    // Condition (3): the resulting arrangement is injective.
    if let Some((first, second, vertex)) = after.first_collision() {
        return Err(TransitionError::Collision {
            first,
            second,
            vertex,
        });
    }
    Ok(())
}

/// The first defect found in a candidate solution, if any.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolutionDefect {
    #[error("solution places {0} agents, instance has {1}")]
    AgentCountMismatch(usize, usize),
    #[error("first arrangement differs from the instance's initial arrangement")]
    InitialMismatch,
    #[error("last arrangement differs from the instance's goal arrangement")]
    GoalMismatch,
    #[error("invalid transition at step {step}: {source}")]
    Step {
        step: usize,
        source: TransitionError,
    },
}

/// True iff the boundary arrangements match the instance and every
/// consecutive pair of arrangements is a valid transition. Returns the first
/// defect instead of a bare `false` so callers can report it.
pub fn validate_solution(sol: &Solution, inst: &CpfInstance) -> Result<(), SolutionDefect> {
    if sol.steps[0].agent_count() != inst.agent_count() {
        return Err(SolutionDefect::AgentCountMismatch(
            sol.steps[0].agent_count(),
            inst.agent_count(),
        ));
    }
    if sol.steps[0] != inst.initial {
        return Err(SolutionDefect::InitialMismatch);
    }
    if *sol.steps.last().unwrap() != inst.goal {
        return Err(SolutionDefect::GoalMismatch);
    }
    for (step, pair) in sol.steps.windows(2).enumerate() {
        validate_transition(&pair[0], &pair[1], &inst.graph)
            .map_err(|source| SolutionDefect::Step { step, source })?;
    }
    Ok(())
}

/// Makespan and total moves of a (validated) solution.
pub fn metrics(sol: &Solution) -> SolutionMetrics {
    let total_moves = sol
        .steps
        .windows(2)
        .map(|pair| {
            (0..pair[0].agent_count())
                .filter(|&a| pair[0].vertex_of(a) != pair[1].vertex_of(a))
                .count()
        })
        .sum();
    SolutionMetrics {
        makespan: sol.makespan(),
        total_moves,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Reads the instance text format:
///
/// ```text
/// # comment
/// cpf <n> <m> <mu>
/// e <u> <v>              (m lines, 1-based vertex ids)
/// a <id> <start> <goal>  (mu lines, 1-based agent and vertex ids)
/// ```
pub fn read_instance(reader: impl BufRead) -> Result<CpfInstance, ReadError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut starts: Vec<Option<usize>> = Vec::new();
    let mut goals: Vec<Option<usize>> = Vec::new();
    let mut agents_seen = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let tag = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        let parse_num = |s: &str, what: &str| -> Result<usize, ParseError> {
            s.parse::<usize>()
                .map_err(|_| ParseError::new(lineno, format!("invalid {what}: {s:?}")))
        };
        match tag {
            "cpf" => {
                if header.is_some() {
                    return Err(ParseError::new(lineno, "duplicate cpf header").into());
                }
                if rest.len() != 3 {
                    return Err(
                        ParseError::new(lineno, "expected: cpf <n> <m> <mu>").into()
                    );
                }
                let n = parse_num(rest[0], "vertex count")?;
                let m = parse_num(rest[1], "edge count")?;
                let mu = parse_num(rest[2], "agent count")?;
                starts = vec![None; mu];
                goals = vec![None; mu];
                header = Some((n, m, mu));
            }
            "e" => {
                let (n, _, _) = header
                    .ok_or_else(|| ParseError::new(lineno, "edge before cpf header"))?;
                if rest.len() != 2 {
                    return Err(ParseError::new(lineno, "expected: e <u> <v>").into());
                }
                let u = parse_num(rest[0], "vertex id")?;
                let v = parse_num(rest[1], "vertex id")?;
                for x in [u, v] {
                    if x == 0 || x > n {
                        return Err(ParseError::new(
                            lineno,
                            format!("vertex id {x} out of range 1..={n}"),
                        )
                        .into());
                    }
                }
                if u == v {
                    return Err(ParseError::new(lineno, format!("self-loop at {u}")).into());
                }
                edges.push((u - 1, v - 1));
            }
            "a" => {
                let (n, _, mu) = header
                    .ok_or_else(|| ParseError::new(lineno, "agent before cpf header"))?;
                if rest.len() != 3 {
                    return Err(
                        ParseError::new(lineno, "expected: a <id> <start> <goal>").into()
                    );
                }
                let id = parse_num(rest[0], "agent id")?;
                if id == 0 || id > mu {
                    return Err(ParseError::new(
                        lineno,
                        format!("agent id {id} out of range 1..={mu}"),
                    )
                    .into());
                }
                if starts[id - 1].is_some() {
                    return Err(
                        ParseError::new(lineno, format!("duplicate agent {id}")).into()
                    );
                }
                let start = parse_num(rest[1], "start vertex")?;
                let goal = parse_num(rest[2], "goal vertex")?;
                for x in [start, goal] {
                    if x == 0 || x > n {
                        return Err(ParseError::new(
                            lineno,
                            format!("vertex id {x} out of range 1..={n}"),
                        )
                        .into());
                    }
                }
                starts[id - 1] = Some(start - 1);
                goals[id - 1] = Some(goal - 1);
                agents_seen += 1;
            }
            other => {
                return Err(
                    ParseError::new(lineno, format!("unknown line tag {other:?}")).into()
                );
            }
        }
    }

    let (n, m, mu) =
        header.ok_or_else(|| ParseError::new(0, "missing cpf header"))?;
    if edges.len() != m {
        return Err(
            ParseError::new(0, format!("header declares {m} edges, found {}", edges.len()))
                .into(),
        );
    }
    if agents_seen != mu {
        return Err(ParseError::new(
            0,
            format!("header declares {mu} agents, found {agents_seen}"),
        )
        .into());
    }
    let graph =
        Graph::new(n, edges).map_err(|e| ParseError::new(0, e.to_string()))?;
    let initial = Arrangement::new(
        starts.into_iter().map(|s| s.unwrap()).collect(),
        &graph,
    )
    .map_err(|e| ParseError::new(0, e.to_string()))?;
    let goal = Arrangement::new(goals.into_iter().map(|g| g.unwrap()).collect(), &graph)
        .map_err(|e| ParseError::new(0, e.to_string()))?;
    CpfInstance::new(graph, initial, goal)
        .map_err(|e| ParseError::new(0, e.to_string()).into())
}

/// Writes the canonical instance text; `read_instance(write_instance(x)) == x`.
pub fn write_instance(inst: &CpfInstance, mut w: impl Write) -> io::Result<()> {
    writeln!(
        w,
        "cpf {} {} {}",
        inst.graph.vertex_count(),
        inst.graph.edge_count(),
        inst.agent_count()
    )?;
    for (u, v) in inst.graph.edges() {
        writeln!(w, "e {} {}", u + 1, v + 1)?;
    }
    for agent in 0..inst.agent_count() {
        writeln!(
            w,
            "a {} {} {}",
            agent + 1,
            inst.initial.vertex_of(agent) + 1,
            inst.goal.vertex_of(agent) + 1
        )?;
    }
    Ok(())
}

/// Writes a solution as one line per time step: `t <l>: a1@<v> a2@<v> ...`.
pub fn write_solution(sol: &Solution, mut w: impl Write) -> io::Result<()> {
    for (l, arr) in sol.steps.iter().enumerate() {
        write!(w, "t {l}:")?;
        for agent in 0..arr.agent_count() {
            write!(w, " a{}@{}", agent + 1, arr.vertex_of(agent) + 1)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads the solution format produced by [`write_solution`].
pub fn read_solution(reader: impl BufRead, graph: &Graph) -> Result<Solution, ReadError> {
    let mut steps = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let rest = content
            .strip_prefix("t ")
            .ok_or_else(|| ParseError::new(lineno, "expected: t <l>: a1@v ..."))?;
        let (step_str, agents_str) = rest
            .split_once(':')
            .ok_or_else(|| ParseError::new(lineno, "missing ':' after step index"))?;
        let step: usize = step_str
            .trim()
            .parse()
            .map_err(|_| ParseError::new(lineno, format!("invalid step index {step_str:?}")))?;
        if step != steps.len() {
            return Err(ParseError::new(
                lineno,
                format!("expected step {}, found {step}", steps.len()),
            )
            .into());
        }
        let mut positions = Vec::new();
        for (k, token) in agents_str.split_whitespace().enumerate() {
            let body = token
                .strip_prefix('a')
                .and_then(|t| t.split_once('@'))
                .ok_or_else(|| {
                    ParseError::new(lineno, format!("expected a<i>@<v>, found {token:?}"))
                })?;
            let agent: usize = body.0.parse().map_err(|_| {
                ParseError::new(lineno, format!("invalid agent id {:?}", body.0))
            })?;
            if agent != k + 1 {
                return Err(ParseError::new(
                    lineno,
                    format!("expected agent a{}, found a{agent}", k + 1),
                )
                .into());
            }
            let vertex: usize = body.1.parse().map_err(|_| {
                ParseError::new(lineno, format!("invalid vertex id {:?}", body.1))
            })?;
            if vertex == 0 || vertex > graph.vertex_count() {
                return Err(ParseError::new(
                    lineno,
                    format!("vertex id {vertex} out of range 1..={}", graph.vertex_count()),
                )
                .into());
            }
            positions.push(vertex - 1);
        }
        let arr = Arrangement::new(positions, graph)
            .map_err(|e| ParseError::new(lineno, e.to_string()))?;
        steps.push(arr);
    }
    if steps.is_empty() {
        return Err(ParseError::new(0, "empty solution file").into());
    }
    Ok(Solution::new(steps))
}

impl fmt::Display for SolutionMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "makespan {} / total moves {}",
            self.makespan, self.total_moves
        )
    }
}
