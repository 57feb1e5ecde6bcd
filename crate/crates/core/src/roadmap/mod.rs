//! Lazily validated probabilistic roadmap with informed batch sampling.
//!
//! Vertices and edges are inserted unchecked. A query searches the roadmap
//! with A* over everything not yet known to be invalid, then validates the
//! candidate path (vertices first, then edges), prunes what fails and
//! searches again until the candidate is fully valid. Sampling continues in
//! batches, restricted to the informed region once a solution exists. The
//! roadmap and everything learned about it persist across queries.

mod sampler;
mod search;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use sampler::{sample, sample_uniform, InformedRegion};

use crate::error::{Endpoint, Error, Result};
use crate::geometry::{angle_diff, segment_cost, CostWeights, Path, SE2State};
use crate::gridmap::Bounds;
use crate::validity::{CheckStats, StateChecker};

/// Distance below which an inserted endpoint is merged with an existing vertex.
pub const ENDPOINT_MATCH_TOLERANCE: f64 = 1e-9;

/// Dimension of the planning space (x, y, yaw) used in the PRM* constant.
const STATE_DIMENSION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Unchecked,
    Valid,
    Invalid,
}

#[derive(Debug, Clone)]
struct Vertex {
    state: SE2State,
    status: Status,
    /// Ids of incident edges that are not known invalid.
    edges: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Edge {
    a: usize,
    b: usize,
    cost: f64,
    status: Status,
}

impl Edge {
    fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryConfig {
    /// Cap on the number of roadmap vertices; no samples are drawn beyond it.
    pub max_vertices: usize,
    pub batch_size: usize,
    /// Wall-clock limit per query, in seconds.
    pub time_budget: Option<f64>,
    pub k_neighbors_scale: f64,
    pub rng_seed: u64,
    /// Informed batches a query may draw once it has a solution. `None`
    /// keeps improving until the vertex cap or region collapse.
    pub improvement_batches: Option<usize>,
}

impl QueryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_vertices < self.batch_size {
            return Err(Error::Config(format!(
                "need max_vertices >= batch_size >= 1, got {} and {}",
                self.max_vertices, self.batch_size
            )));
        }
        if !(self.k_neighbors_scale.is_finite() && self.k_neighbors_scale > 0.0) {
            return Err(Error::Config("k_neighbors_scale must be > 0".into()));
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return Err(Error::Config("time_budget must be > 0".into()));
            }
        }
        Ok(())
    }
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self {
            max_vertices: 3000,
            batch_size: 256,
            time_budget: None,
            k_neighbors_scale: 1.5,
            rng_seed: 0,
            improvement_batches: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    Solved,
    Unreachable,
    BudgetExhausted,
}

/// Counters of one query (or, on the roadmap, of its whole life).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerStats {
    pub samples_drawn: u64,
    pub vertices_checked: u64,
    pub edges_checked: u64,
    /// Sum of edge counts over every candidate path returned by a search.
    pub candidate_path_edges: u64,
    pub searches: u64,
    pub check: CheckStats,
}

impl std::ops::AddAssign for PlannerStats {
    fn add_assign(&mut self, rhs: Self) {
        self.samples_drawn += rhs.samples_drawn;
        self.vertices_checked += rhs.vertices_checked;
        self.edges_checked += rhs.edges_checked;
        self.candidate_path_edges += rhs.candidate_path_edges;
        self.searches += rhs.searches;
        self.check += rhs.check;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// Validated path, present iff `status` is `Solved`.
    pub path: Option<Path>,
    /// Path cost, `+inf` when unsolved.
    pub cost: f64,
    pub status: PlanStatus,
    pub stats: PlannerStats,
    /// Roadmap size after the query.
    pub vertices: usize,
    pub edges: usize,
}

#[derive(Clone)]
pub struct Roadmap {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    live_edges: usize,
    weights: CostWeights,
    bounds: Bounds,
    rng: ChaCha8Rng,
    stats: PlannerStats,
}

impl Roadmap {
    pub fn new(bounds: Bounds, weights: CostWeights, rng_seed: u64) -> Self {
        Self {
            vertices: Vec::new(),
            edges: Vec::new(),
            live_edges: 0,
            weights,
            bounds,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            stats: PlannerStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges not known to be invalid.
    pub fn edge_count(&self) -> usize {
        self.live_edges
    }

    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Cumulative counters over all queries run on this roadmap.
    pub fn stats(&self) -> &PlannerStats {
        &self.stats
    }

    pub fn state(&self, v: usize) -> &SE2State {
        &self.vertices[v].state
    }

    pub fn status(&self, v: usize) -> Status {
        self.vertices[v].status
    }

    /// Neighbors through edges that are not known invalid, with edge status.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, Status, f64)> + '_ {
        self.vertices[v].edges.iter().map(move |&e| {
            let edge = &self.edges[e];
            (edge.other(v), edge.status, edge.cost)
        })
    }

    fn k_nearest_count(&self, n: usize, scale: f64) -> usize {
        if n < 2 {
            return 0;
        }
        let k = scale * std::f64::consts::E * (1.0 + 1.0 / STATE_DIMENSION) * (n as f64).ln();
        (k.ceil() as usize).max(1)
    }

    /// Inserts an unchecked vertex and connects it to its nearest neighbors.
    fn insert(&mut self, state: SE2State, status: Status, k_scale: f64) -> usize {
        let id = self.vertices.len();
        let k = self.k_nearest_count(id + 1, k_scale);
        let mut candidates: Vec<(f64, usize)> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.status != Status::Invalid)
            .map(|(u, v)| (segment_cost(&state, &v.state, &self.weights), u))
            .collect();
        let by_cost = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k, by_cost);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(by_cost);

        self.vertices.push(Vertex {
            state,
            status,
            edges: Vec::with_capacity(candidates.len()),
        });
        for (cost, u) in candidates {
            let e = self.edges.len();
            self.edges.push(Edge {
                a: u,
                b: id,
                cost,
                status: Status::Unchecked,
            });
            self.vertices[u].edges.push(e);
            self.vertices[id].edges.push(e);
            self.live_edges += 1;
        }
        id
    }

    fn find_vertex(&self, s: &SE2State) -> Option<usize> {
        self.vertices.iter().position(|v| {
            v.status != Status::Invalid
                && (v.state.x() - s.x()).abs() <= ENDPOINT_MATCH_TOLERANCE
                && (v.state.y() - s.y()).abs() <= ENDPOINT_MATCH_TOLERANCE
                && angle_diff(v.state.yaw(), s.yaw()) <= ENDPOINT_MATCH_TOLERANCE
        })
    }

    /// Inserts a known-valid state (or reuses a matching vertex) and returns its id.
    pub fn add_endpoint(&mut self, state: SE2State, k_scale: f64) -> usize {
        match self.find_vertex(&state) {
            Some(v) => {
                self.vertices[v].status = Status::Valid;
                v
            }
            None => self.insert(state, Status::Valid, k_scale),
        }
    }

    /// Validates both endpoints, then inserts them. Returns their vertex ids.
    pub fn add_query_endpoints(
        &mut self,
        start: &SE2State,
        goal: &SE2State,
        k_scale: f64,
        checker: &StateChecker<'_>,
        stats: &mut CheckStats,
    ) -> Result<(usize, usize)> {
        for (endpoint, s) in [(Endpoint::Start, start), (Endpoint::Goal, goal)] {
            if !checker.check_state(s, stats) {
                return Err(Error::InvalidEndpoint {
                    endpoint,
                    x: s.x(),
                    y: s.y(),
                    yaw: s.yaw(),
                });
            }
        }
        let s = self.add_endpoint(*start, k_scale);
        let g = self.add_endpoint(*goal, k_scale);
        Ok((s, g))
    }

    /// Draws `count` uniform samples into the roadmap (unchecked).
    pub fn expand_uniform(&mut self, count: usize, k_scale: f64) {
        for _ in 0..count {
            let s = sample_uniform(&self.bounds, &mut self.rng);
            self.insert(s, Status::Unchecked, k_scale);
        }
        self.stats.samples_drawn += count as u64;
    }

    fn invalidate_vertex(&mut self, v: usize) {
        self.vertices[v].status = Status::Invalid;
        let incident = std::mem::take(&mut self.vertices[v].edges);
        for e in incident {
            self.edges[e].status = Status::Invalid;
            self.live_edges -= 1;
            let u = self.edges[e].other(v);
            self.vertices[u].edges.retain(|&x| x != e);
        }
    }

    fn invalidate_edge(&mut self, e: usize) {
        let (a, b) = (self.edges[e].a, self.edges[e].b);
        self.edges[e].status = Status::Invalid;
        self.live_edges -= 1;
        self.vertices[a].edges.retain(|&x| x != e);
        self.vertices[b].edges.retain(|&x| x != e);
    }

    /// Searches and validates until a fully valid path exists or none is left.
    fn lazy_search(
        &mut self,
        start: usize,
        goal: usize,
        checker: &StateChecker<'_>,
        stats: &mut PlannerStats,
    ) -> Option<(Vec<usize>, f64)> {
        'search: loop {
            stats.searches += 1;
            let (vertices, edges) = search::astar(self, start, goal)?;
            stats.candidate_path_edges += edges.len() as u64;

            let mut vertex_failed = false;
            for &v in &vertices {
                if self.vertices[v].status == Status::Unchecked {
                    stats.vertices_checked += 1;
                    if checker.check_state(&self.vertices[v].state, &mut stats.check) {
                        self.vertices[v].status = Status::Valid;
                    } else {
                        self.invalidate_vertex(v);
                        vertex_failed = true;
                    }
                }
            }
            if vertex_failed {
                continue 'search;
            }
            for &e in &edges {
                if self.edges[e].status == Status::Unchecked {
                    stats.edges_checked += 1;
                    let (a, b) = (self.edges[e].a, self.edges[e].b);
                    let ok = checker.check_motion_interior(
                        &self.vertices[a].state,
                        &self.vertices[b].state,
                        &mut stats.check,
                    );
                    if ok {
                        self.edges[e].status = Status::Valid;
                    } else {
                        self.invalidate_edge(e);
                        continue 'search;
                    }
                }
            }
            let cost = edges.iter().map(|&e| self.edges[e].cost).sum();
            return Some((vertices, cost));
        }
    }

    /// Optimal point-to-point query. See the module docs for the procedure.
    pub fn plan_path(
        &mut self,
        start: &SE2State,
        goal: &SE2State,
        cfg: &QueryConfig,
        checker: &StateChecker<'_>,
    ) -> Result<PlanResult> {
        cfg.validate()?;
        let began = Instant::now();
        let mut stats = PlannerStats::default();
        let (s, g) =
            self.add_query_endpoints(start, goal, cfg.k_neighbors_scale, checker, &mut stats.check)?;

        if s == g {
            return Ok(self.finish(Some((vec![s], 0.0)), PlanStatus::Solved, stats, start, goal));
        }

        let mut best = self.lazy_search(s, g, checker, &mut stats);
        let mut improvement_batches = 0usize;
        let mut timed_out = false;
        loop {
            if let Some(limit) = cfg.time_budget {
                if began.elapsed().as_secs_f64() >= limit {
                    timed_out = true;
                    break;
                }
            }
            if self.vertices.len() >= cfg.max_vertices {
                break;
            }
            if best.is_some() {
                if cfg.improvement_batches.is_some_and(|n| improvement_batches >= n) {
                    break;
                }
                improvement_batches += 1;
            }
            let count = cfg.batch_size.min(cfg.max_vertices - self.vertices.len());
            let best_cost = best.as_ref().map(|(_, c)| *c);
            let mut collapsed = false;
            for _ in 0..count {
                match sample(start, goal, best_cost, &self.bounds, &self.weights, &mut self.rng) {
                    Ok(state) => {
                        stats.samples_drawn += 1;
                        self.insert(state, Status::Unchecked, cfg.k_neighbors_scale);
                    }
                    Err(Error::RegionEmpty) => {
                        collapsed = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(found) = self.lazy_search(s, g, checker, &mut stats) {
                best = Some(found);
            }
            if collapsed {
                break;
            }
        }

        let status = match (&best, timed_out) {
            (Some(_), _) => PlanStatus::Solved,
            (None, true) => PlanStatus::BudgetExhausted,
            (None, false) => PlanStatus::Unreachable,
        };
        Ok(self.finish(best, status, stats, start, goal))
    }

    fn finish(
        &mut self,
        found: Option<(Vec<usize>, f64)>,
        status: PlanStatus,
        stats: PlannerStats,
        start: &SE2State,
        goal: &SE2State,
    ) -> PlanResult {
        self.stats += stats;
        let (path, cost) = match found {
            Some((vertices, _)) => {
                let mut states: Vec<SE2State> =
                    vertices.iter().map(|&v| self.vertices[v].state).collect();
                // endpoints may have matched a vertex within tolerance; report the query states
                let last = states.len() - 1;
                states[0] = *start;
                states[last] = *goal;
                let path = Path::new(states).expect("search returns at least one vertex");
                // recomputed in path order so the cost equals path_cost bit for bit
                let cost = path.cost(&self.weights);
                (Some(path), cost)
            }
            None => (None, f64::INFINITY),
        };
        PlanResult {
            path,
            cost,
            status,
            stats,
            vertices: self.vertices.len(),
            edges: self.live_edges,
        }
    }
}
