//! Mission files, the end-to-end planning pipeline, and plan verification.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{align_headings, CostWeights, Path, SE2State};
use crate::gridmap::MapBundle;
use crate::roadmap::{PlannerStats, QueryConfig, Roadmap};
use crate::selection::{
    dp_select_planned, idp_select, irba_select, EdgeCache, IterationTrace, RoadmapPlanner,
    SelectionProblem,
};
use crate::sequencing::{build_cost_matrix, solve_tsp, TspMode};
use crate::validity::{CheckStats, CheckerConfig, RobotFootprint, StateChecker};

const MISSION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toi {
    pub id: String,
    pub pose: SE2State,
    pub pois: Vec<SE2State>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub start: SE2State,
    pub tois: Vec<Toi>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionFile {
    version: u32,
    start: SE2State,
    tois: Vec<Toi>,
}

impl Mission {
    pub fn new(start: SE2State, tois: Vec<Toi>) -> Result<Self> {
        let m = Self { start, tois };
        m.check_structure()?;
        Ok(m)
    }

    fn check_structure(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in &self.tois {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::Mission(format!("duplicate ToI id `{}`", t.id)));
            }
            if t.pois.is_empty() {
                return Err(Error::NoPoi(t.id.clone()));
            }
        }
        Ok(())
    }

    /// Checks the start and every PoI against the map.
    pub fn validate(&self, checker: &StateChecker<'_>, stats: &mut CheckStats) -> Result<()> {
        self.check_structure()?;
        if !checker.check_state(&self.start, stats) {
            return Err(Error::Mission(format!("start {} is not valid", self.start)));
        }
        for t in &self.tois {
            for (k, p) in t.pois.iter().enumerate() {
                if !checker.check_state(p, stats) {
                    return Err(Error::Mission(format!("PoI {k} of ToI `{}` at {p} is not valid", t.id)));
                }
            }
        }
        Ok(())
    }

    /// Mission with only the given ToIs, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            start: self.start,
            tois: indices.iter().map(|&i| self.tois[i].clone()).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MissionFile = serde_json::from_str(text)?;
        if file.version != MISSION_VERSION {
            return Err(Error::Mission(format!("unsupported version {}", file.version)));
        }
        Self::new(file.start, file.tois)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MissionFile {
            version: MISSION_VERSION,
            start: self.start,
            tois: self.tois.clone(),
        })?)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Idp,
    Dp,
    Irba,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Idp => "idp",
            Method::Dp => "dp",
            Method::Irba => "irba",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idp" => Ok(Method::Idp),
            "dp" => Ok(Method::Dp),
            "irba" => Ok(Method::Irba),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub weights: CostWeights,
    pub checker: CheckerConfig,
    pub footprint: RobotFootprint,
    pub query: QueryConfig,
    pub method: Method,
    pub tsp: TspMode,
    /// Uniform samples drawn before the first query; `None` uses half the vertex cap.
    pub preseed_vertices: Option<usize>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            checker: CheckerConfig::default(),
            footprint: RobotFootprint::default(),
            query: QueryConfig {
                improvement_batches: Some(1),
                ..QueryConfig::default()
            },
            method: Method::Idp,
            tsp: TspMode::Auto,
            preseed_vertices: None,
        }
    }
}

impl MissionConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.query.rng_seed = seed;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// Empty roadmap seeded and pre-filled as the pipeline would build it.
    pub fn initial_roadmap(&self, map: &MapBundle) -> Roadmap {
        let mut rm = Roadmap::new(map.bounds(), self.weights, self.query.rng_seed);
        let preseed = self
            .preseed_vertices
            .unwrap_or(self.query.max_vertices / 2)
            .min(self.query.max_vertices);
        rm.expand_uniform(preseed, self.query.k_neighbors_scale);
        rm
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub validation: f64,
    pub cost_matrix: f64,
    pub sequencing: f64,
    pub selection: f64,
    pub assembly: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub method: Method,
    /// Paths planned during PoI selection.
    pub paths_planned: usize,
    /// Paths planned for the ToI cost matrix.
    pub cost_matrix_paths: usize,
    pub tsdf_queries: u64,
    pub traversability_queries: u64,
    pub idp_iterations: usize,
    pub wall_times: PhaseTimes,
    pub check: CheckStats,
    pub planner: PlannerStats,
    pub roadmap_vertices: usize,
    /// `null` marks an unreachable pair.
    pub cost_matrix: Vec<Vec<Option<f64>>>,
    pub tour_cost: f64,
    /// Waypoint index of each chosen PoI, in visiting order.
    pub poi_waypoints: Vec<usize>,
    /// Cost of the emitted waypoints after heading alignment.
    pub aligned_path_cost: f64,
    pub selection_trace: Vec<IterationTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// ToI ids in visiting order.
    pub sequence: Vec<String>,
    /// Chosen PoI index per visited ToI, aligned with `sequence`.
    pub chosen_pois: Vec<usize>,
    pub waypoints: Path,
    pub segment_costs: Vec<f64>,
    pub total_cost: f64,
    pub closed: bool,
    pub stats: PlanStats,
}

impl Plan {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn seconds_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Runs the whole pipeline on a fresh roadmap.
pub fn run_mission(map: &MapBundle, mission: &Mission, cfg: &MissionConfig) -> Result<Plan> {
    let mut roadmap = cfg.initial_roadmap(map);
    run_mission_on(map, mission, cfg, &mut roadmap)
}

/// Runs the whole pipeline on a caller-provided roadmap, which keeps growing.
pub fn run_mission_on(
    map: &MapBundle,
    mission: &Mission,
    cfg: &MissionConfig,
    roadmap: &mut Roadmap,
) -> Result<Plan> {
    cfg.query.validate()?;
    if roadmap.weights() != &cfg.weights {
        return Err(Error::Config("roadmap was built with different cost weights".into()));
    }
    let began = Instant::now();
    let mut times = PhaseTimes::default();
    let checker = StateChecker::new(map, cfg.footprint, cfg.checker);
    let mut check = CheckStats::default();

    let t = Instant::now();
    mission.validate(&checker, &mut check)?;
    times.validation = seconds_since(t);
    let planner_before = *roadmap.stats();

    let t = Instant::now();
    let build = build_cost_matrix(mission, roadmap, &cfg.query, &checker)?;
    times.cost_matrix = seconds_since(t);

    for (i, row) in build.matrix.entries().iter().enumerate().skip(1) {
        if row.iter().enumerate().all(|(j, c)| j == i || c.is_infinite()) {
            return Err(Error::Disconnected(format!("ToI `{}`", mission.tois[i - 1].id)));
        }
    }

    let t = Instant::now();
    let tour = solve_tsp(&build.matrix, cfg.tsp)?;
    times.sequencing = seconds_since(t);

    let t = Instant::now();
    let stages = tour.order.iter().map(|&i| mission.tois[i - 1].pois.clone()).collect();
    let labels = tour
        .order
        .iter()
        .map(|&i| format!("ToI `{}`", mission.tois[i - 1].id))
        .collect();
    let problem = SelectionProblem::with_labels(mission.start, stages, labels)?;
    let mut cache = EdgeCache::new();
    let selection = if problem.n() == 0 {
        None
    } else {
        let mut planner = RoadmapPlanner::new(roadmap, checker, cfg.query.clone());
        Some(match cfg.method {
            Method::Idp => idp_select(&problem, &mut planner, &mut cache)?,
            Method::Dp => dp_select_planned(&problem, &mut planner, &mut cache)?,
            Method::Irba => irba_select(&problem, &mut planner, &mut cache)?,
        })
    };
    times.selection = seconds_since(t);

    let t = Instant::now();
    let mut waypoints = vec![mission.start];
    let mut fixed = vec![0];
    let mut poi_waypoints = Vec::new();
    let mut segment_costs = Vec::new();
    let mut total_cost = 0.0;
    if let Some(sel) = &selection {
        for (k, (a, b)) in problem.chain(&sel.chosen).into_iter().enumerate() {
            let seg = cache
                .get(a, b)
                .ok_or_else(|| Error::Invariant(format!("chain segment {a} -> {b} missing from cache")))?;
            let path = seg
                .path
                .as_ref()
                .ok_or_else(|| Error::Invariant(format!("chain segment {a} -> {b} has no path")))?;
            if path.first() != problem.pose(a) || path.last() != problem.pose(b) {
                return Err(Error::Invariant(format!("segment {a} -> {b} does not join its poses")));
            }
            waypoints.extend_from_slice(&path.waypoints()[1..]);
            fixed.push(waypoints.len() - 1);
            if k + 1 < problem.chain(&sel.chosen).len() {
                poi_waypoints.push(waypoints.len() - 1);
            }
        }
        segment_costs = sel.segment_costs.clone();
        total_cost = sel.total_cost;
    }
    let raw = Path::new(waypoints)?;
    let aligned = align_validated(&raw, &fixed, &checker, &mut check);
    let aligned_path_cost = aligned.cost(&cfg.weights);
    times.assembly = seconds_since(t);
    times.total = seconds_since(began);

    let planner = {
        let after = *roadmap.stats();
        let mut delta = PlannerStats {
            samples_drawn: after.samples_drawn - planner_before.samples_drawn,
            vertices_checked: after.vertices_checked - planner_before.vertices_checked,
            edges_checked: after.edges_checked - planner_before.edges_checked,
            candidate_path_edges: after.candidate_path_edges - planner_before.candidate_path_edges,
            searches: after.searches - planner_before.searches,
            check: CheckStats::default(),
        };
        delta.check = subtract_checks(&after.check, &planner_before.check);
        delta
    };
    let mut all_checks = check;
    all_checks += planner.check;

    let sequence: Vec<String> = tour.order.iter().map(|&i| mission.tois[i - 1].id.clone()).collect();
    Ok(Plan {
        sequence,
        chosen_pois: selection.as_ref().map(|s| s.chosen.clone()).unwrap_or_default(),
        waypoints: aligned,
        segment_costs,
        total_cost,
        closed: true,
        stats: PlanStats {
            method: cfg.method,
            paths_planned: selection.as_ref().map_or(0, |s| s.paths_planned),
            cost_matrix_paths: build.plans.len(),
            tsdf_queries: all_checks.tsdf_queries,
            traversability_queries: all_checks.traversability_queries,
            idp_iterations: selection.as_ref().map_or(0, |s| s.iterations),
            wall_times: times,
            check: all_checks,
            planner,
            roadmap_vertices: roadmap.len(),
            cost_matrix: build
                .matrix
                .entries()
                .iter()
                .map(|row| row.iter().map(|c| c.is_finite().then_some(*c)).collect())
                .collect(),
            tour_cost: tour.cost,
            poi_waypoints,
            aligned_path_cost,
            selection_trace: selection.map(|s| s.trace).unwrap_or_default(),
        },
    })
}

fn subtract_checks(a: &CheckStats, b: &CheckStats) -> CheckStats {
    CheckStats {
        traversability_queries: a.traversability_queries - b.traversability_queries,
        tsdf_queries: a.tsdf_queries - b.tsdf_queries,
        states_accepted_by_traversability: a.states_accepted_by_traversability
            - b.states_accepted_by_traversability,
        states_rejected_by_traversability: a.states_rejected_by_traversability
            - b.states_rejected_by_traversability,
        states_sent_to_volumetric: a.states_sent_to_volumetric - b.states_sent_to_volumetric,
        motions_checked: a.motions_checked - b.motions_checked,
    }
}

/// Aligns headings with the path direction, then restores the original yaw at
/// both ends of any motion the alignment made invalid, until all motions pass.
fn align_validated(
    path: &Path,
    fixed: &[usize],
    checker: &StateChecker<'_>,
    stats: &mut CheckStats,
) -> Path {
    let original = path.waypoints();
    let mut states = align_headings(path, fixed).into_waypoints();
    let mut restored = vec![false; states.len()];
    loop {
        let mut changed = false;
        for i in 0..states.len().saturating_sub(1) {
            if restored[i] && restored[i + 1] {
                continue;
            }
            if !checker.check_motion(&states[i], &states[i + 1], stats) {
                for k in [i, i + 1] {
                    if !restored[k] {
                        states[k] = original[k];
                        restored[k] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Path::new(states).expect("alignment keeps the waypoint count")
}

/// Checks the constraints every emitted plan must satisfy.
pub fn verify_plan(plan: &Plan, mission: &Mission, checker: &StateChecker<'_>) -> Result<()> {
    let wps = plan.waypoints.waypoints();
    if !plan.closed || wps.first() != Some(&mission.start) || wps.last() != Some(&mission.start) {
        return Err(Error::InvalidPlan("path is not closed at the start".into()));
    }
    let mut stats = CheckStats::default();
    for (i, w) in wps.windows(2).enumerate() {
        if !checker.check_motion(&w[0], &w[1], &mut stats) {
            return Err(Error::InvalidPlan(format!("motion {i} -> {} is not valid", i + 1)));
        }
    }
    if plan.sequence.len() != mission.tois.len() || plan.chosen_pois.len() != plan.sequence.len() {
        return Err(Error::InvalidPlan("sequence does not cover every ToI once".into()));
    }
    let mut seen = BTreeSet::new();
    for (id, &k) in plan.sequence.iter().zip(&plan.chosen_pois) {
        let toi = mission
            .tois
            .iter()
            .find(|t| &t.id == id)
            .ok_or_else(|| Error::InvalidPlan(format!("unknown ToI `{id}`")))?;
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidPlan(format!("ToI `{id}` visited twice")));
        }
        let poi = toi
            .pois
            .get(k)
            .ok_or_else(|| Error::InvalidPlan(format!("ToI `{id}` has no PoI {k}")))?;
        if !wps.contains(poi) {
            return Err(Error::InvalidPlan(format!("PoI {k} of ToI `{id}` is not on the path")));
        }
    }
    let sum = plan.segment_costs.iter().fold(0.0, |a, c| a + c);
    if (sum - plan.total_cost).abs() > 1e-9 {
        return Err(Error::InvalidPlan(format!(
            "segment costs sum to {sum}, total is {}",
            plan.total_cost
        )));
    }
    Ok(())
}
