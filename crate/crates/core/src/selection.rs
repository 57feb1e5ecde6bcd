//! Choosing one PoI per ToI along a fixed visiting sequence.
//!
//! Three strategies share one stage layout: the start, then one PoI set per
//! ToI in visiting order, then back to the start.
//!
//! * [`dp_select`] runs a backward value recursion over a complete table of
//!   path costs.
//! * [`idp_select`] runs the same recursion with straight-line lower bounds
//!   for every pair that has not been planned yet, plans the chosen chain,
//!   and repeats until the chosen chain no longer changes.
//! * [`irba_select`] starts from the straight-line choice and re-chooses one
//!   stage at a time looking only at its two neighbors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_cost, CostWeights, Path, SE2State};
use crate::roadmap::{PlanStatus, PlannerStats, QueryConfig, Roadmap};
use crate::validity::StateChecker;

/// A pose in the stage layout. Stage 0 is the start; stage `i >= 1` is the
/// PoI set of the i-th visited ToI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoseId {
    pub stage: usize,
    pub index: usize,
}

impl PoseId {
    pub const START: PoseId = PoseId { stage: 0, index: 0 };

    pub fn new(stage: usize, index: usize) -> Self {
        Self { stage, index }
    }
}

impl fmt::Display for PoseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stage == 0 {
            f.write_str("start")
        } else {
            write!(f, "stage {} PoI {}", self.stage, self.index)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionProblem {
    pub start: SE2State,
    /// PoI sets in visiting order.
    pub stages: Vec<Vec<SE2State>>,
    /// Display name per stage, used in error messages.
    pub labels: Vec<String>,
}

impl SelectionProblem {
    pub fn new(start: SE2State, stages: Vec<Vec<SE2State>>) -> Result<Self> {
        let labels = (1..=stages.len()).map(|i| format!("stage {i}")).collect();
        Self::with_labels(start, stages, labels)
    }

    pub fn with_labels(start: SE2State, stages: Vec<Vec<SE2State>>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != stages.len() {
            return Err(Error::Config("one label per stage required".into()));
        }
        if let Some(i) = stages.iter().position(|s| s.is_empty()) {
            return Err(Error::NoPoi(labels[i].clone()));
        }
        Ok(Self { start, stages, labels })
    }

    pub fn n(&self) -> usize {
        self.stages.len()
    }

    pub fn pose(&self, id: PoseId) -> &SE2State {
        if id.stage == 0 {
            &self.start
        } else {
            &self.stages[id.stage - 1][id.index]
        }
    }

    fn describe(&self, id: PoseId) -> String {
        if id.stage == 0 {
            "start".into()
        } else {
            format!("{} PoI {}", self.labels[id.stage - 1], id.index)
        }
    }

    /// Every consecutive-stage pair: `M^2 (N-1) + 2M` for uniform sets.
    pub fn all_pairs(&self) -> Vec<(PoseId, PoseId)> {
        let n = self.n();
        let mut pairs = Vec::new();
        let layer = |stage: usize| -> Vec<PoseId> {
            if stage == 0 || stage == n + 1 {
                vec![PoseId::START]
            } else {
                (0..self.stages[stage - 1].len()).map(|k| PoseId::new(stage, k)).collect()
            }
        };
        for stage in 0..=n {
            for &a in &layer(stage) {
                for &b in &layer(stage + 1) {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    /// The chain `start -> chosen... -> start` as pose pairs.
    pub fn chain(&self, chosen: &[usize]) -> Vec<(PoseId, PoseId)> {
        let mut ids = Vec::with_capacity(chosen.len() + 2);
        ids.push(PoseId::START);
        ids.extend(chosen.iter().enumerate().map(|(i, &k)| PoseId::new(i + 1, k)));
        ids.push(PoseId::START);
        ids.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Result of planning one directed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSegment {
    pub cost: f64,
    /// Absent for table-backed planners.
    pub path: Option<Path>,
}

/// Source of path costs for selection.
pub trait SegmentPlanner {
    /// A value never above the cost [`SegmentPlanner::plan`] would return.
    fn lower_bound(&self, a: PoseId, b: PoseId, problem: &SelectionProblem) -> f64;

    /// Plans `a -> b`; `Ok(None)` if unreachable.
    fn plan(&mut self, a: PoseId, b: PoseId, problem: &SelectionProblem) -> Result<Option<PlannedSegment>>;
}

/// Plans on a shared roadmap; the lower bound is the straight-segment cost.
pub struct RoadmapPlanner<'r, 'm> {
    pub roadmap: &'r mut Roadmap,
    pub checker: StateChecker<'m>,
    pub config: QueryConfig,
    pub stats: PlannerStats,
}

impl<'r, 'm> RoadmapPlanner<'r, 'm> {
    pub fn new(roadmap: &'r mut Roadmap, checker: StateChecker<'m>, config: QueryConfig) -> Self {
        Self {
            roadmap,
            checker,
            config,
            stats: PlannerStats::default(),
        }
    }

    fn weights(&self) -> CostWeights {
        *self.roadmap.weights()
    }
}

impl SegmentPlanner for RoadmapPlanner<'_, '_> {
    fn lower_bound(&self, a: PoseId, b: PoseId, problem: &SelectionProblem) -> f64 {
        segment_cost(problem.pose(a), problem.pose(b), &self.weights())
    }

    fn plan(&mut self, a: PoseId, b: PoseId, problem: &SelectionProblem) -> Result<Option<PlannedSegment>> {
        let r = self
            .roadmap
            .plan_path(problem.pose(a), problem.pose(b), &self.config, &self.checker)
            .map_err(|e| Error::Pair {
                pair: format!("{} -> {}", problem.describe(a), problem.describe(b)),
                source: Box::new(e),
            })?;
        self.stats += r.stats;
        Ok(match r.status {
            PlanStatus::Solved => Some(PlannedSegment {
                cost: r.cost,
                path: r.path,
            }),
            PlanStatus::Unreachable | PlanStatus::BudgetExhausted => None,
        })
    }
}

/// Directed pair costs with their own lower bounds, for tests and replay.
#[derive(Debug, Clone, Default)]
pub struct TablePlanner {
    pub costs: BTreeMap<(PoseId, PoseId), f64>,
    pub bounds: BTreeMap<(PoseId, PoseId), f64>,
}

impl SegmentPlanner for TablePlanner {
    fn lower_bound(&self, a: PoseId, b: PoseId, _: &SelectionProblem) -> f64 {
        self.bounds.get(&(a, b)).copied().unwrap_or(0.0)
    }

    fn plan(&mut self, a: PoseId, b: PoseId, problem: &SelectionProblem) -> Result<Option<PlannedSegment>> {
        let cost = *self
            .costs
            .get(&(a, b))
            .ok_or_else(|| Error::MissingPair(format!("{} -> {}", problem.describe(a), problem.describe(b))))?;
        Ok(cost.is_finite().then_some(PlannedSegment { cost, path: None }))
    }
}

/// Planned pairs. A pair absent from the cache is queried by its lower bound.
#[derive(Debug, Clone, Default)]
pub struct EdgeCache {
    planned: BTreeMap<(PoseId, PoseId), PlannedSegment>,
}

impl EdgeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: PoseId, b: PoseId, seg: PlannedSegment) {
        self.planned.insert((a, b), seg);
    }

    pub fn get(&self, a: PoseId, b: PoseId) -> Option<&PlannedSegment> {
        self.planned.get(&(a, b))
    }

    pub fn len(&self) -> usize {
        self.planned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planned.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(PoseId, PoseId), &PlannedSegment)> {
        self.planned.iter()
    }

    /// Complete cost table view of the cache.
    pub fn costs(&self) -> BTreeMap<(PoseId, PoseId), f64> {
        self.planned.iter().map(|(k, v)| (*k, v.cost)).collect()
    }
}

/// Planned cost when known, lower bound otherwise.
pub fn lower_bound_or_cost<P: SegmentPlanner + ?Sized>(
    a: PoseId,
    b: PoseId,
    cache: &EdgeCache,
    planner: &P,
    problem: &SelectionProblem,
) -> f64 {
    match cache.get(a, b) {
        Some(seg) => seg.cost,
        None => planner.lower_bound(a, b, problem),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub chosen: Vec<usize>,
    /// Chain value under the costs used in that iteration.
    pub value: f64,
    pub paths_planned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// PoI index per stage.
    pub chosen: Vec<usize>,
    pub total_cost: f64,
    pub segment_costs: Vec<f64>,
    pub paths_planned: usize,
    pub iterations: usize,
    pub trace: Vec<IterationTrace>,
}

/// Backward recursion and forward argmin extraction; lowest index wins ties.
fn dp_core(
    problem: &SelectionProblem,
    mut cost: impl FnMut(PoseId, PoseId) -> Result<f64>,
) -> Result<(Vec<usize>, f64)> {
    let n = problem.n();
    if n == 0 {
        return Ok((vec![], 0.0));
    }
    // value[i][k]: cost-to-go from PoI k of stage i+1
    let mut value: Vec<Vec<f64>> = vec![Vec::new(); n];
    value[n - 1] = (0..problem.stages[n - 1].len())
        .map(|k| cost(PoseId::new(n, k), PoseId::START))
        .collect::<Result<_>>()?;
    for i in (0..n - 1).rev() {
        let mut row = Vec::with_capacity(problem.stages[i].len());
        for k in 0..problem.stages[i].len() {
            let mut best = f64::INFINITY;
            for (q, next) in value[i + 1].iter().enumerate() {
                let c = cost(PoseId::new(i + 1, k), PoseId::new(i + 2, q))? + next;
                best = best.min(c);
            }
            row.push(best);
        }
        value[i] = row;
    }

    let mut chosen = Vec::with_capacity(n);
    let mut prev = PoseId::START;
    let mut total = f64::NAN;
    for i in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in value[i].iter().enumerate() {
            let c = cost(prev, PoseId::new(i + 1, k))? + v;
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((k, c));
            }
        }
        let (k, c) = best.expect("stages are nonempty");
        if i == 0 {
            total = c;
        }
        chosen.push(k);
        prev = PoseId::new(i + 1, k);
    }
    Ok((chosen, total))
}

fn chain_costs(
    problem: &SelectionProblem,
    chosen: &[usize],
    mut cost: impl FnMut(PoseId, PoseId) -> Result<f64>,
) -> Result<(Vec<f64>, f64)> {
    let segs: Vec<f64> = problem
        .chain(chosen)
        .into_iter()
        .map(|(a, b)| cost(a, b))
        .collect::<Result<_>>()?;
    let total = segs.iter().fold(0.0, |acc, c| acc + c);
    Ok((segs, total))
}

/// Exact selection over a complete table of directed pair costs.
pub fn dp_select(problem: &SelectionProblem, costs: &BTreeMap<(PoseId, PoseId), f64>) -> Result<Selection> {
    let lookup = |a: PoseId, b: PoseId| {
        costs
            .get(&(a, b))
            .copied()
            .ok_or_else(|| Error::MissingPair(format!("{} -> {}", problem.describe(a), problem.describe(b))))
    };
    let (chosen, value) = dp_core(problem, lookup)?;
    let (segment_costs, total_cost) = chain_costs(problem, &chosen, lookup)?;
    Ok(Selection {
        trace: vec![IterationTrace {
            chosen: chosen.clone(),
            value,
            paths_planned: 0,
        }],
        chosen,
        total_cost,
        segment_costs,
        paths_planned: 0,
        iterations: 1,
    })
}

fn unreachable(problem: &SelectionProblem, a: PoseId, b: PoseId) -> Error {
    Error::UnreachableStage {
        stage: a.stage,
        from: problem.describe(a),
        to: problem.describe(b),
    }
}

/// Plans every consecutive-stage pair missing from `cache`, then runs [`dp_select`].
///
/// Unreachable pairs enter the table as `+inf`; an infinite optimum is an error.
pub fn dp_select_planned<P: SegmentPlanner + ?Sized>(
    problem: &SelectionProblem,
    planner: &mut P,
    cache: &mut EdgeCache,
) -> Result<Selection> {
    let mut planned = 0;
    let mut table = BTreeMap::new();
    for (a, b) in problem.all_pairs() {
        if cache.get(a, b).is_none() {
            planned += 1;
            match planner.plan(a, b, problem)? {
                Some(seg) => cache.insert(a, b, seg),
                None => {
                    table.insert((a, b), f64::INFINITY);
                    continue;
                }
            }
        }
        table.insert((a, b), cache.get(a, b).expect("just planned").cost);
    }
    let mut sel = dp_select(problem, &table)?;
    if !sel.total_cost.is_finite() {
        let (a, b) = problem
            .chain(&sel.chosen)
            .into_iter()
            .find(|&(a, b)| !table[&(a, b)].is_finite())
            .expect("an infinite chain has an infinite segment");
        return Err(unreachable(problem, a, b));
    }
    sel.paths_planned = planned;
    sel.trace[0].paths_planned = planned;
    Ok(sel)
}

/// Plans the chain segments missing from the cache; returns how many were planned.
fn plan_chain<P: SegmentPlanner + ?Sized>(
    problem: &SelectionProblem,
    chosen: &[usize],
    planner: &mut P,
    cache: &mut EdgeCache,
) -> Result<usize> {
    let mut planned = 0;
    for (a, b) in problem.chain(chosen) {
        if cache.get(a, b).is_some() {
            continue;
        }
        planned += 1;
        match planner.plan(a, b, problem)? {
            Some(seg) => cache.insert(a, b, seg),
            None => return Err(unreachable(problem, a, b)),
        }
    }
    Ok(planned)
}

fn planned_chain(problem: &SelectionProblem, chosen: &[usize], cache: &EdgeCache) -> (Vec<f64>, f64) {
    chain_costs(problem, chosen, |a, b| Ok(cache.get(a, b).expect("chain is planned").cost))
        .expect("lookup is infallible")
}

/// Iterative DP with lower-bound substitution.
///
/// Terminates: an iteration whose chain is already fully planned leaves every
/// cost unchanged, so the next recursion returns the same chain.
pub fn idp_select<P: SegmentPlanner + ?Sized>(
    problem: &SelectionProblem,
    planner: &mut P,
    cache: &mut EdgeCache,
) -> Result<Selection> {
    let mut trace = Vec::new();
    let mut paths_planned = 0;
    let mut previous: Option<Vec<usize>> = None;
    loop {
        let (chosen, value) = {
            let p: &P = planner;
            dp_core(problem, |a, b| Ok(lower_bound_or_cost(a, b, cache, p, problem)))?
        };
        if previous.as_ref() == Some(&chosen) {
            trace.push(IterationTrace {
                chosen,
                value,
                paths_planned: 0,
            });
            break;
        }
        let planned = plan_chain(problem, &chosen, planner, cache)?;
        paths_planned += planned;
        trace.push(IterationTrace {
            chosen: chosen.clone(),
            value,
            paths_planned: planned,
        });
        previous = Some(chosen);
    }
    let chosen = previous.unwrap_or_default();
    let (segment_costs, total_cost) = planned_chain(problem, &chosen, cache);
    Ok(Selection {
        chosen,
        total_cost,
        segment_costs,
        paths_planned,
        iterations: trace.len(),
        trace,
    })
}

/// Coordinate descent from an explicit initial choice.
///
/// Plans the initial chain, then sweeps the stages in order, re-choosing each
/// PoI from its two neighbors only (the incumbent wins ties), and plans the
/// new chain after every sweep until a sweep changes nothing.
pub fn irba_from<P: SegmentPlanner + ?Sized>(
    problem: &SelectionProblem,
    planner: &mut P,
    cache: &mut EdgeCache,
    init: Vec<usize>,
) -> Result<Selection> {
    let n = problem.n();
    if init.len() != n {
        return Err(Error::Config(format!("initial choice has {} entries for {n} stages", init.len())));
    }
    let mut chosen = init;
    let mut paths_planned = plan_chain(problem, &chosen, planner, cache)?;
    let mut trace = vec![IterationTrace {
        chosen: chosen.clone(),
        value: planned_chain(problem, &chosen, cache).1,
        paths_planned,
    }];
    loop {
        let mut changed = false;
        for i in 0..n {
            let prev = if i == 0 {
                PoseId::START
            } else {
                PoseId::new(i, chosen[i - 1])
            };
            let next = if i + 1 == n {
                PoseId::START
            } else {
                PoseId::new(i + 2, chosen[i + 1])
            };
            let local = |k: usize| {
                let p = PoseId::new(i + 1, k);
                lower_bound_or_cost(prev, p, cache, &*planner, problem)
                    + lower_bound_or_cost(p, next, cache, &*planner, problem)
            };
            let mut best = chosen[i];
            let mut best_cost = local(best);
            for k in 0..problem.stages[i].len() {
                let c = local(k);
                if c < best_cost {
                    best = k;
                    best_cost = c;
                }
            }
            if best != chosen[i] {
                chosen[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let planned = plan_chain(problem, &chosen, planner, cache)?;
        paths_planned += planned;
        trace.push(IterationTrace {
            chosen: chosen.clone(),
            value: planned_chain(problem, &chosen, cache).1,
            paths_planned: planned,
        });
    }
    let (segment_costs, total_cost) = planned_chain(problem, &chosen, cache);
    Ok(Selection {
        chosen,
        total_cost,
        segment_costs,
        paths_planned,
        iterations: trace.len(),
        trace,
    })
}

/// IRBA baseline, initialised with the straight-line DP choice.
pub fn irba_select<P: SegmentPlanner + ?Sized>(
    problem: &SelectionProblem,
    planner: &mut P,
    cache: &mut EdgeCache,
) -> Result<Selection> {
    let (init, _) = {
        let p: &P = planner;
        dp_core(problem, |a, b| Ok(lower_bound_or_cost(a, b, cache, p, problem)))?
    };
    irba_from(problem, planner, cache, init)
}
