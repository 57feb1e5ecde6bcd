//! ToI visiting order: pairwise cost matrix and a closed TSP tour from the start.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SE2State;
use crate::mission::Mission;
use crate::roadmap::{PlanResult, QueryConfig, Roadmap};
use crate::validity::StateChecker;

/// Largest instance handed to the exact solver.
pub const EXACT_TSP_LIMIT: usize = 15;

/// `(n+1) x (n+1)` travel costs; index 0 is the start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    entries: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let size = entries.len();
        if size == 0 {
            return Err(Error::Config("cost matrix needs at least the start row".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Config(format!("cost matrix row {i} has length {}", row.len())));
            }
            if row[i] != 0.0 {
                return Err(Error::Config(format!("cost matrix diagonal entry {i} is not zero")));
            }
            if row.iter().any(|c| c.is_nan() || *c < 0.0) {
                return Err(Error::Config(format!("cost matrix row {i} has a negative or NaN entry")));
            }
        }
        Ok(Self { entries })
    }

    /// Number of ToIs (the start excluded).
    pub fn n(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(|c| c * factor).collect())
                .collect(),
        }
    }

    fn check_connected(&self) -> Result<()> {
        let size = self.entries.len();
        for i in 0..size {
            let out = (0..size).any(|j| j != i && self.entries[i][j].is_finite());
            let inc = (0..size).any(|j| j != i && self.entries[j][i].is_finite());
            if size > 1 && !(out && inc) {
                return Err(Error::Disconnected(format!("matrix index {i} has no finite connection")));
            }
        }
        Ok(())
    }
}

/// Visiting order of ToI indices `1..=n`; the start (0) is implicit at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Cost of the closed tour `0 -> order -> 0`, summed left to right.
pub fn tour_cost(m: &CostMatrix, order: &[usize]) -> f64 {
    let mut cost = 0.0;
    let mut prev = 0;
    for &i in order {
        cost += m.get(prev, i);
        prev = i;
    }
    cost + m.get(prev, 0)
}

fn finish(m: &CostMatrix, order: Vec<usize>) -> Result<Tour> {
    let cost = tour_cost(m, &order);
    if !cost.is_finite() {
        return Err(Error::Disconnected("every tour crosses an unreachable pair".into()));
    }
    Ok(Tour { order, cost })
}

/// Held-Karp over subsets of ToIs.
pub fn solve_tsp_exact(m: &CostMatrix) -> Result<Tour> {
    let n = m.n();
    if n > EXACT_TSP_LIMIT {
        return Err(Error::ExactSolverLimit {
            n,
            limit: EXACT_TSP_LIMIT,
        });
    }
    m.check_connected()?;
    if n == 0 {
        return finish(m, vec![]);
    }

    // best[mask][j]: cheapest path from 0 through `mask` ending at ToI j+1
    let full = 1usize << n;
    let mut best = vec![f64::INFINITY; full * n];
    let mut parent = vec![usize::MAX; full * n];
    for j in 0..n {
        best[(1 << j) * n + j] = m.get(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = best[mask * n + j];
            if here.is_infinite() {
                continue;
            }
            for k in 0..n {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = here + m.get(j + 1, k + 1);
                if cand < best[next * n + k] {
                    best[next * n + k] = cand;
                    parent[next * n + k] = j;
                }
            }
        }
    }

    let last_mask = full - 1;
    let mut end = None;
    let mut end_cost = f64::INFINITY;
    for j in 0..n {
        let cand = best[last_mask * n + j] + m.get(j + 1, 0);
        if cand < end_cost {
            end_cost = cand;
            end = Some(j);
        }
    }
    let Some(mut j) = end else {
        return Err(Error::Disconnected("every tour crosses an unreachable pair".into()));
    };
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    loop {
        order.push(j + 1);
        let p = parent[mask * n + j];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p;
    }
    order.reverse();
    // a tour and its reverse often tie; report the lexicographically smaller
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    if reversed < order && tour_cost(m, &reversed) == tour_cost(m, &order) {
        order = reversed;
    }
    finish(m, order)
}

/// Nearest neighbor from the start, then 2-opt until no move improves.
pub fn solve_tsp_heuristic(m: &CostMatrix) -> Result<Tour> {
    m.check_connected()?;
    let n = m.n();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n + 1];
    visited[0] = true;
    let mut cur = 0;
    for _ in 0..n {
        let mut next = None;
        let mut next_cost = f64::INFINITY;
        for j in 1..=n {
            if !visited[j] && (next.is_none() || m.get(cur, j) < next_cost) {
                next = Some(j);
                next_cost = m.get(cur, j);
            }
        }
        let j = next.expect("an unvisited ToI remains");
        visited[j] = true;
        order.push(j);
        cur = j;
    }

    let mut cost = tour_cost(m, &order);
    loop {
        let mut improved = false;
        for i in 0..n {
            for k in i + 1..n {
                order[i..=k].reverse();
                let cand = tour_cost(m, &order);
                if cand < cost {
                    cost = cand;
                    improved = true;
                } else {
                    order[i..=k].reverse();
                }
            }
        }
        if !improved {
            break;
        }
    }
    finish(m, order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TspMode {
    Exact,
    Heuristic,
    /// Exact up to [`EXACT_TSP_LIMIT`] ToIs, heuristic beyond.
    #[default]
    Auto,
}

pub fn solve_tsp(m: &CostMatrix, mode: TspMode) -> Result<Tour> {
    match mode {
        TspMode::Exact => solve_tsp_exact(m),
        TspMode::Heuristic => solve_tsp_heuristic(m),
        TspMode::Auto if m.n() <= EXACT_TSP_LIMIT => solve_tsp_exact(m),
        TspMode::Auto => solve_tsp_heuristic(m),
    }
}

/// PoI of ToI `toi` nearest to the ToI position (lowest index on ties).
pub fn representative_pose(mission: &Mission, toi: usize) -> Result<SE2State> {
    let t = &mission.tois[toi];
    let mut best: Option<(f64, &SE2State)> = None;
    for poi in &t.pois {
        let d = poi.distance_xy(&t.pose);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, poi));
        }
    }
    best.map(|(_, p)| *p)
        .ok_or_else(|| Error::NoPoi(t.id.clone()))
}

/// Matrix plus the plan behind each unordered pair `(i, j)`, `i < j`.
#[derive(Debug, Clone)]
pub struct CostMatrixBuild {
    pub matrix: CostMatrix,
    pub plans: BTreeMap<(usize, usize), PlanResult>,
}

/// Plans between every pair of representatives on the shared roadmap.
pub fn build_cost_matrix(
    mission: &Mission,
    roadmap: &mut Roadmap,
    cfg: &QueryConfig,
    checker: &StateChecker<'_>,
) -> Result<CostMatrixBuild> {
    let n = mission.tois.len();
    let mut reps = Vec::with_capacity(n + 1);
    reps.push(mission.start);
    for i in 0..n {
        reps.push(representative_pose(mission, i)?);
    }
    let label = |i: usize| {
        if i == 0 {
            "start".to_string()
        } else {
            format!("ToI `{}`", mission.tois[i - 1].id)
        }
    };

    let mut entries = vec![vec![0.0; n + 1]; n + 1];
    let mut plans = BTreeMap::new();
    for i in 0..=n {
        for j in i + 1..=n {
            let result = roadmap
                .plan_path(&reps[i], &reps[j], cfg, checker)
                .map_err(|e| Error::Pair {
                    pair: format!("{} -> {}", label(i), label(j)),
                    source: Box::new(e),
                })?;
            entries[i][j] = result.cost;
            entries[j][i] = result.cost;
            plans.insert((i, j), result);
        }
    }
    Ok(CostMatrixBuild {
        matrix: CostMatrix::new(entries)?,
        plans,
    })
}
