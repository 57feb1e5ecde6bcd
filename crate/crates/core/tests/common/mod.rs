//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use multigoal::envgen::Shape;
use multigoal::geometry::{interpolate, SE2State};
use multigoal::mission::{Mission, Plan};
use multigoal::selection::{PoseId, SelectionProblem};
use multigoal::validity::{CheckStats, RobotFootprint, StateChecker};

/// Exhaustive chain enumeration in lexicographic order; the first minimum wins.
/// Chain costs are summed left to right.
pub fn brute_force_chain(
    problem: &SelectionProblem,
    costs: &BTreeMap<(PoseId, PoseId), f64>,
) -> (Vec<usize>, f64) {
    let sizes: Vec<usize> = problem.stages.iter().map(Vec::len).collect();
    let n = sizes.len();
    let mut cur = vec![0; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let mut prev = PoseId::START;
        let mut total = 0.0;
        for (i, &k) in cur.iter().enumerate() {
            let next = PoseId::new(i + 1, k);
            total += costs[&(prev, next)];
            prev = next;
        }
        total += costs[&(prev, PoseId::START)];
        if best.as_ref().map_or(true, |(_, b)| total < *b) {
            best = Some((cur.clone(), total));
        }
        let mut i = n;
        loop {
            if i == 0 {
                return best.unwrap();
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < sizes[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Minimum closed-tour cost from city 0 over all permutations (left-to-right sums).
pub fn brute_force_tour(m: &[Vec<f64>]) -> f64 {
    fn rec(m: &[Vec<f64>], prev: usize, acc: f64, left: &mut Vec<usize>, best: &mut f64) {
        if left.is_empty() {
            *best = best.min(acc + m[prev][0]);
            return;
        }
        for k in 0..left.len() {
            let j = left.remove(k);
            rec(m, j, acc + m[prev][j], left, best);
            left.insert(k, j);
        }
    }
    let mut best = f64::INFINITY;
    rec(m, 0, 0.0, &mut (1..m.len()).collect(), &mut best);
    best
}

/// Dense point test of the footprint rectangle against exact obstacle shapes.
pub fn footprint_clear(s: &SE2State, fp: &RobotFootprint, obstacles: &[Shape]) -> bool {
    let yaw = fp.long_axis_yaw(s.yaw());
    let (c, sn) = (yaw.cos(), yaw.sin());
    let (hl, hw) = (0.5 * fp.length(), 0.5 * fp.width());
    let steps = 24;
    for a in 0..=steps {
        for b in 0..=steps {
            let u = -hl + 2.0 * hl * a as f64 / steps as f64;
            let v = -hw + 2.0 * hw * b as f64 / steps as f64;
            let p = [s.x() + c * u - sn * v, s.y() + sn * u + c * v];
            if obstacles.iter().any(|o| o.contains(p)) {
                return false;
            }
        }
    }
    true
}

/// States along a motion at the given spacing, endpoints included.
pub fn densify(a: &SE2State, b: &SE2State, step: f64) -> Vec<SE2State> {
    let d = a.distance_xy(b).max(multigoal::geometry::angle_diff(a.yaw(), b.yaw()));
    let n = (d / step).ceil().max(1.0) as usize;
    (0..=n).map(|k| interpolate(a, b, k as f64 / n as f64).unwrap()).collect()
}

/// Re-checks the three tour constraints without trusting the planner's own
/// verification: closed at the start, one PoI per ToI on the path, and every
/// motion valid.
pub fn revalidate(plan: &Plan, mission: &Mission, checker: &StateChecker<'_>) -> Result<(), String> {
    let w = plan.waypoints.waypoints();
    if w.first() != Some(&mission.start) || w.last() != Some(&mission.start) {
        return Err("not closed at the start".into());
    }
    if plan.sequence.len() != mission.tois.len() {
        return Err("sequence length differs from the ToI count".into());
    }
    for t in &mission.tois {
        let visits: Vec<usize> = (0..plan.sequence.len()).filter(|&i| plan.sequence[i] == t.id).collect();
        if visits.len() != 1 {
            return Err(format!("ToI {} visited {} times", t.id, visits.len()));
        }
        let chosen = &t.pois[plan.chosen_pois[visits[0]]];
        if !w.contains(chosen) {
            return Err(format!("chosen PoI of ToI {} is not on the path", t.id));
        }
    }
    let mut stats = CheckStats::default();
    for (i, pair) in w.windows(2).enumerate() {
        if !checker.check_motion(&pair[0], &pair[1], &mut stats) {
            return Err(format!("motion {i} invalid"));
        }
    }
    Ok(())
}
