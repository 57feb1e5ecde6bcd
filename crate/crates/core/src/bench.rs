//! Repeated mission runs per method and checker configuration.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridmap::MapBundle;
use crate::mission::{run_mission, Method, Mission, MissionConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    /// `(t_low, t_high)` pairs; each is run for every method.
    pub thresholds: Vec<(f64, f64)>,
    pub trials: usize,
    pub seed: u64,
    pub base: MissionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub t_low: f64,
    pub t_high: f64,
    pub seed: u64,
    pub ok: bool,
    pub error: Option<String>,
    pub wall_time: f64,
    pub total_cost: Option<f64>,
    pub paths_planned: usize,
    pub cost_matrix_paths: usize,
    pub tsdf_queries: u64,
    pub traversability_queries: u64,
    pub states_sent_to_volumetric: u64,
    pub selection_time: f64,
    pub cost_matrix_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub t_low: f64,
    pub t_high: f64,
    pub trials: usize,
    pub failed: usize,
    pub wall_time_mean: f64,
    pub wall_time_std: f64,
    pub total_cost_mean: f64,
    pub total_cost_std: f64,
    pub paths_planned_mean: f64,
    pub tsdf_queries_mean: f64,
    pub traversability_queries_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub trials: Vec<TrialRecord>,
    pub aggregate: Vec<Aggregate>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every (thresholds, method) combination `trials` times with seeds
/// `seed..seed + trials`. Failed trials are recorded and skipped in the means.
pub fn benchmark(map: &MapBundle, mission: &Mission, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.methods.is_empty() || cfg.trials == 0 || cfg.thresholds.is_empty() {
        return Err(Error::Config("benchmark needs a method, a checker and at least one trial".into()));
    }
    let mut trials = Vec::new();
    let mut aggregate = Vec::new();
    for &(t_low, t_high) in &cfg.thresholds {
        let checker = cfg.base.checker.with_thresholds(t_low, t_high)?;
        for &method in &cfg.methods {
            let mut records = Vec::with_capacity(cfg.trials);
            for t in 0..cfg.trials as u64 {
                let seed = cfg.seed + t;
                let mut run_cfg = cfg.base.clone().with_seed(seed).with_method(method);
                run_cfg.checker = checker;
                let began = Instant::now();
                let result = run_mission(map, mission, &run_cfg);
                let wall_time = began.elapsed().as_secs_f64();
                let mut rec = TrialRecord {
                    method,
                    t_low,
                    t_high,
                    seed,
                    ok: result.is_ok(),
                    error: None,
                    wall_time,
                    total_cost: None,
                    paths_planned: 0,
                    cost_matrix_paths: 0,
                    tsdf_queries: 0,
                    traversability_queries: 0,
                    states_sent_to_volumetric: 0,
                    selection_time: 0.0,
                    cost_matrix_time: 0.0,
                };
                match result {
                    Ok(plan) => {
                        rec.total_cost = Some(plan.total_cost);
                        rec.paths_planned = plan.stats.paths_planned;
                        rec.cost_matrix_paths = plan.stats.cost_matrix_paths;
                        rec.tsdf_queries = plan.stats.tsdf_queries;
                        rec.traversability_queries = plan.stats.traversability_queries;
                        rec.states_sent_to_volumetric = plan.stats.check.states_sent_to_volumetric;
                        rec.selection_time = plan.stats.wall_times.selection;
                        rec.cost_matrix_time = plan.stats.wall_times.cost_matrix;
                    }
                    Err(e) => rec.error = Some(e.to_string()),
                }
                records.push(rec);
            }
            let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.ok).collect();
            let col = |f: &dyn Fn(&TrialRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (wall_time_mean, wall_time_std) = mean_std(&col(&|r| r.wall_time));
            let (total_cost_mean, total_cost_std) = mean_std(&col(&|r| r.total_cost.unwrap_or(f64::NAN)));
            aggregate.push(Aggregate {
                method,
                t_low,
                t_high,
                trials: records.len(),
                failed: records.len() - ok.len(),
                wall_time_mean,
                wall_time_std,
                total_cost_mean,
                total_cost_std,
                paths_planned_mean: mean_std(&col(&|r| r.paths_planned as f64)).0,
                tsdf_queries_mean: mean_std(&col(&|r| r.tsdf_queries as f64)).0,
                traversability_queries_mean: mean_std(&col(&|r| r.traversability_queries as f64)).0,
            });
            trials.extend(records);
        }
    }
    Ok(BenchReport { trials, aggregate })
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One aligned row per aggregate.
    pub fn table(&self) -> String {
        let header = [
            "method", "t_low", "t_high", "ok", "time[s]", "+-", "cost", "+-", "paths", "tsdf", "trav",
        ];
        let rows: Vec<Vec<String>> = self
            .aggregate
            .iter()
            .map(|a| {
                vec![
                    a.method.to_string(),
                    format!("{:.2}", a.t_low),
                    format!("{:.2}", a.t_high),
                    format!("{}/{}", a.trials - a.failed, a.trials),
                    format!("{:.3}", a.wall_time_mean),
                    format!("{:.3}", a.wall_time_std),
                    format!("{:.3}", a.total_cost_mean),
                    format!("{:.3}", a.total_cost_std),
                    format!("{:.1}", a.paths_planned_mean),
                    format!("{:.0}", a.tsdf_queries_mean),
                    format!("{:.0}", a.traversability_queries_mean),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
        for row in &rows {
            line(&mut out, row);
        }
        out
    }
}
