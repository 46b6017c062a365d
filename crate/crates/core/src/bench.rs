//! Capacity-error metrics, the even-distribution baseline and the
//! benchmark runner.
//!
//! Supply model: a beam receives a share of the total requested rate
//! proportional to its accumulated illumination weight. Requested rates are
//! the unquantized per-beam demands, so integer rounding of demand shows up
//! as error; the pre-scaling error is taken against the integer demands the
//! solver was given.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dp2::dp2_full;
use crate::error::ModelError;
use crate::exact::{solve_exact, SolveOptions};
use crate::io::CycleFile;
use crate::model::{accumulated_weights, ConstraintSet, CycleConfig, Instance, Plan};
use crate::schedule::scale_to_cycle;
use crate::testbed::{build_scene, GainModel, Quantizer, TestbedSpec};

pub const CSV_HEADER: &str =
    "trial,n_beams,seed,solver,pattern_count,b_ratio,capacity_error,runtime_ms,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Dp2,
    Exact,
    Even,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Dp2 => "dp2",
            Solver::Exact => "exact",
            Solver::Even => "even",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub trial: usize,
    pub n_beams: usize,
    pub seed: u64,
    pub solver: Solver,
    pub pattern_count: usize,
    /// Pattern count before identical beam sets were merged.
    pub unmerged_pattern_count: usize,
    pub b_ratio: f64,
    /// Error of the plan after scaling to the cycle.
    pub capacity_error: f64,
    /// Error of the plan with its original weights against the integer
    /// demands it was built for.
    pub pre_scaling_error: f64,
    pub dropped_patterns: usize,
    pub runtime_ms: f64,
    pub status: String,
    pub supplied: Vec<f64>,
    pub requested: Vec<f64>,
}

/// `sum |supplied - requested| / sum requested`.
pub fn capacity_error(supplied: &[f64], requested: &[f64]) -> Result<f64, ModelError> {
    if supplied.len() != requested.len() {
        return Err(ModelError::Field {
            field: "supplied",
            message: format!("{} entries for {} beams", supplied.len(), requested.len()),
        });
    }
    let total: f64 = requested.iter().sum();
    if total <= 0.0 {
        return Err(ModelError::NoPositiveDemand);
    }
    let diff: f64 = supplied
        .iter()
        .zip(requested)
        .map(|(s, r)| (s - r).abs())
        .sum();
    Ok(diff / total)
}

pub fn supplied_from_plan(plan: &Plan, requested: &[f64]) -> Result<Vec<f64>, ModelError> {
    if plan.is_empty() {
        return Err(ModelError::EmptyPlan);
    }
    let acc = accumulated_weights(plan, requested.len())?;
    let acc_total: u64 = acc.iter().sum();
    if acc_total == 0 {
        return Err(ModelError::EmptyPlan);
    }
    let total: f64 = requested.iter().sum();
    // multiply first so integral shares stay exact
    Ok(acc
        .iter()
        .map(|&a| a as f64 * total / acc_total as f64)
        .collect())
}

pub fn even_baseline(requested: &[f64]) -> Result<(Vec<f64>, f64), ModelError> {
    if requested.is_empty() {
        return Err(ModelError::NoPositiveDemand);
    }
    let share = requested.iter().sum::<f64>() / requested.len() as f64;
    let supplied = vec![share; requested.len()];
    let err = capacity_error(&supplied, requested)?;
    Ok((supplied, err))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// 1-based rows of the trial table.
    pub trials: Vec<usize>,
    pub beam_counts: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<Solver>,
    #[serde(default)]
    pub interference: bool,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default = "default_time_limit")]
    pub exact_time_limit_ms: u64,
    #[serde(default = "default_scale")]
    pub quantizer_scale: f64,
    #[serde(default = "default_clusters")]
    pub cluster_count: usize,
    #[serde(default = "default_sigma")]
    pub cluster_sigma: f64,
    #[serde(default)]
    pub gain_model: GainModel,
    #[serde(default)]
    pub cycle: CycleFile,
}

fn default_seeds() -> Vec<u64> {
    (1..=5).collect()
}

fn default_solvers() -> Vec<Solver> {
    vec![Solver::Dp2, Solver::Even]
}

fn default_time_limit() -> u64 {
    10_000
}

fn default_scale() -> f64 {
    1.0
}

fn default_clusters() -> usize {
    5
}

fn default_sigma() -> f64 {
    5.0
}

impl BenchConfig {
    /// All eight trials at 16, 49 and 132 beams, seeds 1 to 5, no
    /// interference or cardinality limits.
    pub fn standard() -> Self {
        Self {
            trials: (1..=8).collect(),
            beam_counts: vec![16, 49, 132],
            seeds: default_seeds(),
            solvers: default_solvers(),
            interference: false,
            n_max: None,
            exact_time_limit_ms: default_time_limit(),
            quantizer_scale: default_scale(),
            cluster_count: default_clusters(),
            cluster_sigma: default_sigma(),
            gain_model: GainModel::Flat,
            cycle: CycleFile::default(),
        }
    }

    pub fn constraints(&self) -> ConstraintSet {
        ConstraintSet {
            n_max: self.n_max,
            interference: self.interference,
        }
    }

    fn spec(&self, trial: usize, beams: usize, seed: u64) -> Result<TestbedSpec, ModelError> {
        let spec = TestbedSpec::for_trial(trial, beams, seed).ok_or_else(|| ModelError::Field {
            field: "trials",
            message: format!("no trial {trial}, expected 1..=8"),
        })?;
        Ok(TestbedSpec {
            cluster_count: self.cluster_count,
            cluster_sigma: self.cluster_sigma,
            gain_model: self.gain_model,
            ..spec
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub trial: usize,
    pub n_beams: usize,
    pub solver: Solver,
    pub runs: usize,
    pub mean_pattern_count: f64,
    pub mean_b_ratio: f64,
    pub mean_capacity_error: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    /// `100 * (1 - mean dp2 error / mean even error)`, when both ran.
    pub error_reduction_percent: Option<f64>,
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub records: Vec<MetricsRecord>,
    pub summary: Summary,
}

struct Cell<'a> {
    trial: usize,
    seed: u64,
    inst: &'a Instance,
    requested: &'a [f64],
    /// Integer demands as rates.
    targets: &'a [f64],
}

impl Cell<'_> {
    fn record(
        &self,
        solver: Solver,
        plan: &Plan,
        unmerged: usize,
        runtime_ms: f64,
        status: &str,
    ) -> Result<MetricsRecord, ModelError> {
        let pre = capacity_error(&supplied_from_plan(plan, self.targets)?, self.targets)?;
        let scheduled = scale_to_cycle(plan, &self.inst.cycle)?;
        let supplied = supplied_from_plan(&scheduled.as_plan(), self.requested)?;
        let n = self.inst.n_beams;
        Ok(MetricsRecord {
            trial: self.trial,
            n_beams: n,
            seed: self.seed,
            solver,
            pattern_count: plan.len(),
            unmerged_pattern_count: unmerged,
            b_ratio: plan.len() as f64 / n as f64,
            capacity_error: capacity_error(&supplied, self.requested)?,
            pre_scaling_error: pre,
            dropped_patterns: scheduled.dropped_patterns,
            runtime_ms,
            status: status.to_string(),
            supplied,
            requested: self.requested.to_vec(),
        })
    }

    fn even(&self) -> Result<MetricsRecord, ModelError> {
        let (supplied, err) = even_baseline(self.requested)?;
        let n = self.inst.n_beams;
        Ok(MetricsRecord {
            trial: self.trial,
            n_beams: n,
            seed: self.seed,
            solver: Solver::Even,
            // one equal-length slot per beam
            pattern_count: n,
            unmerged_pattern_count: n,
            b_ratio: 1.0,
            capacity_error: err,
            pre_scaling_error: even_baseline(self.targets)?.1,
            dropped_patterns: 0,
            runtime_ms: 0.0,
            status: "ok".into(),
            supplied,
            requested: self.requested.to_vec(),
        })
    }
}

fn failed(
    trial: usize,
    n_beams: usize,
    seed: u64,
    solver: Solver,
    err: &ModelError,
) -> MetricsRecord {
    MetricsRecord {
        trial,
        n_beams,
        seed,
        solver,
        pattern_count: 0,
        unmerged_pattern_count: 0,
        b_ratio: 0.0,
        capacity_error: 0.0,
        pre_scaling_error: 0.0,
        dropped_patterns: 0,
        runtime_ms: 0.0,
        status: format!("error: {err}"),
        supplied: Vec::new(),
        requested: Vec::new(),
    }
}

fn run_solver(
    cell: &Cell,
    solver: Solver,
    config: &BenchConfig,
) -> Result<MetricsRecord, ModelError> {
    let cons = config.constraints();
    match solver {
        Solver::Even => cell.even(),
        Solver::Dp2 => {
            let start = Instant::now();
            let (plan, report) = dp2_full(cell.inst, &cons)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            cell.record(solver, &plan, report.split_pattern_count, ms, "ok")
        }
        Solver::Exact => {
            let start = Instant::now();
            let (warm, _) = dp2_full(cell.inst, &cons)?;
            let opts = SolveOptions {
                warm_start: Some(warm),
                time_limit: Some(Duration::from_millis(config.exact_time_limit_ms)),
            };
            let result = solve_exact(cell.inst, &cons, &opts)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let status = serde_json::to_value(result.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let plan = result.plan.expect("warm start guarantees an incumbent");
            cell.record(solver, &plan, plan.len(), ms, &status)
        }
    }
}

/// Runs every trial x beam count x seed x solver cell in that order.
/// Failing cells produce a record whose status starts with `error:`.
pub fn run_benchmark(config: &BenchConfig) -> BenchOutput {
    let cycle = CycleConfig::try_from(config.cycle.clone());
    let q = Quantizer {
        scale: config.quantizer_scale,
    };
    let mut records = Vec::new();
    for &trial in &config.trials {
        for &beams in &config.beam_counts {
            for &seed in &config.seeds {
                let built = cycle.clone().and_then(|c| {
                    let scene = build_scene(&config.spec(trial, beams, seed)?)?;
                    let inst = scene.to_instance(c, q)?;
                    Ok((scene, inst))
                });
                let (scene, inst) = match built {
                    Ok(built) => built,
                    Err(e) => {
                        records.extend(
                            config
                                .solvers
                                .iter()
                                .map(|&s| failed(trial, beams, seed, s, &e)),
                        );
                        continue;
                    }
                };
                let requested: Vec<f64> =
                    scene.per_beam_demand.iter().map(|&d| d * q.scale).collect();
                let targets: Vec<f64> = inst.demands.iter().map(|&d| d as f64).collect();
                let cell = Cell {
                    trial,
                    seed,
                    inst: &inst,
                    requested: &requested,
                    targets: &targets,
                };
                for &solver in &config.solvers {
                    records.push(
                        run_solver(&cell, solver, config)
                            .unwrap_or_else(|e| failed(trial, inst.n_beams, seed, solver, &e)),
                    );
                }
            }
        }
    }
    let summary = summarize(&records);
    BenchOutput { records, summary }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize(records: &[MetricsRecord]) -> Summary {
    let ok: Vec<&MetricsRecord> = records
        .iter()
        .filter(|r| !r.status.starts_with("error"))
        .collect();
    let mut groups: BTreeMap<(usize, usize, Solver), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in &ok {
        groups
            .entry((r.trial, r.n_beams, r.solver))
            .or_default()
            .push(r);
    }
    let groups = groups
        .into_iter()
        .map(|((trial, n_beams, solver), rs)| GroupSummary {
            trial,
            n_beams,
            solver,
            runs: rs.len(),
            mean_pattern_count: mean(rs.iter().map(|r| r.pattern_count as f64)),
            mean_b_ratio: mean(rs.iter().map(|r| r.b_ratio)),
            mean_capacity_error: mean(rs.iter().map(|r| r.capacity_error)),
            mean_runtime_ms: mean(rs.iter().map(|r| r.runtime_ms)),
        })
        .collect();
    let errors = |s: Solver| -> Vec<f64> {
        ok.iter()
            .filter(|r| r.solver == s)
            .map(|r| r.capacity_error)
            .collect()
    };
    let (dp2, even) = (errors(Solver::Dp2), errors(Solver::Even));
    let error_reduction_percent = (!dp2.is_empty() && !even.is_empty())
        .then(|| 100.0 * (1.0 - mean(dp2.into_iter()) / mean(even.into_iter())));
    Summary {
        groups,
        error_reduction_percent,
        failed_cells: records.len() - ok.len(),
    }
}

/// CSV and JSON renderings; identical inputs give identical bytes.
pub fn emit_results(
    output: &BenchOutput,
    config: &BenchConfig,
) -> Result<(String, String), ModelError> {
    let finite = |r: &MetricsRecord| {
        [
            r.b_ratio,
            r.capacity_error,
            r.pre_scaling_error,
            r.runtime_ms,
        ]
        .iter()
        .chain(&r.supplied)
        .chain(&r.requested)
        .all(|v| v.is_finite())
    };
    if let Some(r) = output.records.iter().find(|r| !finite(r)) {
        return Err(ModelError::Field {
            field: "records",
            message: format!("non-finite metric in trial {} seed {}", r.trial, r.seed),
        });
    }

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &output.records {
        let status = if r.status.contains([',', '"', '\n']) {
            format!("\"{}\"", r.status.replace('"', "\"\""))
        } else {
            r.status.clone()
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.trial,
            r.n_beams,
            r.seed,
            r.solver.name(),
            r.pattern_count,
            r.b_ratio,
            r.capacity_error,
            r.runtime_ms,
            status
        ));
    }

    let doc = serde_json::json!({
        "config": config,
        "supply_model": "accumulated-weight share of total requested rate, after scaling to the cycle",
        "records": output.records,
        "summary": output.summary,
    });
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    Ok((csv, json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pattern;

    const FIVE: [f64; 5] = [109.0, 120.0, 91.0, 87.0, 135.0];

    #[test]
    fn error_identities() {
        assert_eq!(capacity_error(&FIVE, &FIVE).unwrap(), 0.0);
        assert_eq!(capacity_error(&[0.0; 5], &FIVE).unwrap(), 1.0);
        assert!(capacity_error(&[0.0; 2], &[0.0; 2]).is_err());
        assert!(capacity_error(&[0.0; 2], &FIVE).is_err());
    }

    #[test]
    fn even_on_five_beams() {
        let (supplied, err) = even_baseline(&FIVE).unwrap();
        assert!(supplied.iter().all(|&s| (s - 108.4).abs() < 1e-12));
        // |0.6| + 11.6 + 17.4 + 21.4 + 26.6
        assert!((err - 77.6 / 542.0).abs() < 1e-12);
        assert!((err - 0.14317).abs() < 1e-5);
    }

    #[test]
    fn even_on_point_mass() {
        let mut requested = vec![0.0; 10];
        requested[3] = 50.0;
        assert!((even_baseline(&requested).unwrap().1 - 1.8).abs() < 1e-12);
        assert_eq!(even_baseline(&[4.0, 4.0]).unwrap().1, 0.0);
    }

    #[test]
    fn all_beam_pattern_matches_even() {
        let plan = Plan::new(vec![Pattern::new(0..5, 3).unwrap()], CycleConfig::default());
        let supplied = supplied_from_plan(&plan, &FIVE).unwrap();
        assert_eq!(supplied, even_baseline(&FIVE).unwrap().0);
        assert!(supplied_from_plan(&Plan::new(vec![], CycleConfig::default()), &FIVE).is_err());
    }

    #[test]
    fn empty_config_yields_no_records() {
        let config = BenchConfig {
            trials: vec![],
            ..BenchConfig::standard()
        };
        let out = run_benchmark(&config);
        assert!(out.records.is_empty());
        assert_eq!(out.summary.error_reduction_percent, None);
    }

    #[test]
    fn unknown_trial_is_recorded_not_fatal() {
        let config = BenchConfig {
            trials: vec![9, 1],
            beam_counts: vec![16],
            seeds: vec![1],
            ..BenchConfig::standard()
        };
        let out = run_benchmark(&config);
        assert_eq!(out.records.len(), 4);
        assert!(out.records[0].status.starts_with("error"));
        assert_eq!(out.records[2].status, "ok");
        assert_eq!(out.summary.failed_cells, 2);
    }

    #[test]
    fn emitted_csv_shape() {
        let config = BenchConfig {
            trials: vec![1],
            beam_counts: vec![16],
            seeds: vec![1],
            solvers: vec![Solver::Dp2],
            ..BenchConfig::standard()
        };
        let out = run_benchmark(&config);
        let (csv, json) = emit_results(&out, &config).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1,16,1,dp2,"));
        assert_eq!(emit_results(&out, &config).unwrap(), (csv, json));
    }
}
