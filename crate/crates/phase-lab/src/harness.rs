//! Experiment orchestration: figure presets, deterministic parallel sweep
//! execution, persistence of instances and raw run data, and CSV/JSON
//! emission.
//!
//! Every point of a sweep derives its randomness from
//! `(experiment seed, point key, instance slot, run index)`, so results are
//! independent of worker count and an interrupted experiment resumes to
//! byte-identical output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::color::{brelaz_backtrack, random_graph, ColoringStatus};
use crate::csp::{count_solutions, Problem, ProblemParams};
use crate::error::{Error, Result};
use crate::generate::{generate_with_predicate, GenMethod, GenSpec, Predicate};
use crate::mus::enumerate_mus;
use crate::seed::{derive_seed, hash_label};
use crate::solve::{run_protocol, Aggregate, RunProtocol, SearchStatus, SolverKind};
use crate::stats;

/// Figure presets. Each fully determines generation method, predicate,
/// solver, and sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
        Preset::Fig8,
        Preset::Fig9,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown preset `{s}` (fig1..fig9)")))
    }
}

/// Experiment configuration; accepted from flags or a JSON file with the
/// same schema.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Sample-count multiplier relative to the full published protocol. The desk
    /// default is 0.1; `--paper-scale` sets 1.0.
    pub scale: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Overrides the per-task default node cap when set.
    pub node_cap: Option<u64>,
    /// Generation attempt budget per instance slot.
    pub max_attempts: u64,
    /// Include sweeps tagged long-running (the n = 20 curves).
    pub include_long_running: bool,
    /// Worker threads; `PHASE_LAB_WORKERS` overrides, else all cores.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(preset: Preset, out_dir: PathBuf) -> Self {
        ExperimentConfig {
            preset,
            scale: 0.1,
            seed: 0,
            out_dir,
            node_cap: None,
            max_attempts: 200_000,
            include_long_running: false,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 10.0) {
            return Err(Error::invalid("scale must be in (0, 10]"));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be positive"));
        }
        Ok(())
    }

    fn scaled(&self, full: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(4)
    }

    fn scaled_runs(&self, full: u32) -> u32 {
        ((f64::from(full) * self.scale).round() as u32).max(2)
    }
}

/// How many solutions to count per generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CountMode {
    Skip,
    Exact,
    Cap(u64),
}

/// One point of a sweep, fully describing what to generate and measure.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PointPlan {
    pub series: String,
    /// Plotted axis value (m, m/n, or gamma).
    pub axis: f64,
    /// Unique directory key within the experiment.
    pub key: String,
    pub task: PointTask,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointTask {
    Csp {
        params: ProblemParams,
        predicate: Predicate,
        method: GenMethod,
        problems: usize,
        solvers: Vec<SolverKind>,
        runs: u32,
        count_mode: CountMode,
        mus: bool,
        /// Emit per-smallest-MUS-size mean-cost rows instead of sweep rows.
        group_cost_by_mus: bool,
        default_node_cap: Option<u64>,
    },
    Coloring {
        nodes: usize,
        gamma: f64,
        graphs: usize,
        default_node_cap: Option<u64>,
    },
}

/// One statistic of one point: a row of the results table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StatRow {
    pub axis: f64,
    pub n_problems: usize,
    pub statistic: String,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub censored: u64,
    pub attempts: u64,
}

/// Completed point: obtained counts, attempt totals, and statistic rows.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepPoint {
    pub series: String,
    pub axis: f64,
    pub key: String,
    pub target: usize,
    pub obtained: usize,
    pub attempts: u64,
    pub censored: u64,
    pub stats: Vec<StatRow>,
}

/// Per-instance record of a CSP point, as persisted in problems.csv.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CspInstanceRecord {
    pub id: usize,
    pub seed: u64,
    pub obtained: bool,
    pub attempts: u64,
    pub solvable: Option<bool>,
    pub solution_count: Option<u64>,
    pub count_capped: Option<bool>,
    pub mus_count: Option<usize>,
    pub smallest_mus: Option<usize>,
    /// Per solver: (median, mean, min, max, censored runs).
    pub costs: BTreeMap<String, CostSummary>,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CostSummary {
    pub median: f64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
    pub censored: u32,
}

/// Per-graph record of a coloring point.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ColoringInstanceRecord {
    pub id: usize,
    pub seed: u64,
    pub edges: usize,
    pub connected: bool,
    /// "colorable", "uncolorable", or "censored".
    pub status: String,
    pub nodes: u64,
}

/// Raw per-run line of runs.csv.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub problem_id: String,
    pub solver: String,
    pub run_index: u32,
    pub seed: u64,
    pub nodes: u64,
    pub status: String,
}

/// Everything persisted for one point, enough to recompute its statistics.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PointData {
    pub plan: PointPlan,
    pub point_seed: u64,
    /// Root seed of the solving stage; per-problem base seeds derive from
    /// (solve_seed_root, hash(problem_id)).
    pub solve_seed_root: u64,
    /// Wall time of the original computation of this point; exact counting
    /// during generation can dominate, so the cost is kept on record.
    #[serde(default)]
    pub wall_time_seconds: f64,
    pub csp: Vec<CspInstanceRecord>,
    pub coloring: Vec<ColoringInstanceRecord>,
}

const SOLVE_STAGE: u64 = 0x50_4c_41_42; // stage tag for seed derivation

/// Derives the per-problem base seed the same way `phase-lab solve` does,
/// so a standalone solve with the point's solve root reproduces the
/// experiment's runs exactly.
pub fn problem_base_seed(solve_seed_root: u64, problem_id: &str) -> u64 {
    derive_seed(&[solve_seed_root, hash_label(problem_id)])
}

pub fn point_seed(experiment_seed: u64, key: &str) -> u64 {
    derive_seed(&[experiment_seed, hash_label(key)])
}

pub fn instance_id(slot: usize) -> String {
    format!("{slot:05}")
}

fn fmt_axis(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Expands a preset into its point plans.
pub fn expand_preset(config: &ExperimentConfig) -> Vec<PointPlan> {
    let c = config;
    let mut plan: Vec<PointPlan> = Vec::new();

    let csp_point = |series: &str,
                     axis: f64,
                     m: usize,
                     n: usize,
                     predicate: Predicate,
                     method: GenMethod,
                     problems: usize,
                     solvers: Vec<SolverKind>,
                     runs: u32,
                     count_mode: CountMode,
                     mus: bool,
                     group: bool,
                     cap: Option<u64>| {
        PointPlan {
            series: series.to_string(),
            axis,
            key: format!("{series}-m{m:03}{}", if n == 20 { "-n20" } else { "" }),
            task: PointTask::Csp {
                params: ProblemParams { n, d: 3, m },
                predicate,
                method,
                problems,
                solvers,
                runs,
                count_mode,
                mus,
                group_cost_by_mus: group,
                default_node_cap: cap,
            },
        }
    };
    let dynamic = vec![SolverKind::Dynamic];
    let both = vec![SolverKind::Chronological, SolverKind::Dynamic];

    match c.preset {
        Preset::Fig1 => {
            for m in (10..=140).step_by(10) {
                plan.push(csp_point(
                    "gs-any",
                    m as f64,
                    m,
                    10,
                    Predicate::Any,
                    GenMethod::GenerateSelect,
                    c.scaled(1000),
                    dynamic.clone(),
                    c.scaled_runs(100),
                    CountMode::Cap(1),
                    false,
                    false,
                    None,
                ));
            }
        }
        Preset::Fig2 => {
            for m in (10..=140).step_by(10) {
                let target = c.scaled(if m == 140 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-solvable-n10",
                    m as f64 / 10.0,
                    m,
                    10,
                    Predicate::Solvable,
                    GenMethod::GenerateSelect,
                    target,
                    dynamic.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
            for m in (30..=140).step_by(10) {
                let target = c.scaled(if m == 30 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-unsolvable-n10",
                    m as f64 / 10.0,
                    m,
                    10,
                    Predicate::Unsolvable,
                    GenMethod::GenerateSelect,
                    target,
                    dynamic.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
            for m in (10..=70).step_by(10) {
                plan.push(csp_point(
                    "hc-unsolvable-n10",
                    m as f64 / 10.0,
                    m,
                    10,
                    Predicate::Unsolvable,
                    GenMethod::HillClimb,
                    c.scaled(1000),
                    dynamic.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
            if c.include_long_running {
                for m in (20..=240).step_by(20) {
                    let target = c.scaled(if m == 240 { 35 } else { 500 });
                    plan.push(csp_point(
                        "gs-solvable-n20",
                        m as f64 / 20.0,
                        m,
                        20,
                        Predicate::Solvable,
                        GenMethod::GenerateSelect,
                        target,
                        dynamic.clone(),
                        c.scaled_runs(100),
                        CountMode::Skip,
                        false,
                        false,
                        Some(10_000_000),
                    ));
                }
                for m in (100..=240).step_by(20) {
                    let target = c.scaled(if m == 100 { 15 } else { 500 });
                    plan.push(csp_point(
                        "gs-unsolvable-n20",
                        m as f64 / 20.0,
                        m,
                        20,
                        Predicate::Unsolvable,
                        GenMethod::GenerateSelect,
                        target,
                        dynamic.clone(),
                        c.scaled_runs(100),
                        CountMode::Skip,
                        false,
                        false,
                        Some(10_000_000),
                    ));
                }
            }
        }
        Preset::Fig3 => {
            let mut gamma = 2.0;
            while gamma <= 7.01 {
                plan.push(PointPlan {
                    series: "coloring".to_string(),
                    axis: gamma,
                    key: format!("coloring-g{:04.1}", gamma),
                    task: PointTask::Coloring {
                        nodes: 100,
                        gamma,
                        graphs: c.scaled(100_000),
                        default_node_cap: Some(10_000_000),
                    },
                });
                gamma += 0.5;
            }
        }
        Preset::Fig4 => {
            for m in (0..=140).step_by(10) {
                let target = c.scaled(if m == 140 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-solvable",
                    m as f64,
                    m,
                    10,
                    Predicate::Solvable,
                    GenMethod::GenerateSelect,
                    target,
                    vec![],
                    0,
                    CountMode::Exact,
                    false,
                    false,
                    None,
                ));
            }
        }
        Preset::Fig5 => {
            for m in (10..=140).step_by(10) {
                let target = c.scaled(if m == 140 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-solvable-n10",
                    m as f64 / 10.0,
                    m,
                    10,
                    Predicate::Solvable,
                    GenMethod::GenerateSelect,
                    target,
                    vec![],
                    0,
                    CountMode::Cap(2),
                    false,
                    false,
                    None,
                ));
            }
            if c.include_long_running {
                for m in (20..=240).step_by(20) {
                    let target = c.scaled(if m == 240 { 20 } else { 500 });
                    plan.push(csp_point(
                        "gs-solvable-n20",
                        m as f64 / 20.0,
                        m,
                        20,
                        Predicate::Solvable,
                        GenMethod::GenerateSelect,
                        target,
                        vec![],
                        0,
                        CountMode::Cap(2),
                        false,
                        false,
                        None,
                    ));
                }
            }
        }
        Preset::Fig6 => {
            for m in (40..=140).step_by(10) {
                let target = c.scaled(if m == 140 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-exactly-one",
                    m as f64,
                    m,
                    10,
                    Predicate::ExactlyKSolutions(1),
                    GenMethod::GenerateSelect,
                    target,
                    dynamic.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
            for m in [25, 30, 35, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130, 140] {
                let target = c.scaled(if m <= 35 { 100 } else { 1000 });
                plan.push(csp_point(
                    "hc-exactly-one",
                    m as f64,
                    m,
                    10,
                    Predicate::ExactlyKSolutions(1),
                    GenMethod::HillClimb,
                    target,
                    dynamic.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
        }
        Preset::Fig7 => {
            for m in (30..=140).step_by(10) {
                let target = c.scaled(if m == 30 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-unsolvable",
                    m as f64,
                    m,
                    10,
                    Predicate::Unsolvable,
                    GenMethod::GenerateSelect,
                    target,
                    both.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
            for m in (10..=70).step_by(10) {
                plan.push(csp_point(
                    "hc-unsolvable",
                    m as f64,
                    m,
                    10,
                    Predicate::Unsolvable,
                    GenMethod::HillClimb,
                    c.scaled(1000),
                    both.clone(),
                    c.scaled_runs(100),
                    CountMode::Skip,
                    false,
                    false,
                    None,
                ));
            }
        }
        Preset::Fig8 => {
            for m in (30..=140).step_by(10) {
                let target = c.scaled(if m == 30 { 100 } else { 1000 });
                plan.push(csp_point(
                    "gs-unsolvable",
                    m as f64,
                    m,
                    10,
                    Predicate::Unsolvable,
                    GenMethod::GenerateSelect,
                    target,
                    vec![],
                    0,
                    CountMode::Skip,
                    true,
                    false,
                    None,
                ));
            }
            for m in (10..=70).step_by(10) {
                plan.push(csp_point(
                    "hc-unsolvable",
                    m as f64,
                    m,
                    10,
                    Predicate::Unsolvable,
                    GenMethod::HillClimb,
                    c.scaled(1000),
                    vec![],
                    0,
                    CountMode::Skip,
                    true,
                    false,
                    None,
                ));
            }
        }
        Preset::Fig9 => {
            plan.push(csp_point(
                "gs-unsolvable-m60",
                60.0,
                60,
                10,
                Predicate::Unsolvable,
                GenMethod::GenerateSelect,
                c.scaled(1000),
                dynamic.clone(),
                c.scaled_runs(100),
                CountMode::Skip,
                true,
                true,
                None,
            ));
        }
    }
    plan
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir_all(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Runs one CSP point: generate + measure + solve, fully in parallel over
/// instance slots, then assemble records and raw run rows.
#[allow(clippy::too_many_arguments)]
fn run_csp_point(
    plan: &PointPlan,
    point_seed: u64,
    solve_seed_root: u64,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<(Vec<CspInstanceRecord>, Vec<RunRecord>)> {
    let PointTask::Csp {
        params,
        predicate,
        method,
        problems,
        solvers,
        runs,
        count_mode,
        mus,
        default_node_cap,
        ..
    } = &plan.task
    else {
        unreachable!("csp task");
    };
    let node_cap = config.node_cap.or(*default_node_cap);
    let instances_dir = dir.join("instances");
    create_dir_all(&instances_dir)?;

    let slots: Vec<Result<(CspInstanceRecord, Vec<RunRecord>, Option<Problem>)>> = (0..*problems)
        .into_par_iter()
        .map(|slot| {
            let slot_seed = derive_seed(&[point_seed, slot as u64]);
            let spec = GenSpec {
                params: *params,
                predicate: *predicate,
                method: *method,
                max_attempts: config.max_attempts,
                seed: slot_seed,
            };
            let mut record = CspInstanceRecord {
                id: slot,
                seed: slot_seed,
                obtained: false,
                attempts: 0,
                solvable: None,
                solution_count: None,
                count_capped: None,
                mus_count: None,
                smallest_mus: None,
                costs: BTreeMap::new(),
            };
            let mut runs_out = Vec::new();
            let problem = match generate_with_predicate(&spec) {
                Ok(res) => {
                    record.obtained = true;
                    record.attempts = res.attempts;
                    if let Some(c) = res.solution_count {
                        record.solvable = Some(c.count >= 1);
                    }
                    res.problem
                }
                Err(Error::GenerationExhausted { attempts }) => {
                    record.attempts = attempts;
                    return Ok((record, runs_out, None));
                }
                Err(e) => return Err(e),
            };
            let id = instance_id(slot);
            problem.write_to(&instances_dir.join(format!("{id}.csp")))?;

            match count_mode {
                CountMode::Skip => {}
                CountMode::Exact => {
                    let c = count_solutions(&problem, None);
                    record.solution_count = Some(c.count);
                    record.count_capped = Some(c.capped);
                    record.solvable = Some(c.count >= 1);
                }
                CountMode::Cap(k) => {
                    let c = count_solutions(&problem, Some(*k));
                    record.solution_count = Some(c.count);
                    record.count_capped = Some(c.capped);
                    record.solvable = Some(c.count >= 1);
                }
            }
            if *mus {
                let report = enumerate_mus(&problem)?;
                record.mus_count = Some(report.count);
                record.smallest_mus = report.smallest_size;
            }
            for kind in solvers {
                let base_seed = problem_base_seed(
                    derive_seed(&[solve_seed_root, hash_label(kind.name())]),
                    &id,
                );
                let protocol = RunProtocol {
                    runs: *runs,
                    base_seed,
                    aggregate: Aggregate::Median,
                };
                let outcome = run_protocol(&problem, *kind, &protocol, node_cap);
                for (i, run) in outcome.raw.iter().enumerate() {
                    runs_out.push(RunRecord {
                        problem_id: id.clone(),
                        solver: kind.name().to_string(),
                        run_index: i as u32,
                        seed: run.seed,
                        nodes: run.nodes,
                        status: match &run.status {
                            SearchStatus::Solution(_) => "solution".to_string(),
                            SearchStatus::Unsolvable => "unsolvable".to_string(),
                            SearchStatus::Censored => "censored".to_string(),
                        },
                    });
                }
                record.costs.insert(
                    kind.name().to_string(),
                    CostSummary {
                        median: outcome.median_nodes,
                        mean: outcome.mean_nodes,
                        min: outcome.min_nodes,
                        max: outcome.max_nodes,
                        censored: outcome.censored_runs,
                    },
                );
            }
            Ok((record, runs_out, Some(problem)))
        })
        .collect();

    let mut records = Vec::with_capacity(*problems);
    let mut all_runs = Vec::new();
    for slot in slots {
        let (record, runs_out, _) = slot?;
        records.push(record);
        all_runs.extend(runs_out);
    }
    Ok((records, all_runs))
}

fn run_coloring_point(
    plan: &PointPlan,
    point_seed: u64,
    solve_seed_root: u64,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<(Vec<ColoringInstanceRecord>, Vec<RunRecord>)> {
    let PointTask::Coloring {
        nodes,
        gamma,
        graphs,
        default_node_cap,
    } = &plan.task
    else {
        unreachable!("coloring task");
    };
    let node_cap = config.node_cap.or(*default_node_cap);
    let instances_dir = dir.join("instances");
    create_dir_all(&instances_dir)?;

    let slots: Vec<Result<(ColoringInstanceRecord, RunRecord)>> = (0..*graphs)
        .into_par_iter()
        .map(|slot| {
            let slot_seed = derive_seed(&[point_seed, slot as u64]);
            let mut rng = crate::seed::rng_from_seed(slot_seed);
            let graph = random_graph(*nodes, *gamma, &mut rng)?;
            let id = instance_id(slot);
            graph.write_to(&instances_dir.join(format!("{id}.graph")))?;
            let run_seed = problem_base_seed(solve_seed_root, &id);
            let outcome = brelaz_backtrack(&graph, run_seed, node_cap);
            let status = match &outcome.status {
                ColoringStatus::Coloring(_) => "colorable",
                ColoringStatus::Unsolvable => "uncolorable",
                ColoringStatus::Censored => "censored",
            };
            Ok((
                ColoringInstanceRecord {
                    id: slot,
                    seed: slot_seed,
                    edges: graph.edge_count(),
                    connected: graph.is_connected(),
                    status: status.to_string(),
                    nodes: outcome.nodes,
                },
                RunRecord {
                    problem_id: id,
                    solver: "brelaz".to_string(),
                    run_index: 0,
                    seed: run_seed,
                    nodes: outcome.nodes,
                    status: status.to_string(),
                },
            ))
        })
        .collect();

    let mut records = Vec::with_capacity(*graphs);
    let mut all_runs = Vec::new();
    for slot in slots {
        let (record, run) = slot?;
        records.push(record);
        all_runs.push(run);
    }
    Ok((records, all_runs))
}

/// Derives the statistic rows of one point from its persisted data. Used
/// both right after running a point and by `analyze` on reread data.
pub fn compute_stats(data: &PointData) -> Result<Vec<StatRow>> {
    let plan = &data.plan;
    let mut rows = Vec::new();
    match &plan.task {
        PointTask::Csp {
            solvers,
            count_mode,
            mus,
            group_cost_by_mus,
            predicate,
            ..
        } => {
            let obtained: Vec<&CspInstanceRecord> =
                data.csp.iter().filter(|r| r.obtained).collect();
            let attempts: u64 = data.csp.iter().map(|r| r.attempts).sum();
            let censored: u64 = data
                .csp
                .iter()
                .flat_map(|r| r.costs.values())
                .map(|c| u64::from(c.censored))
                .sum();
            let row = |statistic: String, value: f64, lo: f64, hi: f64, n: usize| StatRow {
                axis: plan.axis,
                n_problems: n,
                statistic,
                value,
                ci_lo: lo,
                ci_hi: hi,
                censored,
                attempts,
            };
            rows.push(row(
                format!("{}.obtained", plan.series),
                obtained.len() as f64,
                obtained.len() as f64,
                obtained.len() as f64,
                obtained.len(),
            ));
            if obtained.is_empty() {
                return Ok(rows);
            }
            if *predicate == Predicate::Any {
                let solvable = obtained
                    .iter()
                    .filter(|r| r.solvable == Some(true))
                    .count() as u64;
                let f = stats::fraction_with_ci(solvable, obtained.len() as u64)?;
                rows.push(row(
                    format!("{}.solvable_fraction", plan.series),
                    f.f,
                    f.ci.0,
                    f.ci.1,
                    obtained.len(),
                ));
            }
            if !group_cost_by_mus {
                for kind in solvers {
                    let meds: Vec<f64> = obtained
                        .iter()
                        .filter_map(|r| r.costs.get(kind.name()).map(|c| c.median))
                        .collect();
                    if meds.is_empty() {
                        continue;
                    }
                    let (med, lo, hi) = stats::median_with_ci(&meds)?;
                    rows.push(row(
                        format!("{}.median_cost_{}", plan.series, kind.name()),
                        med,
                        lo,
                        hi,
                        meds.len(),
                    ));
                }
            }
            match count_mode {
                CountMode::Exact => {
                    let counts: Vec<f64> = obtained
                        .iter()
                        .filter_map(|r| r.solution_count.map(|c| c as f64))
                        .collect();
                    let (mean, mlo, mhi) = stats::mean_with_ci(&counts)?;
                    rows.push(row(
                        format!("{}.mean_solution_count", plan.series),
                        mean,
                        mlo,
                        mhi,
                        counts.len(),
                    ));
                    let (med, lo, hi) = stats::median_with_ci(&counts)?;
                    rows.push(row(
                        format!("{}.median_solution_count", plan.series),
                        med,
                        lo,
                        hi,
                        counts.len(),
                    ));
                }
                CountMode::Cap(k) if *k >= 2 => {
                    let hits = obtained
                        .iter()
                        .filter(|r| r.solution_count.is_some_and(|c| c >= *k))
                        .count() as u64;
                    let f = stats::fraction_with_ci(hits, obtained.len() as u64)?;
                    rows.push(row(
                        format!("{}.fraction_at_least_{k}", plan.series),
                        f.f,
                        f.ci.0,
                        f.ci.1,
                        obtained.len(),
                    ));
                }
                _ => {}
            }
            if *mus && !group_cost_by_mus {
                let sizes: Vec<f64> = obtained
                    .iter()
                    .filter_map(|r| r.smallest_mus.map(|s| s as f64))
                    .collect();
                if !sizes.is_empty() {
                    let (mean, lo, hi) = stats::mean_with_ci(&sizes)?;
                    rows.push(row(
                        format!("{}.mean_smallest_mus", plan.series),
                        mean,
                        lo,
                        hi,
                        sizes.len(),
                    ));
                }
                let counts: Vec<f64> = obtained
                    .iter()
                    .filter_map(|r| r.mus_count.map(|c| c as f64))
                    .collect();
                if !counts.is_empty() {
                    let (mean, lo, hi) = stats::mean_with_ci(&counts)?;
                    rows.push(row(
                        format!("{}.mean_mus_count", plan.series),
                        mean,
                        lo,
                        hi,
                        counts.len(),
                    ));
                }
            }
            if *group_cost_by_mus {
                let solver = solvers.first().map(|s| s.name()).unwrap_or("dynamic");
                let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                for r in &obtained {
                    if let (Some(size), Some(cost)) =
                        (r.smallest_mus, r.costs.get(solver).map(|c| c.median))
                    {
                        by_size.entry(size).or_default().push(cost);
                    }
                }
                for (size, costs) in by_size {
                    let (mean, lo, hi) = stats::mean_with_ci(&costs)?;
                    rows.push(StatRow {
                        axis: size as f64,
                        n_problems: costs.len(),
                        statistic: format!("{}.mean_cost_by_smallest_mus", plan.series),
                        value: mean,
                        ci_lo: lo,
                        ci_hi: hi,
                        censored,
                        attempts,
                    });
                }
            }
        }
        PointTask::Coloring { .. } => {
            let records = &data.coloring;
            let attempts = records.len() as u64;
            let censored = records.iter().filter(|r| r.status == "censored").count() as u64;
            let row = |statistic: String, value: f64, lo: f64, hi: f64, n: usize| StatRow {
                axis: plan.axis,
                n_problems: n,
                statistic,
                value,
                ci_lo: lo,
                ci_hi: hi,
                censored,
                attempts,
            };
            rows.push(row(
                format!("{}.obtained", plan.series),
                records.len() as f64,
                records.len() as f64,
                records.len() as f64,
                records.len(),
            ));
            if records.is_empty() {
                return Ok(rows);
            }
            let determined: Vec<&ColoringInstanceRecord> = records
                .iter()
                .filter(|r| r.status != "censored")
                .collect();
            if !determined.is_empty() {
                let colorable = determined
                    .iter()
                    .filter(|r| r.status == "colorable")
                    .count() as u64;
                let f = stats::fraction_with_ci(colorable, determined.len() as u64)?;
                rows.push(row(
                    format!("{}.colorable_fraction", plan.series),
                    f.f,
                    f.ci.0,
                    f.ci.1,
                    determined.len(),
                ));
                for (label, want) in [("colorable", "colorable"), ("uncolorable", "uncolorable")] {
                    let costs: Vec<f64> = determined
                        .iter()
                        .filter(|r| r.status == want)
                        .map(|r| r.nodes as f64)
                        .collect();
                    if !costs.is_empty() {
                        let (med, lo, hi) = stats::median_with_ci(&costs)?;
                        rows.push(row(
                            format!("{}.median_cost_{label}", plan.series),
                            med,
                            lo,
                            hi,
                            costs.len(),
                        ));
                    }
                }
            }
            let connected = records.iter().filter(|r| r.connected).count() as u64;
            let f = stats::fraction_with_ci(connected, records.len() as u64)?;
            rows.push(row(
                format!("{}.connected_fraction", plan.series),
                f.f,
                f.ci.0,
                f.ci.1,
                records.len(),
            ));
        }
    }
    Ok(rows)
}

fn problems_csv(data: &PointData) -> String {
    let mut out = String::new();
    match &data.plan.task {
        PointTask::Csp { solvers, .. } => {
            let mut header = String::from(
                "id,seed,obtained,attempts,solvable,solution_count,count_capped,mus_count,smallest_mus",
            );
            for kind in solvers {
                let name = kind.name();
                let _ = write!(
                    header,
                    ",median_nodes_{name},mean_nodes_{name},min_nodes_{name},max_nodes_{name},censored_{name}"
                );
            }
            out.push_str(&header);
            out.push('\n');
            for r in &data.csp {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    instance_id(r.id),
                    r.seed,
                    r.obtained,
                    r.attempts,
                    opt(&r.solvable),
                    opt(&r.solution_count),
                    opt(&r.count_capped),
                    opt(&r.mus_count),
                    opt(&r.smallest_mus)
                );
                for kind in solvers {
                    match r.costs.get(kind.name()) {
                        Some(c) => {
                            let _ = write!(
                                out,
                                ",{},{},{},{},{}",
                                c.median, c.mean, c.min, c.max, c.censored
                            );
                        }
                        None => out.push_str(",,,,,"),
                    }
                }
                out.push('\n');
            }
        }
        PointTask::Coloring { .. } => {
            out.push_str("id,seed,edges,connected,status,nodes\n");
            for r in &data.coloring {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    instance_id(r.id),
                    r.seed,
                    r.edges,
                    r.connected,
                    r.status,
                    r.nodes
                );
            }
        }
    }
    out
}

fn runs_csv(runs: &[RunRecord]) -> String {
    let mut out = String::from("problem_id,solver,run_index,seed,nodes,status\n");
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.problem_id, r.solver, r.run_index, r.seed, r.nodes, r.status
        );
    }
    out
}

/// Runs (or resumes) one point, persisting instances, raw runs, per-problem
/// records, and the summary.
pub fn run_point(plan: &PointPlan, config: &ExperimentConfig) -> Result<SweepPoint> {
    let dir = config.out_dir.join("points").join(&plan.key);
    let summary_path = dir.join("summary.json");
    if summary_path.exists() {
        let text =
            std::fs::read_to_string(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
        let point: SweepPoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: summary_path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        return Ok(point);
    }
    create_dir_all(&dir)?;
    let point_seed = point_seed(config.seed, &plan.key);
    let solve_seed_root = derive_seed(&[point_seed, SOLVE_STAGE]);

    let started = std::time::Instant::now();
    let (mut data, runs) = match &plan.task {
        PointTask::Csp { .. } => {
            let (records, runs) = run_csp_point(plan, point_seed, solve_seed_root, config, &dir)?;
            (
                PointData {
                    plan: plan.clone(),
                    point_seed,
                    solve_seed_root,
                    wall_time_seconds: 0.0,
                    csp: records,
                    coloring: Vec::new(),
                },
                runs,
            )
        }
        PointTask::Coloring { .. } => {
            let (records, runs) =
                run_coloring_point(plan, point_seed, solve_seed_root, config, &dir)?;
            (
                PointData {
                    plan: plan.clone(),
                    point_seed,
                    solve_seed_root,
                    wall_time_seconds: 0.0,
                    csp: Vec::new(),
                    coloring: records,
                },
                runs,
            )
        }
    };
    data.wall_time_seconds = started.elapsed().as_secs_f64();

    write_file(&dir.join("problems.csv"), &problems_csv(&data))?;
    write_file(&dir.join("runs.csv"), &runs_csv(&runs))?;
    write_file(
        &dir.join("point.json"),
        &serde_json::to_string_pretty(&data).expect("serializable"),
    )?;

    let stats_rows = compute_stats(&data)?;
    let (obtained, attempts) = match &plan.task {
        PointTask::Csp { .. } => (
            data.csp.iter().filter(|r| r.obtained).count(),
            data.csp.iter().map(|r| r.attempts).sum(),
        ),
        PointTask::Coloring { .. } => (data.coloring.len(), data.coloring.len() as u64),
    };
    let censored = stats_rows.first().map(|r| r.censored).unwrap_or(0);
    let target = match &plan.task {
        PointTask::Csp { problems, .. } => *problems,
        PointTask::Coloring { graphs, .. } => *graphs,
    };
    let point = SweepPoint {
        series: plan.series.clone(),
        axis: plan.axis,
        key: plan.key.clone(),
        target,
        obtained,
        attempts,
        censored,
        stats: stats_rows,
    };
    write_file(
        &summary_path,
        &serde_json::to_string_pretty(&point).expect("serializable"),
    )?;
    Ok(point)
}

/// Output format of [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

/// Renders the results table. CSV columns:
/// `axis, n_problems, statistic, value, ci_lo, ci_hi, censored, attempts`.
/// Byte-stable for fixed inputs.
pub fn render_results(points: &[SweepPoint], format: EmitFormat) -> String {
    match format {
        EmitFormat::Csv => {
            let mut out =
                String::from("axis,n_problems,statistic,value,ci_lo,ci_hi,censored,attempts\n");
            for p in points {
                for r in &p.stats {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        fmt_axis(r.axis),
                        r.n_problems,
                        r.statistic,
                        r.value,
                        r.ci_lo,
                        r.ci_hi,
                        r.censored,
                        r.attempts
                    );
                }
            }
            out
        }
        EmitFormat::Json => {
            serde_json::to_string_pretty(&points).expect("serializable") + "\n"
        }
    }
}

/// Writes results.csv or results.json under `out_dir`.
pub fn emit_results(
    points: &[SweepPoint],
    format: EmitFormat,
    out_dir: &Path,
) -> Result<PathBuf> {
    if points.is_empty() {
        return Err(Error::invalid("no points to emit"));
    }
    let path = out_dir.join(match format {
        EmitFormat::Csv => "results.csv",
        EmitFormat::Json => "results.json",
    });
    write_file(&path, &render_results(points, format))?;
    Ok(path)
}

/// Runs a whole experiment: expands the preset, runs or resumes every
/// point, and writes the results table plus a manifest echoing the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    create_dir_all(&config.out_dir)?;
    let plan = expand_preset(config);

    let manifest = serde_json::json!({
        "config": config,
        "points": plan.iter().map(|p| serde_json::json!({
            "key": p.key,
            "series": p.series,
            "axis": p.axis,
            "point_seed": point_seed(config.seed, &p.key),
            "solve_seed_root": derive_seed(&[point_seed(config.seed, &p.key), SOLVE_STAGE]),
        })).collect::<Vec<_>>(),
    });
    write_file(
        &config.out_dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).expect("serializable") + "\n"),
    )?;

    let workers = std::env::var("PHASE_LAB_WORKERS")
        .ok()
        .and_then(|w| w.parse::<usize>().ok())
        .or(config.workers);
    let points: Vec<SweepPoint> = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
            pool.install(|| -> Result<Vec<SweepPoint>> {
                plan.iter().map(|p| run_point(p, config)).collect()
            })?
        }
        None => plan.iter().map(|p| run_point(p, config)).collect::<Result<_>>()?,
    };

    emit_results(&points, EmitFormat::Csv, &config.out_dir)?;
    emit_results(&points, EmitFormat::Json, &config.out_dir)?;
    Ok(points)
}

/// Recomputes a point's statistics from its persisted raw data, without
/// re-solving: the `analyze` entry point.
pub fn analyze_point(dir: &Path) -> Result<SweepPoint> {
    let point_path = dir.join("point.json");
    let text = std::fs::read_to_string(&point_path).map_err(|e| Error::io(&point_path, e))?;
    let data: PointData = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: point_path.display().to_string(),
        line: 0,
        msg: e.to_string(),
    })?;
    let stats_rows = compute_stats(&data)?;
    let (obtained, attempts) = match &data.plan.task {
        PointTask::Csp { .. } => (
            data.csp.iter().filter(|r| r.obtained).count(),
            data.csp.iter().map(|r| r.attempts).sum(),
        ),
        PointTask::Coloring { .. } => (data.coloring.len(), data.coloring.len() as u64),
    };
    let target = match &data.plan.task {
        PointTask::Csp { problems, .. } => *problems,
        PointTask::Coloring { graphs, .. } => *graphs,
    };
    Ok(SweepPoint {
        series: data.plan.series.clone(),
        axis: data.plan.axis,
        key: data.plan.key.clone(),
        target,
        obtained,
        attempts,
        censored: stats_rows.first().map(|r| r.censored).unwrap_or(0),
        stats: stats_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(preset: Preset, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            preset,
            scale: 0.01,
            seed: 42,
            out_dir: dir.to_path_buf(),
            node_cap: None,
            max_attempts: 50_000,
            include_long_running: false,
            workers: Some(2),
        }
    }

    #[test]
    fn fig1_structure_at_tiny_scale() {
        let tmp = tempfile::tempdir().unwrap();
        let config = tiny_config(Preset::Fig1, tmp.path());
        let points = run_experiment(&config).unwrap();
        assert_eq!(points.len(), 14, "one point per m in 10..=140");
        for p in &points {
            assert!(p.obtained > 0);
            assert!(p
                .stats
                .iter()
                .any(|r| r.statistic.ends_with("median_cost_dynamic")));
            assert!(p
                .stats
                .iter()
                .any(|r| r.statistic.ends_with("solvable_fraction")));
        }
        assert!(tmp.path().join("results.csv").exists());
        assert!(tmp.path().join("results.json").exists());
        assert!(tmp.path().join("manifest.json").exists());
    }

    #[test]
    fn resume_and_reemit_is_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let config = tiny_config(Preset::Fig4, tmp.path());
        let first = run_experiment(&config).unwrap();
        let csv1 = std::fs::read(tmp.path().join("results.csv")).unwrap();
        let json1 = std::fs::read(tmp.path().join("results.json")).unwrap();
        // drop the final tables, keep the per-point data, and resume
        std::fs::remove_file(tmp.path().join("results.csv")).unwrap();
        std::fs::remove_file(tmp.path().join("results.json")).unwrap();
        let second = run_experiment(&config).unwrap();
        assert_eq!(first.len(), second.len());
        let csv2 = std::fs::read(tmp.path().join("results.csv")).unwrap();
        let json2 = std::fs::read(tmp.path().join("results.json")).unwrap();
        assert_eq!(csv1, csv2);
        assert_eq!(json1, json2);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let tmp1 = tempfile::tempdir().unwrap();
        let tmp2 = tempfile::tempdir().unwrap();
        let mut c1 = tiny_config(Preset::Fig1, tmp1.path());
        c1.workers = Some(1);
        let mut c2 = tiny_config(Preset::Fig1, tmp2.path());
        c2.workers = Some(4);
        run_experiment(&c1).unwrap();
        run_experiment(&c2).unwrap();
        let a = std::fs::read(tmp1.path().join("results.csv")).unwrap();
        let b = std::fs::read(tmp2.path().join("results.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn analyze_matches_run() {
        let tmp = tempfile::tempdir().unwrap();
        let config = tiny_config(Preset::Fig9, tmp.path());
        let points = run_experiment(&config).unwrap();
        assert_eq!(points.len(), 1);
        let dir = tmp.path().join("points").join(&points[0].key);
        let reanalyzed = analyze_point(&dir).unwrap();
        assert_eq!(
            serde_json::to_string(&points[0]).unwrap(),
            serde_json::to_string(&reanalyzed).unwrap()
        );
        // fig9 rows are grouped by smallest-MUS size
        assert!(points[0]
            .stats
            .iter()
            .any(|r| r.statistic.ends_with("mean_cost_by_smallest_mus")));
    }

    #[test]
    fn coloring_preset_structure() {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = tiny_config(Preset::Fig3, tmp.path());
        config.scale = 0.0005; // 50 graphs per point
        let points = run_experiment(&config).unwrap();
        assert_eq!(points.len(), 11, "gamma 2.0 to 7.0 step 0.5");
        for p in &points {
            assert!(p.stats.iter().any(|r| r.statistic.ends_with("colorable_fraction")));
            assert!(p.stats.iter().any(|r| r.statistic.ends_with("connected_fraction")));
        }
    }
}
