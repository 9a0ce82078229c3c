//! The `phase-lab` command line: generate / solve / count / mus / color /
//! experiment / analyze.
//!
//! Conventions shared by every subcommand: `--seed` omitted means one is
//! drawn from the OS and printed to stderr so the run stays reproducible;
//! diagnostics go to stderr, data to files or stdout; exit codes are
//! 0 success, 1 usage error, 2 runtime/exhaustion error, 3 i/o error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::color::{brelaz_backtrack, random_graph, ColoringStatus};
use crate::csp::{count_solutions, Problem, ProblemParams};
use crate::error::{Error, Result};
use crate::generate::{generate_with_predicate, GenMethod, GenSpec, Predicate};
use crate::harness::{
    analyze_point, instance_id, problem_base_seed, render_results, run_experiment, EmitFormat,
    ExperimentConfig, Preset,
};
use crate::mus::enumerate_mus;
use crate::seed::derive_seed;
use crate::solve::{run_protocol, Aggregate, RunProtocol, SearchStatus, SolverKind};

#[derive(Parser)]
#[command(
    name = "phase-lab",
    version,
    about = "Random binary CSP and graph-coloring search-cost laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate problem instances into a directory, with a JSON manifest.
    Generate(GenerateCmd),
    /// Solve instances repeatedly and write per-problem cost summaries.
    Solve(SolveCmd),
    /// Print the exact (or capped) solution count of one instance.
    Count(CountCmd),
    /// Enumerate minimal unsolvable subproblems.
    Mus(MusCmd),
    /// Generate random graphs and search them with the Brelaz heuristic.
    Color(ColorCmd),
    /// Run a figure preset end to end.
    Experiment(ExperimentCmd),
    /// Recompute a point's statistics from persisted raw data.
    Analyze(AnalyzeCmd),
}

#[derive(Args)]
struct GenerateCmd {
    /// Variable count.
    #[arg(long)]
    n: usize,
    /// Domain size.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Nogood count.
    #[arg(long)]
    m: usize,
    /// generate-select | hill-climb | prespecified | homogeneous
    #[arg(long, default_value = "generate-select")]
    method: String,
    /// any | solvable | unsolvable | exactly-k | at-least-k
    #[arg(long, default_value = "any")]
    predicate: String,
    /// Solution-count target for the exactly-k / at-least-k predicates.
    #[arg(long)]
    k: Option<u64>,
    /// Number of instances to generate.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Generation attempt budget per instance.
    #[arg(long, default_value_t = 1_000_000)]
    max_attempts: u64,
}

#[derive(Args)]
struct SolveCmd {
    /// Instance file or directory of .csp files.
    #[arg(long = "in")]
    input: PathBuf,
    /// chronological | dynamic
    #[arg(long, default_value = "dynamic")]
    solver: String,
    #[arg(long, default_value_t = 100)]
    runs: u32,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV of per-problem cost summaries.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    node_cap: Option<u64>,
    /// median | mean
    #[arg(long, default_value = "median")]
    aggregate: String,
    /// Also write every raw run to this CSV.
    #[arg(long)]
    raw_out: Option<PathBuf>,
}

#[derive(Args)]
struct CountCmd {
    #[arg(long = "in")]
    input: PathBuf,
    /// Stop counting at this many solutions.
    #[arg(long)]
    cap: Option<u64>,
    /// Write the count here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface uniformity; counting is deterministic.
    #[arg(long, hide = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MusCmd {
    /// Instance file or directory of .csp files.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV (required when the input is a directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface uniformity; enumeration is deterministic.
    #[arg(long, hide = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ColorCmd {
    #[arg(long, default_value_t = 100)]
    nodes: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV of per-graph search outcomes.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000_000)]
    node_cap: u64,
    /// Also write each generated graph into this directory.
    #[arg(long)]
    graphs_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentCmd {
    /// fig1 .. fig9
    #[arg(long)]
    preset: Option<String>,
    /// Sample-count multiplier relative to the full published protocol.
    #[arg(long)]
    scale: Option<f64>,
    /// Shorthand for --scale 1.0.
    #[arg(long, default_value_t = false)]
    paper_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file with the same schema as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    node_cap: Option<u64>,
    /// Generation attempt budget per instance slot.
    #[arg(long)]
    max_attempts: Option<u64>,
    /// Include sweeps tagged long-running (the n = 20 curves).
    #[arg(long, default_value_t = false)]
    long: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct AnalyzeCmd {
    /// A point directory of an experiment (contains point.json).
    #[arg(long = "in")]
    input: PathBuf,
    /// Write the recomputed rows as CSV here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface uniformity; analysis is deterministic.
    #[arg(long, hide = true)]
    seed: Option<u64>,
}

/// Entry point used by `main`; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::rng().random();
        eprintln!("seed: {s}");
        s
    })
}

fn parse_method(s: &str) -> Result<GenMethod> {
    match s {
        "generate-select" => Ok(GenMethod::GenerateSelect),
        "hill-climb" => Ok(GenMethod::HillClimb),
        "prespecified" => Ok(GenMethod::PrespecifiedSolution),
        "homogeneous" => Ok(GenMethod::Homogeneous),
        other => Err(Error::invalid(format!("unknown method `{other}`"))),
    }
}

fn parse_predicate(s: &str, k: Option<u64>) -> Result<Predicate> {
    match s {
        "any" => Ok(Predicate::Any),
        "solvable" => Ok(Predicate::Solvable),
        "unsolvable" => Ok(Predicate::Unsolvable),
        "exactly-k" => Ok(Predicate::ExactlyKSolutions(
            k.ok_or_else(|| Error::invalid("--predicate exactly-k requires --k"))?,
        )),
        "at-least-k" => Ok(Predicate::AtLeastKSolutions(
            k.ok_or_else(|| Error::invalid("--predicate at-least-k requires --k"))?,
        )),
        other => Err(Error::invalid(format!("unknown predicate `{other}`"))),
    }
}

fn create_dir_all(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Collects (id, path) pairs: a single .csp file or every .csp file of a
/// directory, sorted by file name.
fn collect_instances(input: &Path) -> Result<Vec<(String, PathBuf)>> {
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".to_string())
    };
    if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|e| Error::io(input, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csp"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::invalid(format!(
                "no .csp files in {}",
                input.display()
            )));
        }
        Ok(files.into_iter().map(|p| (stem(&p), p)).collect())
    } else {
        Ok(vec![(stem(input), input.to_path_buf())])
    }
}

fn execute(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Generate(c) => generate(c),
        Cmd::Solve(c) => solve_cmd(c),
        Cmd::Count(c) => count_cmd(c),
        Cmd::Mus(c) => mus_cmd(c),
        Cmd::Color(c) => color_cmd(c),
        Cmd::Experiment(c) => experiment_cmd(c),
        Cmd::Analyze(c) => analyze_cmd(c),
    }
}

fn generate(c: GenerateCmd) -> Result<()> {
    let params = ProblemParams::new(c.n, c.d, c.m)?;
    let method = parse_method(&c.method)?;
    let predicate = parse_predicate(&c.predicate, c.k)?;
    let seed = resolve_seed(c.seed);
    create_dir_all(&c.out)?;

    let mut instances = Vec::new();
    for slot in 0..c.count {
        let slot_seed = derive_seed(&[seed, slot as u64]);
        let spec = GenSpec {
            params,
            predicate,
            method,
            max_attempts: c.max_attempts,
            seed: slot_seed,
        };
        let id = instance_id(slot);
        match generate_with_predicate(&spec) {
            Ok(res) => {
                let file = format!("{id}.csp");
                res.problem.write_to(&c.out.join(&file))?;
                instances.push(serde_json::json!({
                    "id": id,
                    "file": file,
                    "seed": slot_seed,
                    "obtained": true,
                    "attempts": res.attempts,
                    "solution_count": res.solution_count.map(|s| s.count),
                    "count_capped": res.solution_count.map(|s| s.capped),
                }));
            }
            Err(Error::GenerationExhausted { attempts }) => {
                instances.push(serde_json::json!({
                    "id": id,
                    "file": serde_json::Value::Null,
                    "seed": slot_seed,
                    "obtained": false,
                    "attempts": attempts,
                }));
            }
            Err(e) => return Err(e),
        }
    }
    let obtained = instances
        .iter()
        .filter(|i| i["obtained"] == serde_json::Value::Bool(true))
        .count();
    let manifest = serde_json::json!({
        "params": params,
        "method": method,
        "predicate": predicate,
        "max_attempts": c.max_attempts,
        "seed": seed,
        "requested": c.count,
        "obtained": obtained,
        "instances": instances,
    });
    write_file(
        &c.out.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).expect("serializable") + "\n"),
    )?;
    eprintln!("generated {obtained}/{} instances in {}", c.count, c.out.display());
    if obtained < c.count {
        return Err(Error::GenerationExhausted {
            attempts: instances
                .iter()
                .map(|i| i["attempts"].as_u64().unwrap_or(0))
                .sum(),
        });
    }
    Ok(())
}

fn solve_cmd(c: SolveCmd) -> Result<()> {
    let kind: SolverKind = c.solver.parse()?;
    let aggregate = match c.aggregate.as_str() {
        "median" => Aggregate::Median,
        "mean" => Aggregate::Mean,
        other => return Err(Error::invalid(format!("unknown aggregate `{other}`"))),
    };
    if c.runs == 0 {
        return Err(Error::invalid("--runs must be positive"));
    }
    let seed = resolve_seed(c.seed);
    let instances = collect_instances(&c.input)?;

    let mut costs = String::from(
        "problem_id,solver,runs,median_nodes,mean_nodes,min,max,censored_runs\n",
    );
    let mut raw = String::from("problem_id,solver,run_index,seed,nodes,status\n");
    for (id, path) in &instances {
        let problem = Problem::read_from(path)?;
        if kind == SolverKind::Dynamic && problem.n() > 128 {
            return Err(Error::invalid(format!(
                "{id}: dynamic backtracking supports up to 128 variables, instance has {}",
                problem.n()
            )));
        }
        let protocol = RunProtocol {
            runs: c.runs,
            base_seed: problem_base_seed(seed, id),
            aggregate,
        };
        let outcome = run_protocol(&problem, kind, &protocol, c.node_cap);
        let _ = writeln!(
            costs,
            "{id},{},{},{},{},{},{},{}",
            kind.name(),
            c.runs,
            outcome.median_nodes,
            outcome.mean_nodes,
            outcome.min_nodes,
            outcome.max_nodes,
            outcome.censored_runs
        );
        for (i, run) in outcome.raw.iter().enumerate() {
            let status = match &run.status {
                SearchStatus::Solution(_) => "solution",
                SearchStatus::Unsolvable => "unsolvable",
                SearchStatus::Censored => "censored",
            };
            let _ = writeln!(raw, "{id},{},{i},{},{},{status}", kind.name(), run.seed, run.nodes);
        }
    }
    write_file(&c.out, &costs)?;
    if let Some(raw_out) = &c.raw_out {
        write_file(raw_out, &raw)?;
    }
    eprintln!("solved {} instances -> {}", instances.len(), c.out.display());
    Ok(())
}

fn count_cmd(c: CountCmd) -> Result<()> {
    if c.cap == Some(0) {
        return Err(Error::invalid("--cap must be positive"));
    }
    let problem = Problem::read_from(&c.input)?;
    let result = count_solutions(&problem, c.cap);
    let line = if result.capped {
        format!("{} capped\n", result.count)
    } else {
        format!("{}\n", result.count)
    };
    match &c.out {
        Some(path) => write_file(path, &line)?,
        None => print!("{line}"),
    }
    Ok(())
}

fn mus_cmd(c: MusCmd) -> Result<()> {
    if c.input.is_dir() {
        let out = c
            .out
            .as_ref()
            .ok_or_else(|| Error::invalid("--out is required when --in is a directory"))?;
        let mut csv = String::from("problem_id,m,mus_count,smallest_size,sizes\n");
        for (id, path) in collect_instances(&c.input)? {
            let problem = Problem::read_from(&path)?;
            let report = enumerate_mus(&problem)?;
            let sizes = report
                .mus_list
                .iter()
                .map(|v| v.len().to_string())
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                csv,
                "{id},{},{},{},{sizes}",
                problem.m(),
                report.count,
                report
                    .smallest_size
                    .map(|s| s.to_string())
                    .unwrap_or_default()
            );
        }
        write_file(out, &csv)?;
        eprintln!("wrote {}", out.display());
    } else {
        let problem = Problem::read_from(&c.input)?;
        let report = enumerate_mus(&problem)?;
        println!("mus_count {}", report.count);
        match report.smallest_size {
            Some(s) => println!("smallest_size {s}"),
            None => println!("smallest_size -"),
        }
        for vars in &report.mus_list {
            let joined = vars
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            println!("mus {joined}");
        }
    }
    Ok(())
}

fn color_cmd(c: ColorCmd) -> Result<()> {
    let seed = resolve_seed(c.seed);
    if let Some(dir) = &c.graphs_out {
        create_dir_all(dir)?;
    }
    let mut csv = String::from(
        "graph_id,node_count,gamma,edges,connected,status,search_nodes,seed\n",
    );
    for slot in 0..c.samples {
        let slot_seed = derive_seed(&[seed, slot as u64]);
        let mut rng = crate::seed::rng_from_seed(slot_seed);
        let graph = random_graph(c.nodes, c.gamma, &mut rng)?;
        let id = instance_id(slot);
        if let Some(dir) = &c.graphs_out {
            graph.write_to(&dir.join(format!("{id}.graph")))?;
        }
        let run_seed = derive_seed(&[slot_seed, 1]);
        let outcome = brelaz_backtrack(&graph, run_seed, Some(c.node_cap));
        let status = match &outcome.status {
            ColoringStatus::Coloring(_) => "colorable",
            ColoringStatus::Unsolvable => "uncolorable",
            ColoringStatus::Censored => "censored",
        };
        let _ = writeln!(
            csv,
            "{id},{},{},{},{},{status},{},{run_seed}",
            c.nodes,
            c.gamma,
            graph.edge_count(),
            graph.is_connected(),
            outcome.nodes
        );
    }
    write_file(&c.out, &csv)?;
    eprintln!("colored {} graphs -> {}", c.samples, c.out.display());
    Ok(())
}

fn experiment_cmd(c: ExperimentCmd) -> Result<()> {
    let mut config = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: 0,
                msg: e.to_string(),
            })?
        }
        None => {
            let preset: Preset = c
                .preset
                .as_deref()
                .ok_or_else(|| Error::invalid("--preset or --config is required"))?
                .parse()?;
            let out = c
                .out
                .clone()
                .ok_or_else(|| Error::invalid("--out is required"))?;
            let mut cfg = ExperimentConfig::new(preset, out);
            cfg.seed = resolve_seed(c.seed);
            cfg
        }
    };
    if let Some(p) = &c.preset {
        config.preset = p.parse()?;
    }
    if let Some(s) = c.scale {
        config.scale = s;
    }
    if c.paper_scale {
        config.scale = 1.0;
    }
    if let Some(s) = c.seed {
        config.seed = s;
    }
    if let Some(o) = &c.out {
        config.out_dir = o.clone();
    }
    if let Some(n) = c.node_cap {
        config.node_cap = Some(n);
    }
    if let Some(a) = c.max_attempts {
        config.max_attempts = a;
    }
    if c.long {
        config.include_long_running = true;
    }
    if let Some(w) = c.workers {
        config.workers = Some(w);
    }
    let points = run_experiment(&config)?;
    eprintln!(
        "{} points -> {}",
        points.len(),
        config.out_dir.join("results.csv").display()
    );
    Ok(())
}

fn analyze_cmd(c: AnalyzeCmd) -> Result<()> {
    let point = analyze_point(&c.input)?;
    let rendered = render_results(std::slice::from_ref(&point), EmitFormat::Csv);
    match &c.out {
        Some(path) => {
            write_file(path, &rendered)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
