//! Subcommands behind the `aos` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aos_core::bench::{make_problem, Problem};
use aos_core::config::{all_component_tuples, ComponentTuple};
use aos_core::engine::{run_with, DeParams, RunOptions, RunResult};
use aos_core::metrics::OffspringMetric;
use aos_core::policy::{ProbabilityKind, QualityKind, SelectionKind};
use aos_core::presets;
use aos_core::reward::RewardKind;
use aos_core::rng::mix_seed;
use aos_core::tuner::{self, CostKind, ParameterSpace, RaceBudget, TuneOptions};
use aos_core::AosConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{AppError, AppResult};
use crate::files::{self, ConfigFile, Manifest, ProblemSpec};
use crate::perf::{self, RunSummary, TargetGrid};

#[derive(Parser, Debug)]
#[command(
    name = "aos",
    version,
    about = "Adaptive operator selection for differential evolution"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one method on one problem.
    Run(RunArgs),
    /// Smoke-run every component combination.
    Enumerate(EnumerateArgs),
    /// Run a preset over a problem set and several seeds.
    Replicate(ReplicateArgs),
    /// Tune a method by iterated racing.
    Tune(TuneArgs),
    /// Empirical cumulative distribution of targets reached per budget.
    Ecdf(EcdfArgs),
    /// Average running time per target.
    Art(ArtArgs),
    /// Aggregate a trace into blocks of generations.
    Trace(TraceArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    /// Configuration JSON file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named preset from the catalog.
    #[arg(long)]
    pub preset: Option<String>,
}

impl MethodArgs {
    fn load(&self) -> AppResult<ConfigFile> {
        match (&self.config, &self.preset) {
            (Some(path), _) => files::load_config(path),
            (None, Some(name)) => {
                let (aos, de) = presets::preset(name)?;
                Ok(ConfigFile { aos, de })
            }
            (None, None) => Err(AppError::Usage("one of --config or --preset is required".into())),
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 1)]
    pub function: u32,
    #[arg(long, default_value_t = 1)]
    pub instance: u32,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Evaluation budget; defaults to 10^4 per dimension.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Trace CSV output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary JSON output; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    #[arg(long, default_value_t = 5)]
    pub generations: u64,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub np: usize,
    #[arg(long, default_value_t = 1)]
    pub function: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Restrict one component, e.g. `reward=Auc`. Repeatable.
    #[arg(long = "component", value_name = "KEY=VALUE")]
    pub components: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Report CSV; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    /// Manifest JSON listing the problems.
    #[arg(long, conflicts_with = "functions")]
    pub manifest: Option<PathBuf>,
    /// Comma-separated function ids, used with --dim and --instance.
    #[arg(long, value_delimiter = ',')]
    pub functions: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    pub instance: u32,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 15)]
    pub runs: u64,
    #[arg(long, default_value_t = 10_000)]
    pub budget_per_dim: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Summaries JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CostArg {
    Precision,
    Fitness,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// Parameter space JSON; the full default space when absent.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Training manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub total_runs: usize,
    #[arg(long, default_value_t = 5)]
    pub min_instances: usize,
    #[arg(long, default_value_t = 1)]
    pub survivors_floor: usize,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 1000)]
    pub budget_per_dim: u64,
    #[arg(long, value_enum, default_value_t = CostArg::Precision)]
    pub cost: CostArg,
    /// Race the four tuned presets in the first iteration.
    #[arg(long)]
    pub starting_presets: bool,
    /// Extra starting configuration files.
    #[arg(long = "start")]
    pub start: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Winning configuration JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Tuning log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EcdfArgs {
    /// Summaries JSON files.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// ECDF CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ArtArgs {
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    /// Simulated-restart samples per target; 0 disables.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Trace CSV written by `run`.
    pub input: PathBuf,
    /// Generations per block.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> AppResult<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Enumerate(a) => cmd_enumerate(a, stdout),
        Command::Replicate(a) => cmd_replicate(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Ecdf(a) => cmd_ecdf(a, stdout),
        Command::Art(a) => cmd_art(a, stdout),
        Command::Trace(a) => cmd_trace(a, stdout),
    }
}

fn parallel_pool(n: usize) -> AppResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| AppError::Usage(format!("thread pool: {e}")))
}

fn emit(path: Option<&Path>, stdout: &mut dyn Write, text: &str) -> AppResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| AppError::io("<stdout>", e)),
    }
}

fn label(p: &Problem) -> String {
    format!("f{}_i{}_d{}", p.function_id, p.instance_id, p.dim)
}

/// Runs one method and condenses the result for post-processing.
pub fn summarise(p: &Problem, result: &RunResult, budget: u64, seed: u64) -> RunSummary {
    RunSummary {
        problem: label(p),
        seed,
        best_fitness: result.best_fitness,
        precision: result.best_fitness - p.f_opt,
        evaluations: result.evaluations_used,
        budget,
        targets_hit: perf::hits_from_improvements(&result.improvements, p.f_opt, &TargetGrid::default()),
    }
}

fn summary_json(s: &RunSummary) -> String {
    let mut t = serde_json::to_string_pretty(s).expect("summary serialises");
    t.push('\n');
    t
}

fn cmd_run(a: RunArgs, stdout: &mut dyn Write) -> AppResult<()> {
    let method = a.method.load()?;
    let problem = make_problem(a.function, a.instance, a.dim)?;
    let budget = a.budget.unwrap_or(10_000 * a.dim as u64);
    let options = RunOptions {
        target_precision: Some(aos_core::engine::TARGET_PRECISION),
        record_trace: a.trace.is_some(),
    };
    let result = run_with(&problem, &method.de, &method.aos, budget, a.seed, &options)?;
    if let Some(path) = &a.trace {
        let file = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
        files::write_trace(
            std::io::BufWriter::new(file),
            &result.trace,
            method.aos.operator_count(),
            path,
        )?;
    }
    let summary = summarise(&problem, &result, budget, a.seed);
    emit(a.summary.as_deref(), stdout, &summary_json(&summary))
}

fn parse_restriction(spec: &str) -> AppResult<(String, usize)> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| AppError::Usage(format!("component restriction {spec:?} is not KEY=VALUE")))?;
    let names: Vec<&str> = match key {
        "om" | "metric" => OffspringMetric::ALL.iter().map(|m| m.name()).collect(),
        "reward" => RewardKind::ALL.iter().map(|m| m.name()).collect(),
        "quality" => QualityKind::ALL.iter().map(|m| m.name()).collect(),
        "probability" => ProbabilityKind::ALL.iter().map(|m| m.name()).collect(),
        "selection" => SelectionKind::ALL.iter().map(|m| m.name()).collect(),
        _ => return Err(AppError::Usage(format!("unknown component {key:?}"))),
    };
    let index = names
        .iter()
        .position(|n| n.eq_ignore_ascii_case(value))
        .or_else(|| value.parse::<usize>().ok().filter(|&i| i < names.len()))
        .ok_or_else(|| AppError::Usage(format!("unknown {key} {value:?}; expected one of {names:?}")))?;
    let key = if key == "metric" { "om" } else { key };
    Ok((key.to_string(), index))
}

fn tuple_matches(t: &ComponentTuple, key: &str, index: usize) -> bool {
    match key {
        "om" => t.metric.index() == index,
        "reward" => t.reward.index() == index,
        "quality" => t.quality.index() == index,
        "probability" => t.probability.index() == index,
        _ => t.selection.index() == index,
    }
}

/// Component tuples left after the `KEY=VALUE` restrictions.
pub fn restricted_tuples(restrictions: &[String]) -> AppResult<Vec<ComponentTuple>> {
    let parsed = restrictions
        .iter()
        .map(|r| parse_restriction(r))
        .collect::<AppResult<Vec<_>>>()?;
    Ok(all_component_tuples()
        .into_iter()
        .filter(|t| parsed.iter().all(|(k, i)| tuple_matches(t, k, *i)))
        .collect())
}

/// Smoke-runs one combination, checking every generation's probability
/// vector is a distribution.
pub fn smoke_run(t: ComponentTuple, problem: &Problem, np: usize, generations: u64, seed: u64) -> Result<(), String> {
    let aos = AosConfig::from_components(t);
    let de = DeParams {
        np,
        ..DeParams::default()
    };
    let options = RunOptions {
        target_precision: None,
        record_trace: true,
    };
    let budget = np as u64 * (generations + 1);
    let r = run_with(problem, &de, &aos, budget, seed, &options).map_err(|e| e.to_string())?;
    if r.generations as u64 != generations {
        return Err(format!("ran {} generations", r.generations));
    }
    for row in &r.trace.rows {
        let sum: f64 = row.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.probabilities.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(format!(
                "generation {}: probabilities {:?}",
                row.generation, row.probabilities
            ));
        }
    }
    Ok(())
}

fn cmd_enumerate(a: EnumerateArgs, stdout: &mut dyn Write) -> AppResult<()> {
    let tuples = restricted_tuples(&a.components)?;
    let problem = make_problem(a.function, 1, a.dim)?;
    let pool = parallel_pool(a.parallel)?;
    let outcomes: Vec<Result<(), String>> = pool.install(|| {
        tuples
            .par_iter()
            .map(|&t| smoke_run(t, &problem, a.np, a.generations, a.seed))
            .collect()
    });
    let mut report = String::from("om,reward,quality,probability,selection,status,detail\n");
    let mut failed = 0;
    for (t, o) in tuples.iter().zip(&outcomes) {
        let (status, detail) = match o {
            Ok(()) => ("pass", String::new()),
            Err(e) => {
                failed += 1;
                ("fail", e.replace(['"', ','], " "))
            }
        };
        report.push_str(&format!(
            "{},{},{},{},{},{status},{detail}\n",
            t.metric.name(),
            t.reward.name(),
            t.quality.name(),
            t.probability.name(),
            t.selection.name()
        ));
    }
    emit(a.report.as_deref(), stdout, &report)?;
    eprintln!("{} combinations attempted, {failed} failed", tuples.len());
    if failed > 0 {
        return Err(AppError::Failures {
            failed,
            total: tuples.len(),
        });
    }
    Ok(())
}

fn manifest_problems(specs: &[ProblemSpec]) -> AppResult<Vec<Problem>> {
    specs
        .iter()
        .map(|s| make_problem(s.function, s.instance, s.dim).map_err(AppError::from))
        .collect()
}

fn cmd_replicate(a: ReplicateArgs) -> AppResult<()> {
    let method = a.method.load()?;
    let problems = match &a.manifest {
        Some(path) => manifest_problems(&files::read_json::<Manifest>(path)?.problems)?,
        None if !a.functions.is_empty() => a
            .functions
            .iter()
            .map(|&f| make_problem(f, a.instance, a.dim).map_err(AppError::from))
            .collect::<AppResult<Vec<_>>>()?,
        None => return Err(AppError::Usage("one of --manifest or --functions is required".into())),
    };
    let jobs: Vec<(usize, u64)> = (0..problems.len())
        .flat_map(|p| (0..a.runs).map(move |r| (p, r)))
        .collect();
    let pool = parallel_pool(a.parallel)?;
    let results: Vec<Result<RunSummary, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(pi, r)| {
                let p = &problems[pi];
                let budget = a.budget_per_dim * p.dim as u64;
                let seed = mix_seed(&[a.seed, p.function_id as u64, p.instance_id as u64, p.dim as u64, r]);
                let options = RunOptions {
                    target_precision: Some(aos_core::engine::TARGET_PRECISION),
                    record_trace: false,
                };
                run_with(p, &method.de, &method.aos, budget, seed, &options)
                    .map(|res| summarise(p, &res, budget, seed))
                    .map_err(|e| format!("{} seed {seed}: {e}", label(p)))
            })
            .collect()
    });
    let mut summaries = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(e) => {
                eprintln!("{e}");
                failed += 1;
            }
        }
    }
    files::write_json(&a.out, &summaries)?;
    if failed > 0 {
        return Err(AppError::Failures {
            failed,
            total: jobs.len(),
        });
    }
    Ok(())
}

fn cmd_tune(a: TuneArgs) -> AppResult<()> {
    let space = match &a.space {
        Some(p) => files::load_space(p)?,
        None => ParameterSpace::default(),
    };
    let manifest: Manifest = files::read_json(&a.manifest)?;
    let train = manifest_problems(&manifest.problems)?;
    let mut starting = Vec::new();
    if a.starting_presets {
        starting.extend(tuner::starting_configurations());
    }
    for path in &a.start {
        let c = files::load_config(path)?;
        starting.push((c.aos, c.de));
    }
    let options = TuneOptions {
        budget: RaceBudget {
            total_runs: a.total_runs,
            min_instances: a.min_instances,
            survivors_floor: a.survivors_floor,
            margin: a.margin,
        },
        ..TuneOptions::default()
    };
    let cost = match a.cost {
        CostArg::Precision => CostKind::Precision,
        CostArg::Fitness => CostKind::BestFitness,
    };
    // starting configurations double as the base for unlisted parameters
    let base = starting.first().cloned().unwrap_or_else(tuner::default_base);
    let outcome = tuner::tune_problems(
        &space,
        &train,
        a.budget_per_dim,
        &starting,
        &base,
        &options,
        cost,
        a.seed,
    )?;
    if let Some(log) = &a.log {
        files::write_tuning_log(log, &outcome.log)?;
    }
    eprintln!(
        "winner: candidate {} ({} runs over {} iterations)",
        outcome.best.id, outcome.runs_used, outcome.iterations
    );
    files::write_json(
        &a.out,
        &ConfigFile {
            aos: outcome.best.aos,
            de: outcome.best.de,
        },
    )
}

fn load_all_summaries(paths: &[PathBuf]) -> AppResult<Vec<RunSummary>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(files::load_summaries(p)?);
    }
    Ok(all)
}

fn cmd_ecdf(a: EcdfArgs, stdout: &mut dyn Write) -> AppResult<()> {
    let summaries = load_all_summaries(&a.summaries)?;
    if summaries.is_empty() {
        eprintln!("warning: no runs in input; empty table");
    }
    let max_budget = summaries.iter().map(|s| s.budget).max().unwrap_or(1);
    let table = perf::compute_ecdf(&summaries, &perf::log_budgets(max_budget, a.points));
    let mut text = String::from("budget,fraction\n");
    for (b, f) in table {
        text.push_str(&format!("{b},{f}\n"));
    }
    emit(a.out.as_deref(), stdout, &text)
}

fn cmd_art(a: ArtArgs, stdout: &mut dyn Write) -> AppResult<()> {
    let summaries = load_all_summaries(&a.summaries)?;
    if summaries.is_empty() {
        return Err(AppError::Usage("aRT needs at least one run".into()));
    }
    let grid = TargetGrid::default();
    let mut text = String::from(if a.bootstrap > 0 {
        "target,art,bootstrap_mean\n"
    } else {
        "target,art\n"
    });
    for (i, t) in grid.targets.iter().enumerate() {
        let art = perf::compute_art(&summaries, i);
        // infinity is written as an empty field
        let art_field = if art.is_finite() {
            art.to_string()
        } else {
            String::new()
        };
        text.push_str(&format!("{t},{art_field}"));
        if a.bootstrap > 0 {
            let boot = perf::bootstrap_runtimes(&summaries, i, a.bootstrap, mix_seed(&[a.seed, i as u64]))
                .map(|r| (r.iter().sum::<f64>() / r.len() as f64).to_string())
                .unwrap_or_default();
            text.push_str(&format!(",{boot}"));
        }
        text.push('\n');
    }
    emit(a.out.as_deref(), stdout, &text)
}

fn cmd_trace(a: TraceArgs, stdout: &mut dyn Write) -> AppResult<()> {
    if a.every == 0 {
        return Err(AppError::Usage("--every must be at least 1".into()));
    }
    let (header, rows) = files::read_trace(&a.input)?;
    let k = header.iter().filter(|h| h.starts_with("app_op")).count();
    if header.len() != 3 + 2 * k {
        return Err(AppError::Usage(format!("{}: not a trace file", a.input.display())));
    }
    let mut text = String::from("first_generation,last_generation,evals,best_f");
    for i in 0..k {
        text.push_str(&format!(",app_op{i}"));
    }
    text.push('\n');
    for block in rows.chunks(a.every) {
        let last = block.last().expect("non-empty chunk");
        text.push_str(&format!("{},{},{},{}", block[0][0], last[0], last[1], last[2]));
        for i in 0..k {
            let total: f64 = block.iter().map(|r| r[3 + i]).sum();
            text.push_str(&format!(",{total}"));
        }
        text.push('\n');
    }
    emit(a.out.as_deref(), stdout, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restriction_counts() {
        assert_eq!(restricted_tuples(&[]).unwrap().len(), 5400);
        assert_eq!(restricted_tuples(&["reward=AUC".into()]).unwrap().len(), 450);
        assert_eq!(
            restricted_tuples(&["reward=Auc".into(), "selection=greedy".into()])
                .unwrap()
                .len(),
            90
        );
        assert!(restricted_tuples(&["colour=red".into()]).is_err());
        assert!(restricted_tuples(&["reward=Nope".into()]).is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
