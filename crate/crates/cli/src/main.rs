//! `rlpass`: generate circuit datasets, train pass-scheduling policies,
//! deploy them, run search baselines, and verify results.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
//! malformed files, failed generation or training), 3 verification failure.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use rlpass_agent::checkpoint::{
    config_hash, load_checkpoint, save_checkpoint, CheckpointInfo, LoadedCheckpoint,
};
use rlpass_agent::{
    beam_search, deploy_optimize, greedy_search, train, ArchConfig, BeamConfig, PpoConfig,
};
use rlpass_core::format::{read_circuit_file, read_dataset, serialize_record, CircuitRecord};
use rlpass_core::gen::{make_dataset, CircuitClass, GenSpec};
use rlpass_core::rebase::rebase;
use rlpass_core::unitary::check_equivalence;
use rlpass_core::{apply_pass, Action, Circuit, CoreError};

#[derive(Parser)]
#[command(
    name = "rlpass",
    version,
    about = "Reinforcement-learned scheduling of quantum circuit optimisation passes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a JSONL circuit dataset plus a manifest
    Gen(GenArgs),
    /// Train a policy on a dataset and save a checkpoint
    Train(TrainArgs),
    /// Optimise one circuit file with a trained policy
    Optimize(OptimizeArgs),
    /// Optimise one circuit file with a search or fixed-sequence baseline
    Baseline(BaselineArgs),
    /// Evaluate a policy or baseline over a dataset into a CSV report
    Eval(EvalArgs),
    /// Check that two circuit files implement the same unitary
    Verify(VerifyArgs),
    /// Print mean/median cumulative reward of an eval report
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output dataset path (.jsonl); a .manifest.json lands next to it
    #[arg(long)]
    out: PathBuf,
    /// Total number of circuits, cycled round-robin over the classes
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Comma-separated class names (default: all eight)
    #[arg(long)]
    classes: Option<String>,
    #[arg(long, default_value_t = 3)]
    min_qubits: usize,
    #[arg(long, default_value_t = 7)]
    max_qubits: usize,
    /// Override the class-default size range (lower bound)
    #[arg(long)]
    min_size: Option<usize>,
    /// Override the class-default size range (upper bound)
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset (.jsonl)
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint output path
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV training curve
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lam: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    entropy_coef: Option<f64>,
    #[arg(long)]
    vf_coef: Option<f64>,
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long)]
    action_penalty: Option<f64>,
    #[arg(long)]
    n_envs: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    no_improve_limit: Option<usize>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    validation_size: Option<usize>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Checkpoint produced by `rlpass train`
    #[arg(long)]
    model: PathBuf,
    /// Input circuit file (JSON)
    #[arg(long)]
    circuit: PathBuf,
    /// Optimised circuit output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print applied pass names in order, then the termination reason
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = 3)]
    no_improve_limit: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Input circuit file (JSON)
    #[arg(long)]
    circuit: PathBuf,
    /// Optimised circuit output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Search method: greedy | beam
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
    /// Comma-separated pass names applied once each, in order
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset to evaluate (.jsonl)
    #[arg(long)]
    data: PathBuf,
    /// CSV report output path
    #[arg(long)]
    out: PathBuf,
    /// Checkpoint to deploy (mutually exclusive with --method/--sequence)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Search method: greedy | beam
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
    /// Comma-separated pass names applied once each, in order
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long, default_value_t = 3)]
    no_improve_limit: usize,
    /// Evaluate only the first N circuits
    #[arg(long)]
    limit: Option<usize>,
    /// Write 0.000 into wall_time_ms for byte-reproducible reports
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reference circuit file
    a: PathBuf,
    /// Candidate circuit file
    b: PathBuf,
    /// Phase-invariant distance threshold
    #[arg(long, default_value_t = rlpass_core::tol::VERIFY_DISTANCE)]
    tol: f64,
}

#[derive(Args)]
struct SummarizeArgs {
    /// CSV report produced by `rlpass eval`
    #[arg(long)]
    report: PathBuf,
}

/// Marker for errors in argument values that clap cannot catch itself.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads() {
        // Ignore the error if a pool already exists (tests call run() twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

impl Cli {
    fn threads(&self) -> Option<usize> {
        match &self.cmd {
            Cmd::Train(a) => a.threads,
            Cmd::Optimize(a) => a.threads,
            Cmd::Baseline(a) => a.threads,
            Cmd::Eval(a) => a.threads,
            _ => None,
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Train(args) => cmd_train(args),
        Cmd::Optimize(args) => cmd_optimize(args),
        Cmd::Baseline(args) => cmd_baseline(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Summarize(args) => cmd_summarize(args),
    }
}

fn parse_classes(spec: Option<&str>) -> Result<Vec<CircuitClass>> {
    match spec {
        None => Ok(CircuitClass::ALL.to_vec()),
        Some(s) => s
            .split(',')
            .map(|name| {
                let name = name.trim();
                CircuitClass::from_name(name).ok_or_else(|| {
                    usage(format!(
                        "unknown circuit class {name:?}; known classes: {}",
                        CircuitClass::ALL.map(|c| c.name()).join(", ")
                    ))
                })
            })
            .collect(),
    }
}

fn parse_sequence(spec: &str) -> Result<Vec<Action>> {
    spec.split([',', ';'])
        .map(|name| {
            let name = name.trim();
            Action::from_name(name).ok_or_else(|| {
                usage(format!(
                    "unknown pass name {name:?}; registered passes: {}",
                    Action::ALL.map(|a| a.name()).join(", ")
                ))
            })
        })
        .collect()
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let classes = parse_classes(args.classes.as_deref())?;
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let mut specs = Vec::with_capacity(classes.len());
    for (i, &class) in classes.iter().enumerate() {
        let share = args.count / classes.len() + usize::from(i < args.count % classes.len());
        let mut spec = GenSpec::training_default(class, args.seed, share);
        spec.qubits = (args.min_qubits, args.max_qubits);
        if let Some(lo) = args.min_size {
            spec.size.0 = lo;
        }
        if let Some(hi) = args.max_size {
            spec.size.1 = hi;
        }
        specs.push(spec);
    }
    let manifest = make_dataset(&specs, &args.out)
        .with_context(|| format!("generating {}", args.out.display()))?;
    println!(
        "wrote {} circuits ({} train / {} validation) to {}",
        manifest.total,
        manifest.train_count,
        manifest.validation_count,
        args.out.display()
    );
    Ok(0)
}

fn build_ppo_config(args: &TrainArgs) -> PpoConfig {
    let mut c = PpoConfig::default();
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { c.$field = v; })*
        };
    }
    set!(
        lr, n_steps, batch_size, epochs, gamma, lam, clip, entropy_coef, vf_coef, grad_clip,
        action_penalty, n_envs, max_steps, no_improve_limit, eval_interval, patience,
        validation_size
    );
    c
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let records = read_dataset(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let arch = ArchConfig { hidden: args.hidden, layers: args.layers, n_actions: Action::COUNT };
    let config = build_ppo_config(&args);
    let outcome = train(arch, &config, &records, args.seed).context("training failed")?;
    let info = CheckpointInfo {
        config_hash: config_hash(&(&arch, &config)),
        seed: args.seed,
        validation_score: outcome.validation_score,
    };
    save_checkpoint(&args.out, &outcome.params, &info)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(log_path) = &args.log {
        let mut w = csv::Writer::from_path(log_path)
            .with_context(|| format!("writing {}", log_path.display()))?;
        w.write_record([
            "step",
            "mean_episode_reward",
            "validation_reward",
            "policy_loss",
            "value_loss",
            "entropy",
        ])?;
        for p in &outcome.log {
            w.write_record([
                p.step.to_string(),
                p.mean_episode_reward.to_string(),
                p.validation_reward.to_string(),
                p.policy_loss.to_string(),
                p.value_loss.to_string(),
                p.entropy.to_string(),
            ])?;
        }
        w.flush()?;
    }
    println!(
        "trained for {} env steps; best validation reward {:.6}; checkpoint {}",
        outcome.steps_taken,
        outcome.validation_score,
        args.out.display()
    );
    Ok(0)
}

fn write_output_circuit(
    out: Option<&PathBuf>,
    circuit: &Circuit,
    record: &CircuitRecord,
) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, serialize_record(circuit, &record.metadata) + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_optimize(args: OptimizeArgs) -> Result<i32> {
    let ckpt = load_checkpoint(&args.model)
        .with_context(|| format!("loading {}", args.model.display()))?;
    let record = read_circuit_file(&args.circuit)
        .with_context(|| format!("reading {}", args.circuit.display()))?;
    let (optimised, trace) =
        deploy_optimize(&ckpt.params, &record.circuit, args.no_improve_limit)?;
    if args.trace {
        for step in &trace.steps {
            println!("{}", step.action.name());
        }
        println!("terminated: {}", trace.termination);
    }
    println!(
        "two-qubit gates: {} -> {} (cumulative reward {:.6})",
        trace.n0, trace.n_final, trace.cumulative_reward
    );
    write_output_circuit(args.out.as_ref(), &optimised, &record)?;
    Ok(0)
}

/// How eval / baseline turn an input circuit into an optimised one.
enum Engine {
    Model(Box<LoadedCheckpoint>),
    Greedy,
    Beam(BeamConfig),
    Sequence(Vec<Action>),
}

impl Engine {
    fn describe(&self) -> String {
        match self {
            Engine::Model(ckpt) => format!("model (seed {})", ckpt.info.seed),
            Engine::Greedy => "greedy".to_string(),
            Engine::Beam(cfg) => format!("beam (depth {}, width {})", cfg.depth, cfg.width),
            Engine::Sequence(seq) => format!(
                "sequence ({})",
                seq.iter().map(|a| a.name()).collect::<Vec<_>>().join(";")
            ),
        }
    }

    /// Returns the optimised circuit and the names of the passes applied.
    fn run(&self, circuit: &Circuit, no_improve_limit: usize) -> Result<(Circuit, Vec<String>)> {
        match self {
            Engine::Model(ckpt) => {
                let (out, trace) = deploy_optimize(&ckpt.params, circuit, no_improve_limit)?;
                let names =
                    trace.steps.iter().map(|s| s.action.name().to_string()).collect();
                Ok((out, names))
            }
            Engine::Greedy => {
                let (out, action) = greedy_search(&rebase(circuit));
                Ok((out, vec![action.name().to_string()]))
            }
            Engine::Beam(cfg) => {
                let (out, path) = beam_search(&rebase(circuit), cfg);
                Ok((out, path.iter().map(|a| a.name().to_string()).collect()))
            }
            Engine::Sequence(seq) => {
                let mut c = rebase(circuit);
                let mut names = Vec::with_capacity(seq.len());
                for &action in seq {
                    c = apply_pass(action, &c).circuit;
                    names.push(action.name().to_string());
                }
                Ok((c, names))
            }
        }
    }
}

fn resolve_engine(
    model: Option<&PathBuf>,
    method: Option<&str>,
    depth: usize,
    width: usize,
    sequence: Option<&str>,
) -> Result<Engine> {
    let picked =
        usize::from(model.is_some()) + usize::from(method.is_some()) + usize::from(sequence.is_some());
    if picked > 1 {
        return Err(usage("--model, --method and --sequence are mutually exclusive"));
    }
    if let Some(path) = model {
        let ckpt =
            load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(Engine::Model(Box::new(ckpt)));
    }
    if let Some(seq) = sequence {
        return Ok(Engine::Sequence(parse_sequence(seq)?));
    }
    match method {
        Some("greedy") => Ok(Engine::Greedy),
        Some("beam") => {
            if depth == 0 || width == 0 {
                return Err(usage("--depth and --width must be at least 1"));
            }
            Ok(Engine::Beam(BeamConfig::new(depth, width)))
        }
        Some(other) => Err(usage(format!(
            "unknown method {other:?}; expected \"greedy\" or \"beam\""
        ))),
        None => Err(usage("pick an engine: --model, --method, or --sequence")),
    }
}

fn cmd_baseline(args: BaselineArgs) -> Result<i32> {
    let engine = resolve_engine(
        None,
        args.method.as_deref(),
        args.depth,
        args.width,
        args.sequence.as_deref(),
    )?;
    let record = read_circuit_file(&args.circuit)
        .with_context(|| format!("reading {}", args.circuit.display()))?;
    let n0 = rebase(&record.circuit).two_qubit_count();
    let (optimised, names) = engine.run(&record.circuit, 3)?;
    println!("passes: {}", names.join(";"));
    println!("two-qubit gates: {} -> {}", n0, optimised.two_qubit_count());
    write_output_circuit(args.out.as_ref(), &optimised, &record)?;
    Ok(0)
}

struct ReportRow {
    circuit_id: usize,
    class: String,
    n_qubits: usize,
    n0: usize,
    n_final: usize,
    cumulative_reward: f64,
    passes_applied: String,
    wall_time_ms: f64,
}

const REPORT_HEADER: [&str; 8] = [
    "circuit_id",
    "class",
    "n_qubits",
    "n0",
    "n_final",
    "cumulative_reward",
    "passes_applied",
    "wall_time_ms",
];

fn evaluate_record(
    id: usize,
    record: &CircuitRecord,
    engine: &Engine,
    no_improve_limit: usize,
    no_timing: bool,
) -> Result<ReportRow> {
    let n0 = rebase(&record.circuit).two_qubit_count();
    let started = Instant::now();
    let (optimised, names) = engine.run(&record.circuit, no_improve_limit)?;
    let wall_time_ms = if no_timing {
        0.0
    } else {
        started.elapsed().as_secs_f64() * 1e3
    };
    let n_final = optimised.two_qubit_count();
    let cumulative_reward = if n0 == 0 {
        0.0
    } else {
        (n0 as f64 - n_final as f64) / n0 as f64
    };
    Ok(ReportRow {
        circuit_id: id,
        class: record.metadata.class.clone().unwrap_or_default(),
        n_qubits: record.circuit.n_qubits(),
        n0,
        n_final,
        cumulative_reward,
        passes_applied: names.join(";"),
        wall_time_ms,
    })
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let engine = resolve_engine(
        args.model.as_ref(),
        args.method.as_deref(),
        args.depth,
        args.width,
        args.sequence.as_deref(),
    )?;
    let mut records = read_dataset(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    if let Some(limit) = args.limit {
        records.truncate(limit);
    }
    // Parallel map keeps input order; the single writer below serialises rows.
    let rows: Vec<ReportRow> = records
        .par_iter()
        .enumerate()
        .map(|(id, record)| evaluate_record(id, record, &engine, args.no_improve_limit, args.no_timing))
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    w.write_record(REPORT_HEADER)?;
    for row in &rows {
        w.write_record([
            row.circuit_id.to_string(),
            row.class.clone(),
            row.n_qubits.to_string(),
            row.n0.to_string(),
            row.n_final.to_string(),
            row.cumulative_reward.to_string(),
            row.passes_applied.clone(),
            format!("{:.3}", row.wall_time_ms),
        ])?;
    }
    w.flush()?;
    let rewards: Vec<f64> = rows.iter().map(|r| r.cumulative_reward).collect();
    let (mean, median) = mean_median(&rewards);
    println!(
        "evaluated {} circuits with {}: cumulative_reward mean={:.6} median={:.6}",
        rows.len(),
        engine.describe(),
        mean,
        median
    );
    Ok(0)
}

fn mean_median(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    (mean, median)
}

fn cmd_summarize(args: SummarizeArgs) -> Result<i32> {
    let mut reader = csv::Reader::from_path(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "cumulative_reward")
        .ok_or_else(|| anyhow::anyhow!("report has no cumulative_reward column"))?;
    let mut rewards = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = row
            .get(col)
            .ok_or_else(|| anyhow::anyhow!("short row in report"))?;
        rewards.push(field.parse::<f64>().context("bad cumulative_reward value")?);
    }
    let (mean, median) = mean_median(&rewards);
    println!("rows={} mean={:.6} median={:.6}", rewards.len(), mean, median);
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let a = read_circuit_file(&args.a)
        .with_context(|| format!("reading {}", args.a.display()))?;
    let b = read_circuit_file(&args.b)
        .with_context(|| format!("reading {}", args.b.display()))?;
    match check_equivalence(&a.circuit, &b.circuit, args.tol) {
        Ok(eq) if eq.equivalent => {
            println!("equivalent, distance < {:e}", args.tol);
            Ok(0)
        }
        Ok(eq) => {
            println!("not equivalent, distance = {:.3e}", eq.distance);
            Ok(3)
        }
        Err(CoreError::QubitCountMismatch { a, b }) => {
            println!("not equivalent, qubit counts differ ({a} vs {b})");
            Ok(3)
        }
        Err(e) => Err(e).context("equivalence check failed"),
    }
}
