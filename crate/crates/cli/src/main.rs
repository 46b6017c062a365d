use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use bhtp_core::bench::{
    capacity_error, emit_results, even_baseline, run_benchmark, supplied_from_plan, BenchConfig,
};
use bhtp_core::dp2::dp2_full;
use bhtp_core::exact::{solve_exact, SolveOptions, SolveStatus};
use bhtp_core::io::{load_instance, load_plan, save_instance, save_plan, CycleFile};
use bhtp_core::schedule::{rescale_to_slots, scale_to_cycle};
use bhtp_core::testbed::{build_scene, trial_table, GainModel, Quantizer, TestbedSpec};
use bhtp_core::{check_feasible, ConstraintSet, CycleConfig, ModelError};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bhtp",
    version,
    about = "Beam-hopping time-plan construction and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a benchmark trial.
    Gen(GenArgs),
    /// Power-of-two decomposition of an instance.
    Dp2(Dp2Args),
    /// Minimum pattern count by exhaustive search.
    Exact(ExactArgs),
    /// Scale a plan's weights to the cycle.
    Schedule(ScheduleArgs),
    /// Capacity metrics of a plan against an instance.
    Eval(EvalArgs),
    /// Run the benchmark matrix.
    Bench(BenchArgs),
    /// Print the trial table.
    Trials(TrialsArgs),
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Limits {
    /// Forbid adjacent beams in one pattern.
    #[arg(long)]
    interference: bool,
    /// Most beams lit per pattern.
    #[arg(long)]
    nmax: Option<usize>,
}

impl Limits {
    fn constraints(&self) -> ConstraintSet {
        ConstraintSet {
            n_max: self.nmax,
            interference: self.interference,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gain {
    Flat,
    Taper,
}

#[derive(Args)]
struct GenArgs {
    /// Trial row, 1 to 8.
    #[arg(long)]
    trial: usize,
    #[arg(long)]
    beams: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Demand units per Mbps.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, value_enum, default_value_t = Gain::Flat)]
    gain: Gain,
    /// Also write the scene (layout, users, assignment).
    #[arg(long)]
    scene: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Dp2Args {
    instance: PathBuf,
    #[command(flatten)]
    limits: Limits,
    /// Write the run report here; otherwise it goes to stderr.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ExactArgs {
    instance: PathBuf,
    #[command(flatten)]
    limits: Limits,
    #[arg(long)]
    time_limit_ms: Option<u64>,
    /// Start from a plan file, or from the power-of-two plan when no file
    /// is given.
    #[arg(long, num_args = 0..=1, value_name = "PLAN")]
    warm_start: Option<Option<PathBuf>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ScheduleArgs {
    plan: PathBuf,
    #[arg(long)]
    slots: Option<u32>,
    #[arg(long)]
    sf_ms: Option<f64>,
    #[arg(long)]
    min_granularity_ms: Option<f64>,
    #[arg(long)]
    switching_ms: Option<f64>,
    /// Rescale to the slot count even when the weights already fit.
    #[arg(long)]
    force_rescale: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EvalArgs {
    plan: PathBuf,
    instance: PathBuf,
    #[command(flatten)]
    limits: Limits,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON config; the standard matrix when omitted.
    config: Option<PathBuf>,
    /// Run only this trial.
    #[arg(long)]
    trial: Option<usize>,
    /// Run only this beam count.
    #[arg(long)]
    beams: Option<usize>,
    /// Run only this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TrialsArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Usage(String),
    Validation(String),
    Timeout,
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(output: &Output, bytes: &[u8]) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Usage(format!("cannot write to stdout: {e}"))),
    }
}

fn pretty(value: &impl serde::Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

fn gen(args: &GenArgs) -> Result<(), Failure> {
    let spec = TestbedSpec::for_trial(args.trial, args.beams, args.seed)
        .ok_or_else(|| Failure::Usage(format!("no trial {}, expected 1..=8", args.trial)))?;
    let gain_model = match args.gain {
        Gain::Flat => GainModel::Flat,
        Gain::Taper => GainModel::Taper,
    };
    let spec = TestbedSpec { gain_model, ..spec };
    let scene = build_scene(&spec)?;
    let inst = scene.to_instance(CycleConfig::default(), Quantizer { scale: args.scale })?;
    if let Some(path) = &args.scene {
        write(
            &Output {
                out: Some(path.clone()),
            },
            &pretty(&scene),
        )?;
    }
    write(&args.output, &save_instance(&inst))
}

fn dp2(args: &Dp2Args) -> Result<(), Failure> {
    let inst = load_instance(&read(&args.instance)?)?;
    let (plan, report) = dp2_full(&inst, &args.limits.constraints())?;
    let report = pretty(&report);
    match &args.report {
        Some(path) => write(
            &Output {
                out: Some(path.clone()),
            },
            &report,
        )?,
        None => eprint!("{}", String::from_utf8_lossy(&report)),
    }
    write(&args.output, &save_plan(&plan))
}

fn exact(args: &ExactArgs) -> Result<(), Failure> {
    let inst = load_instance(&read(&args.instance)?)?;
    let cons = args.limits.constraints();
    let warm_start = match &args.warm_start {
        None => None,
        Some(None) => Some(dp2_full(&inst, &cons)?.0),
        Some(Some(path)) => Some(load_plan(&read(path)?)?),
    };
    let opts = SolveOptions {
        warm_start,
        time_limit: args.time_limit_ms.map(Duration::from_millis),
    };
    let result = solve_exact(&inst, &cons, &opts)?;
    write(&args.output, &pretty(&result.to_json()))?;
    if result.status == SolveStatus::TimeoutNoSolution {
        return Err(Failure::Timeout);
    }
    Ok(())
}

fn schedule(args: &ScheduleArgs) -> Result<(), Failure> {
    let plan = load_plan(&read(&args.plan)?)?;
    let base = plan.cycle;
    let cfg = CycleConfig {
        sf_duration_ms: args.sf_ms.unwrap_or(base.sf_duration_ms),
        slots_per_cycle: args.slots.unwrap_or(base.slots_per_cycle),
        min_granularity_ms: args.min_granularity_ms.unwrap_or(base.min_granularity_ms),
        switching_time_ms: args.switching_ms.unwrap_or(base.switching_time_ms),
    };
    // validate overrides through the file format's checks
    let cfg = CycleConfig::try_from(CycleFile::from(cfg))?;
    let scheduled = if args.force_rescale {
        rescale_to_slots(&plan, &cfg)?
    } else {
        scale_to_cycle(&plan, &cfg)?
    };
    write(&args.output, &pretty(&scheduled.to_file()))
}

fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let plan = load_plan(&read(&args.plan)?)?;
    let inst = load_instance(&read(&args.instance)?)?;
    let report = check_feasible(&plan, &inst, &args.limits.constraints());
    let requested: Vec<f64> = inst.demands.iter().map(|&d| d as f64).collect();
    let pre = capacity_error(&supplied_from_plan(&plan, &requested)?, &requested)?;
    let scheduled = scale_to_cycle(&plan, &inst.cycle)?;
    let post = capacity_error(
        &supplied_from_plan(&scheduled.as_plan(), &requested)?,
        &requested,
    )?;
    let (_, even) = even_baseline(&requested)?;
    let doc = serde_json::json!({
        "n_beams": inst.n_beams,
        "pattern_count": plan.len(),
        "b_ratio": plan.len() as f64 / inst.n_beams as f64,
        "feasible": report.is_ok(),
        "violations": report.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "pre_scaling_error": pre,
        "capacity_error": post,
        "even_error": even,
        "total_slots": scheduled.total_slots,
        "dropped_patterns": scheduled.dropped_patterns,
    });
    write(&args.output, &pretty(&doc))
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_slice::<BenchConfig>(&read(path)?)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?,
        None => BenchConfig::standard(),
    };
    if let Some(t) = args.trial {
        config.trials = vec![t];
    }
    if let Some(b) = args.beams {
        config.beam_counts = vec![b];
    }
    if let Some(s) = args.seed {
        config.seeds = vec![s];
    }
    let output = run_benchmark(&config);
    let (csv, json) = emit_results(&output, &config)?;
    if let Some(r) = output.summary.error_reduction_percent {
        eprintln!("error reduction vs even: {r:.2}%");
    }
    match args.format {
        Format::Csv => write(&args.output, csv.as_bytes()),
        Format::Json => write(&args.output, json.as_bytes()),
    }
}

fn trials(args: &TrialsArgs) -> Result<(), Failure> {
    let rows = trial_table();
    let bytes = match args.format {
        Format::Json => pretty(&rows),
        Format::Csv => {
            let mut s = String::from("trial,users,demand_lo_mbps,demand_hi_mbps,distribution\n");
            for (i, r) in rows.iter().enumerate() {
                let dist = serde_json::to_value(r.distribution).expect("serializable");
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    i + 1,
                    r.n_users,
                    r.demand_range_mbps.0,
                    r.demand_range_mbps.1,
                    dist.as_str().unwrap_or_default()
                ));
            }
            s.into_bytes()
        }
    };
    write(&args.output, &bytes)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Dp2(a) => dp2(a),
        Command::Exact(a) => exact(a),
        Command::Schedule(a) => schedule(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Trials(a) => trials(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Timeout) => {
            eprintln!("error: time limit reached without a feasible plan");
            ExitCode::from(3)
        }
    }
}
