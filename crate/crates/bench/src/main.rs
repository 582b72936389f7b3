use std::path::PathBuf;
use std::process::ExitCode;

use bregman_dlnn::Algorithm;
use clap::{Args, Parser, Subcommand};
use dlnn_bench::data::Init;
use dlnn_bench::{run_suite, BenchError, Experiment, ExperimentSpec, RegKind};

#[derive(Parser)]
#[command(name = "dlnn-bench", about = "Benchmark Bregman and Euclidean optimizers on deep linear networks")]
struct Cli {
    /// Print the supported algorithm tags and exit.
    #[arg(long)]
    list_algos: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected algorithms on one experiment and write traces.
    Run(RunArgs),
    /// Multi-seed evaluation: random initialization, 40 seeds and 10000
    /// iterations unless overridden.
    Stats(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// exp1, exp2 or custom.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    /// none, l2 or l1.
    #[arg(long)]
    reg: Option<String>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated algorithm tags.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    #[arg(long)]
    iters: Option<usize>,
    /// First seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input matrix for the custom experiment (rows are features).
    #[arg(long)]
    x_csv: Option<PathBuf>,
    /// Target matrix for the custom experiment.
    #[arg(long)]
    y_csv: Option<PathBuf>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(flag: &str, value: &str) -> Result<T, BenchError> {
    serde_json::from_value(serde_json::Value::String(value.to_ascii_lowercase()))
        .map_err(|_| BenchError::Config(format!("invalid --{flag} value {value:?}")))
}

/// Overlays `patch` onto `base`, recursing into objects.
fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && same_variant(slot, &v) => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// A tagged object switching `kind` must not inherit the old variant's fields.
fn same_variant(base: &serde_json::Value, patch: &serde_json::Value) -> bool {
    patch.get("kind").is_none() || patch.get("kind") == base.get("kind")
}

fn resolve(args: RunArgs, stats: bool) -> Result<ExperimentSpec, BenchError> {
    let mut spec = ExperimentSpec::default();
    if stats {
        spec.seeds = 40;
        spec.max_iters = 10_000;
        spec.init = Init::Uniform { low: 0.0, high: 0.1 };
        spec.out = PathBuf::from("results-stats");
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io { path: path.clone(), source: e })?;
        let file: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let mut value = serde_json::to_value(&spec).expect("spec serializes");
        merge(&mut value, file);
        spec = serde_json::from_value(value)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    }
    if let Some(e) = &args.experiment {
        spec.experiment = parse_enum::<Experiment>("experiment", e)?;
    }
    if let Some(n) = args.layers {
        spec.layers = n;
    }
    if let Some(r) = &args.reg {
        spec.reg.kind = parse_enum::<RegKind>("reg", r)?;
    }
    if let Some(v) = args.lambda0 {
        spec.reg.lambda0 = v;
    }
    if let Some(v) = args.mu {
        spec.reg.mu = v;
    }
    if let Some(a) = args.algos {
        spec.algorithms = a;
    }
    if let Some(v) = args.iters {
        spec.max_iters = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.seeds {
        spec.seeds = v;
    }
    if let Some(v) = args.out {
        spec.out = v;
    }
    if args.x_csv.is_some() {
        spec.x_csv = args.x_csv;
    }
    if args.y_csv.is_some() {
        spec.y_csv = args.y_csv;
    }
    Ok(spec)
}

fn execute(args: RunArgs, stats: bool) -> Result<(), BenchError> {
    let spec = resolve(args, stats)?;
    let report = run_suite(&spec)?;
    println!("{:<12} {:>6} {:>22} {:>12} {:>10}", "algorithm", "seed", "final objective", "iterations", "time [s]");
    for row in &report.summary {
        println!(
            "{:<12} {:>6} {:>22.14e} {:>12} {:>10.3}",
            row.algorithm, row.seed, row.final_objective, row.iterations, row.elapsed_s
        );
    }
    println!(
        "wrote {} traces and {}",
        report.trace_files.len(),
        report.summary_file.display()
    );
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(BenchError::Numeric(report.failures.join("; ")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.list_algos {
        for a in Algorithm::all() {
            println!("{a}");
        }
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Run(args)) => execute(args, false),
        Some(Command::Stats(args)) => execute(args, true),
        None => {
            eprintln!("nothing to do: use `run`, `stats` or `--list-algos` (see --help)");
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
