use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metricstep::harness::{
    compare, demo_step_geometry, generate_dataset, render_table, run_experiment, DatasetSpec,
    ExperimentConfig,
};
use metricstep::{Error, MetricKind};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "bench-cli", version, about = "Compare constrained-step descent methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV plus a JSON metadata file.
    Gen(GenArgs),
    /// Run every configured method and write one trace per method.
    Run(RunArgs),
    /// Summarize trace files, best final loss first.
    Compare(CompareArgs),
    /// Print the vanilla and metric steps for a 2-D gradient.
    Demo(DemoArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Take the dataset spec from an experiment config.
    #[arg(long, conflicts_with = "name")]
    config: Option<PathBuf>,
    /// Dataset name: linreg, sine or spiral3.
    #[arg(long, required_unless_present = "config")]
    name: Option<String>,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated metric kinds or method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Loss level for the iterations-to-threshold column.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct DemoArgs {
    /// Gradient as `g1,g2`.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0], allow_hyphen_values = true)]
    g: Vec<f64>,
    /// Metric as `m11,m12,m21,m22`.
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 0.0, 0.0, 1.0], allow_hyphen_values = true)]
    m: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    csv: bool,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::UnknownSpec(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn write_dataset(args: &GenArgs) -> Result<(), Error> {
    let spec = match (&args.config, &args.name) {
        (Some(path), _) => {
            let mut spec = ExperimentConfig::load(path)?.dataset;
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            spec
        }
        (None, Some(name)) => DatasetSpec::new(name, args.size, args.noise, args.seed.unwrap_or(0)),
        (None, None) => unreachable!("clap requires one of --config and --name"),
    };
    let dataset = generate_dataset(&spec)?;
    fs::create_dir_all(&args.out)?;
    let csv = args.out.join(format!("{}.csv", spec.name));
    fs::write(&csv, dataset.to_csv())?;
    let mut meta = serde_json::to_string_pretty(&dataset.meta)?;
    meta.push('\n');
    fs::write(args.out.join(format!("{}.json", spec.name)), meta)?;
    println!("wrote {} samples to {}", dataset.samples.len(), csv.display());
    Ok(())
}

fn load_run_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(methods) = &args.methods {
        config.methods = methods
            .iter()
            .map(|m| m.parse::<MetricKind>())
            .collect::<Result<_, _>>()?;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs) -> Result<u8, Error> {
    let config = load_run_config(args)?;
    let report = run_experiment(&config)?;
    for m in &report.manifest.methods {
        if let Some(err) = &m.error {
            eprintln!("error: {err}");
        }
    }
    let traces = report.trace_paths();
    if !traces.is_empty() {
        print!("{}", render_table(&compare(&traces, None)?));
    }
    println!("outputs in {}", report.output_dir.display());
    Ok(if report.all_failed() { EXIT_NUMERIC } else { 0 })
}

fn demo(args: &DemoArgs) -> Result<(), Error> {
    if args.g.len() != 2 || args.m.len() != 4 {
        return Err(Error::Config("demo needs --g g1,g2 and --m m11,m12,m21,m22".into()));
    }
    let geo = demo_step_geometry(
        [args.g[0], args.g[1]],
        [[args.m[0], args.m[1]], [args.m[2], args.m[3]]],
        args.epsilon,
    )?;
    if args.csv {
        print!("{}", geo.to_csv());
    } else {
        print!("{}", geo.to_text());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Gen(args) => write_dataset(args).map(|_| 0),
        Command::Run(args) => run(args),
        Command::Compare(args) => {
            print!("{}", render_table(&compare(&args.traces, args.threshold)?));
            Ok(0)
        }
        Command::Demo(args) => demo(args).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
