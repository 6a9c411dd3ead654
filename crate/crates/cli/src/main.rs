use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarm_spsa::config::{parse_cutoff, parse_vmax, Settings, SettingsOverride};
use swarm_spsa::harness::{self, ExperimentResult, ExperimentSpec};
use swarm_spsa::hybrid::RefineScope;
use swarm_spsa::method::MethodId;
use swarm_spsa::objective::FunctionId;
use swarm_spsa::swarm::VelocityLimit;
use swarm_spsa::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "swarm-spsa",
    version,
    about = "Particle swarm, SPSA and hybrid optimizers on standard test functions"
)]
struct Cli {
    /// JSON file of setting overrides, applied over the built-in defaults.
    #[arg(long, global = true, env = "SWARM_SPSA_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run; prints the final true fitness and evaluation total.
    Run(RunArgs),
    /// Multi-run benchmark over a method × function × dimension grid.
    Bench(BenchArgs),
    /// Lists methods, functions and default parameters.
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    method: MethodId,
    #[arg(long)]
    function: FunctionId,
    #[arg(long = "dim")]
    dimension: usize,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Writes the convergence trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated method ids (default: the eight swarm methods).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<MethodId>,
    /// Comma-separated function ids (default: all).
    #[arg(long, value_delimiter = ',')]
    functions: Vec<FunctionId>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    dims: Vec<usize>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    noise_sigma: Vec<f64>,
    /// Adds σ = 1 to the noise levels.
    #[arg(long)]
    with_noise: bool,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes full results as JSON instead of the summary CSV.
    #[arg(long)]
    json: bool,
    /// Maximum number of concurrent runs.
    #[arg(long)]
    parallel: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    swarm_size: Option<usize>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Fixed inertia weight (default: linear 0.9 → 0.4).
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    phi1: Option<f64>,
    #[arg(long)]
    phi2: Option<f64>,
    /// Velocity clamp: a positive number or "auto".
    #[arg(long, value_parser = parse_vmax)]
    vmax: Option<VelocityLimit>,
    #[arg(long = "spsa-a")]
    spsa_a: Option<f64>,
    #[arg(long = "spsa-c")]
    spsa_c: Option<f64>,
    #[arg(long = "spsa-A")]
    spsa_stability: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// SPSA steps for the standalone method (default: max-iter).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    refine_steps: Option<usize>,
    #[arg(long)]
    refine_scope: Option<RefineScope>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Cut-off error: a non-negative number or "none".
    #[arg(long, value_parser = parse_cutoff)]
    cutoff: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ParamArgs {
    fn to_override(&self, noise_sigma: Option<f64>) -> SettingsOverride {
        SettingsOverride {
            swarm_size: self.swarm_size,
            c1: self.c1,
            c2: self.c2,
            omega: self.omega,
            kappa: self.kappa,
            phi1: self.phi1,
            phi2: self.phi2,
            vmax: self.vmax,
            max_iter: self.max_iter,
            cutoff: self.cutoff,
            a: self.spsa_a,
            c: self.spsa_c,
            stability: self.spsa_stability,
            alpha: self.alpha,
            gamma: self.gamma,
            steps: self.steps,
            refine_steps: self.refine_steps,
            refine_scope: self.refine_scope,
            noise_sigma,
            runs: self.runs,
            seed: self.seed,
            ..SettingsOverride::default()
        }
    }
}

fn settings(config: Option<&Path>, flags: &SettingsOverride) -> Result<Settings, Error> {
    let mut s = Settings::default();
    if let Some(path) = config {
        s.apply(&SettingsOverride::from_path(path)?);
    }
    s.apply(flags);
    Ok(s)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn stdout_io(e: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn cmd_run(config: Option<&Path>, args: &RunArgs) -> Result<(), Error> {
    let mut s = settings(config, &args.params.to_override(args.noise_sigma))?;
    s.runs = 1;
    let spec = ExperimentSpec::from_settings(args.method, args.function, args.dimension, &s)?;
    let result = harness::run_experiment(&spec)?;
    if let Some(path) = &args.trace {
        harness::export_trace(&result, path)?;
    }
    let mut out = io::stdout().lock();
    (|| -> io::Result<()> {
        writeln!(out, "config: {}", s.to_json())?;
        writeln!(out, "method: {}", spec.method)?;
        writeln!(out, "function: {}", spec.function)?;
        writeln!(out, "dimension: {}", spec.dimension)?;
        writeln!(out, "seed: {}", spec.base_seed)?;
        writeln!(
            out,
            "final_fitness: {}",
            harness::fmt_float(result.finals[0])
        )?;
        writeln!(out, "evals: {}", result.evals[0])?;
        writeln!(out, "terminated_by: {:?}", result.terminated_by[0])
    })()
    .map_err(stdout_io)
}

fn cmd_bench(config: Option<&Path>, args: &BenchArgs) -> Result<(), Error> {
    let mut sigmas = args.noise_sigma.clone();
    if args.with_noise && !sigmas.contains(&1.0) {
        sigmas.push(1.0);
    }
    if sigmas.is_empty() {
        sigmas.push(settings(config, &args.params.to_override(None))?.noise_sigma);
    }
    let methods = if args.methods.is_empty() {
        MethodId::SWARM.to_vec()
    } else {
        args.methods.clone()
    };
    let functions = if args.functions.is_empty() {
        FunctionId::ALL.to_vec()
    } else {
        args.functions.clone()
    };
    if args.parallel == Some(0) {
        return Err(Error::InvalidParameter(
            "--parallel must be positive".into(),
        ));
    }

    // Every spec is resolved (and validated) before any run starts.
    let mut specs = Vec::new();
    let mut base = None;
    for &function in &functions {
        for &dimension in &args.dims {
            for &sigma in &sigmas {
                let s = settings(config, &args.params.to_override(Some(sigma)))?;
                for &method in &methods {
                    specs.push(ExperimentSpec::from_settings(
                        method, function, dimension, &s,
                    )?);
                }
                base.get_or_insert(s);
            }
        }
    }
    let base = base.ok_or_else(|| Error::InvalidParameter("empty benchmark grid".into()))?;

    let run_all = || {
        specs
            .iter()
            .map(harness::run_experiment)
            .collect::<Result<Vec<_>, _>>()
    };
    let results = match args.parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run_all)?,
        None => run_all()?,
    };

    let comments = [format!("config: {}", base.to_json())];
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let mut w = BufWriter::new(file);
            write_bench(&mut w, &results, &comments, args.json)
                .and_then(|_| w.flush())
                .map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })
        }
        None => {
            write_bench(&mut io::stdout().lock(), &results, &comments, args.json).map_err(stdout_io)
        }
    }
}

fn write_bench<W: Write>(
    w: &mut W,
    results: &[ExperimentResult],
    comments: &[String],
    json: bool,
) -> io::Result<()> {
    if json {
        serde_json::to_writer_pretty(&mut *w, results).map_err(io::Error::other)?;
        writeln!(w)
    } else {
        harness::write_summary_csv(w, results, comments)
    }
}

fn cmd_list(config: Option<&Path>) -> Result<(), Error> {
    let s = settings(config, &SettingsOverride::default())?;
    let mut out = io::stdout().lock();
    (|| -> io::Result<()> {
        writeln!(out, "methods:")?;
        for m in MethodId::ALL {
            writeln!(out, "  {m}")?;
        }
        writeln!(out, "functions:")?;
        for f in FunctionId::ALL {
            let b = f.default_bounds();
            writeln!(
                out,
                "  {f} [{}, {}]^d, d >= {}",
                b.lower(),
                b.upper(),
                f.min_dimension()
            )?;
        }
        writeln!(out, "defaults:")?;
        let pretty = serde_json::to_string_pretty(&s).map_err(io::Error::other)?;
        writeln!(out, "{pretty}")
    })()
    .map_err(stdout_io)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(config, args),
        Command::Bench(args) => cmd_bench(config, args),
        Command::List => cmd_list(config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
