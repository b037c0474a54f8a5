//! mmdlab command line: ad-hoc estimates and bounds, config-driven fits,
//! complexity estimates, and experiment runs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.
//! All randomness flows from `--seed`; reruns with the same arguments and
//! config are byte-identical regardless of `--threads`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mmdlab::bounds::{
    corollary_bounds, empirical_measure_bound, empirical_measure_excess_bound, fukumizu_cstar,
    fukumizu_two_sided, gretton_deviation_bound, theorem1_bounds, BoundFormula, BoundInputs,
    BoundReport, CorollaryKind,
};
use mmdlab::complexity::{
    empirical_gaussian_complexity, empirical_rademacher_complexity, empirical_rademacher_chaos,
    expected_complexity,
};
use mmdlab::estimators::{min_mmd_fit, minimax_mmd_fit, MinimaxOrientation};
use mmdlab::experiments::{DistConfig, ExperimentConfig, ExperimentKind};
use mmdlab::function_classes::ClassConfig;
use mmdlab::kernels::KernelConfig;
use mmdlab::mmd::{mmd_u_squared, mmd_v_squared};
use mmdlab::report::{render_json, write_json_file};
use mmdlab::rng::{derived_rng, tags};
use mmdlab::samples::SampleMatrix;

#[derive(Parser)]
#[command(name = "mmdlab", version, about = "MMD estimators, concentration bounds, and bound-verification experiments")]
struct Cli {
    /// Master seed for all randomness (overrides any seed in a config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true, env = "MMDLAB_THREADS")]
    threads: Option<usize>,
    /// Write the primary JSON output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Squared-MMD estimates from CSV sample files.
    Mmd {
        #[command(subcommand)]
        which: MmdCommand,
    },
    /// Closed-form concentration and generalization bounds.
    Bound {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Complexity estimates from a JSON config.
    Complexity {
        #[command(subcommand)]
        which: ComplexityCommand,
    },
    /// Fit an estimator described by a JSON config.
    Fit {
        #[command(subcommand)]
        which: FitCommand,
    },
    /// Run experiments from a JSON config.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
}

#[derive(Args)]
struct SamplePairArgs {
    /// Headerless CSV of X observations, one row each.
    #[arg(long)]
    x: PathBuf,
    /// Headerless CSV of Y observations, one row each.
    #[arg(long)]
    y: PathBuf,
    /// Kernel JSON, e.g. {"kind":"gaussian","sigma":1.0}.
    #[arg(long)]
    kernel: String,
}

#[derive(Subcommand)]
enum MmdCommand {
    /// Unbiased U-statistic estimate.
    U(SamplePairArgs),
    /// Biased V-statistic estimate.
    V(SamplePairArgs),
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Uniform deviation bound over (f, g) classes.
    Theorem1 {
        #[arg(long)]
        l: f64,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "gc-fg")]
        gc_fg: f64,
        #[arg(long = "gc-f")]
        gc_f: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = Theorem1Form::Highprob)]
        form: Theorem1Form,
    },
    /// Fixed-kernel U-statistic large deviation bound.
    Gretton {
        /// sup over u, u' of k(u, u').
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
    },
    /// Kernel-class constant C* (one side); --two-sided sums both sides.
    Fukumizu {
        #[arg(long)]
        chaos: f64,
        /// Chaos estimate for the Y side (defaults to --chaos).
        #[arg(long = "chaos-y")]
        chaos_y: Option<f64>,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        two_sided: bool,
    },
    /// Distribution-to-empirical-measure MMD bound; --excess doubles it.
    EmpiricalMeasure {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        excess: bool,
    },
    /// Min-MMD excess-risk bound.
    Corollary1 {
        #[arg(long)]
        l: f64,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "gc-g")]
        gc_g: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
    },
    /// Min-max (adversarial kernel) excess-risk bound.
    Corollary2 {
        #[arg(long)]
        l: f64,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "gc-f")]
        gc_f: f64,
        #[arg(long = "gc-fg")]
        gc_fg: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem1Form {
    Expectation,
    Highprob,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum ComplexityCommand {
    /// Empirical or expected Gaussian complexity.
    Gaussian(ConfigArg),
    /// Empirical Rademacher complexity (exact enumeration for nd <= 20).
    Rademacher(ConfigArg),
    /// Rademacher chaos of a composite-kernel class.
    Chaos(ConfigArg),
}

#[derive(Subcommand)]
enum FitCommand {
    /// Minimum-MMD generator fit.
    Minmmd(ConfigArg),
    /// Min-max fit over features and generators.
    Minimax(ConfigArg),
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run one experiment of the named kind.
    Run {
        #[arg(value_enum)]
        kind: ExperimentKindArg,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKindArg {
    Coverage,
    Decay,
    ExcessRisk,
    KernelAudit,
}

impl From<ExperimentKindArg> for ExperimentKind {
    fn from(value: ExperimentKindArg) -> Self {
        match value {
            ExperimentKindArg::Coverage => ExperimentKind::Coverage,
            ExperimentKindArg::Decay => ExperimentKind::Decay,
            ExperimentKindArg::ExcessRisk => ExperimentKind::ExcessRisk,
            ExperimentKindArg::KernelAudit => ExperimentKind::KernelAudit,
        }
    }
}

/// Where a fit or complexity run gets its samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum DataSource {
    Csv { csv: String },
    Sampled { dist: DistConfig, n: usize },
}

impl DataSource {
    fn load(&self, seed: u64, stream: u64) -> Result<SampleMatrix, CliError> {
        match self {
            DataSource::Csv { csv } => {
                SampleMatrix::read_csv_path(Path::new(csv)).map_err(CliError::from)
            }
            DataSource::Sampled { dist, n } => {
                let sampler = dist.build()?;
                let mut rng = derived_rng(seed, tags::GENERIC, stream);
                Ok(sampler.sample_matrix(*n, &mut rng))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitFileConfig {
    kernel: KernelConfig,
    generator_class: ClassConfig,
    #[serde(default)]
    feature_class: Option<ClassConfig>,
    x: DataSource,
    y: DataSource,
    #[serde(default)]
    orientation: Option<MinimaxOrientation>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexityFileConfig {
    class: ClassConfig,
    data: DistConfig,
    n: usize,
    /// Inner (coefficient) replicates; default 200.
    #[serde(default)]
    replicates: Option<usize>,
    /// When set, average the empirical complexity over this many fresh
    /// sample draws (Gaussian complexity only).
    #[serde(default)]
    outer_replicates: Option<usize>,
    /// Base kernel for the chaos statistic.
    #[serde(default)]
    kernel: Option<KernelConfig>,
    #[serde(default)]
    seed: u64,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<mmdlab::Error> for CliError {
    fn from(e: mmdlab::Error) -> Self {
        match e {
            mmdlab::Error::InvalidArgument(_) | mmdlab::Error::InvalidConfig(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn parse_json_config<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(deserializer).map_err(|e| {
        CliError::Usage(format!(
            "{origin}: invalid config at `{}`: {}",
            e.path(),
            e.inner()
        ))
    })
}

fn read_config_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_json_config(&text, &path.display().to_string())
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_json_file(value, path).map_err(CliError::from),
        None => {
            print!("{}", render_json(value).map_err(CliError::from)?);
            Ok(())
        }
    }
}

fn bound_inputs(
    l: f64,
    nu: Option<f64>,
    b: Option<f64>,
    n: usize,
    delta: f64,
) -> BoundInputs {
    BoundInputs {
        lipschitz: l,
        value_bound: nu,
        support_diameter: b,
        n,
        delta,
        gc_fg: None,
        gc_f: None,
        gc_g: None,
        chaos: None,
    }
}

fn run_bound(which: BoundCommand, out: Option<&Path>) -> Result<(), CliError> {
    let report = match which {
        BoundCommand::Theorem1 { l, nu, b, gc_fg, gc_f, n, delta, form } => {
            let mut inputs = bound_inputs(l, nu, b, n, delta);
            inputs.gc_fg = Some(gc_fg);
            inputs.gc_f = Some(gc_f);
            let (expectation, high_prob) = theorem1_bounds(&inputs)?;
            let (formula, value) = match form {
                Theorem1Form::Expectation => (BoundFormula::Theorem1Expectation, expectation),
                Theorem1Form::Highprob => (BoundFormula::Theorem1HighProbability, high_prob),
            };
            BoundReport { formula, inputs, value, complexity_std_error: None }
        }
        BoundCommand::Gretton { nu, n, delta } => {
            let value = gretton_deviation_bound(nu, n, delta)?;
            let mut inputs = bound_inputs(0.0, Some(nu), None, n, delta);
            inputs.lipschitz = 0.0;
            BoundReport {
                formula: BoundFormula::GrettonDeviation,
                inputs,
                value,
                complexity_std_error: None,
            }
        }
        BoundCommand::Fukumizu { chaos, chaos_y, nu, n, delta, two_sided } => {
            let value = if two_sided {
                fukumizu_two_sided(chaos, chaos_y.unwrap_or(chaos), nu, n, delta)?
            } else {
                fukumizu_cstar(chaos, nu, n, delta)?
            };
            let mut inputs = bound_inputs(0.0, Some(nu), None, n, delta);
            inputs.chaos = Some(chaos);
            BoundReport {
                formula: BoundFormula::FukumizuCstar,
                inputs,
                value,
                complexity_std_error: None,
            }
        }
        BoundCommand::EmpiricalMeasure { nu, n, delta, excess } => {
            let (formula, value) = if excess {
                (
                    BoundFormula::EmpiricalMeasureExcess,
                    empirical_measure_excess_bound(nu, n, delta)?,
                )
            } else {
                (BoundFormula::EmpiricalMeasure, empirical_measure_bound(nu, n, delta)?)
            };
            BoundReport {
                formula,
                inputs: bound_inputs(0.0, Some(nu), None, n, delta),
                value,
                complexity_std_error: None,
            }
        }
        BoundCommand::Corollary1 { l, nu, b, gc_g, n, delta } => {
            let mut inputs = bound_inputs(l, nu, b, n, delta);
            inputs.gc_g = Some(gc_g);
            let value = corollary_bounds(CorollaryKind::Corollary1, &inputs)?;
            BoundReport {
                formula: BoundFormula::Corollary1,
                inputs,
                value,
                complexity_std_error: None,
            }
        }
        BoundCommand::Corollary2 { l, nu, b, gc_f, gc_fg, n, delta } => {
            let mut inputs = bound_inputs(l, nu, b, n, delta);
            inputs.gc_f = Some(gc_f);
            inputs.gc_fg = Some(gc_fg);
            let value = corollary_bounds(CorollaryKind::Corollary2, &inputs)?;
            BoundReport {
                formula: BoundFormula::Corollary2,
                inputs,
                value,
                complexity_std_error: None,
            }
        }
    };
    emit(&report, out)
}

fn run_mmd(which: MmdCommand, out: Option<&Path>) -> Result<(), CliError> {
    let (args, unbiased) = match which {
        MmdCommand::U(args) => (args, true),
        MmdCommand::V(args) => (args, false),
    };
    let kernel_config: KernelConfig = parse_json_config(&args.kernel, "--kernel")?;
    let kernel = kernel_config.build()?;
    let x = SampleMatrix::read_csv_path(&args.x)?;
    let y = SampleMatrix::read_csv_path(&args.y)?;
    let estimate = if unbiased {
        mmd_u_squared(&kernel, &x, &y)?
    } else {
        mmd_v_squared(&kernel, &x, &y)?
    };
    emit(&estimate, out)
}

fn run_complexity(
    which: ComplexityCommand,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (config_path, mode) = match &which {
        ComplexityCommand::Gaussian(c) => (&c.config, "gaussian"),
        ComplexityCommand::Rademacher(c) => (&c.config, "rademacher"),
        ComplexityCommand::Chaos(c) => (&c.config, "chaos"),
    };
    let config: ComplexityFileConfig = read_config_file(config_path)?;
    let seed = seed.unwrap_or(config.seed);
    let replicates = config.replicates.unwrap_or(200);
    let class = config.class.build()?;
    let sampler = config.data.build()?;
    let estimate = match mode {
        "gaussian" => {
            if let Some(outer) = config.outer_replicates {
                expected_complexity(&class, sampler.as_ref(), config.n, outer, replicates, seed)?
            } else {
                let mut rng = derived_rng(seed, tags::SAMPLE_X, 0);
                let x = sampler.sample_matrix(config.n, &mut rng);
                empirical_gaussian_complexity(&class.apply_all(&x)?, replicates, seed)?
            }
        }
        "rademacher" => {
            let mut rng = derived_rng(seed, tags::SAMPLE_X, 0);
            let x = sampler.sample_matrix(config.n, &mut rng);
            empirical_rademacher_complexity(&class.apply_all(&x)?, replicates, seed)?
        }
        _ => {
            let kernel = config
                .kernel
                .as_ref()
                .ok_or_else(|| CliError::Usage("chaos needs a kernel in the config".into()))?
                .build()?;
            let mut rng = derived_rng(seed, tags::SAMPLE_X, 0);
            let x = sampler.sample_matrix(config.n, &mut rng);
            empirical_rademacher_chaos(&kernel, &class, &x, replicates, seed)?
        }
    };
    emit(&estimate, out)
}

fn run_fit(which: FitCommand, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let (config_path, minimax) = match &which {
        FitCommand::Minmmd(c) => (&c.config, false),
        FitCommand::Minimax(c) => (&c.config, true),
    };
    let config: FitFileConfig = read_config_file(config_path)?;
    let seed = seed.unwrap_or(config.seed);
    let kernel = config.kernel.build()?;
    let generators = config.generator_class.build()?;
    let x = config.x.load(seed, 0)?;
    let y = config.y.load(seed, 1)?;
    let fit = if minimax {
        let features = config
            .feature_class
            .as_ref()
            .ok_or_else(|| CliError::Usage("minimax fit needs a feature_class".into()))?
            .build()?;
        minimax_mmd_fit(
            &kernel,
            &features,
            &generators,
            &x,
            &y,
            config.orientation.unwrap_or_default(),
        )?
    } else {
        min_mmd_fit(&kernel, &generators, &x, &y)?
    };
    emit(&fit, out)
}

fn run_experiment(
    kind: ExperimentKindArg,
    config_path: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut config: ExperimentConfig = read_config_file(config_path)?;
    let cli_kind = ExperimentKind::from(kind);
    match config.kind {
        None => config.kind = Some(cli_kind),
        Some(k) if k == cli_kind => {}
        Some(k) => {
            return Err(CliError::Usage(format!(
                "config kind {k:?} does not match requested {cli_kind:?}"
            )));
        }
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let report = mmdlab::experiments::run(&config, threads)?;
    eprintln!(
        "experiment finished in {:.2?} ({} trial records)",
        report.wall_clock,
        report.trials.len()
    );
    let has_file_output = out.is_some()
        || config
            .output
            .as_ref()
            .is_some_and(|o| o.summary_json.is_some());
    report.write_files(out)?;
    if !has_file_output {
        print!("{}", render_json(&report).map_err(CliError::from)?);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Mmd { which } => run_mmd(which, out),
        Command::Bound { which } => run_bound(which, out),
        Command::Complexity { which } => run_complexity(which, cli.seed, out),
        Command::Fit { which } => run_fit(which, cli.seed, out),
        Command::Experiment { which } => match which {
            ExperimentCommand::Run { kind, config } => {
                run_experiment(kind, &config, cli.seed, cli.threads, out)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
