use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neuralbayes::baselines::{logistic_posterior_mcmc, logistic_posterior_quadrature, McmcConfig};
use neuralbayes::estimation::{evaluate_risk, fit_neural_estimator, make_set, TrainingSet};
use neuralbayes::io::{load_training_set, save_training_set, training_set_csv, write_atomic};
use neuralbayes::models::{Model, Prior};
use neuralbayes::neural::{Architecture, Checkpoint, InputTransform, Optimizer, Regularization, TrainConfig};
use neuralbayes_harness::config::{Experiment, ExperimentConfig};
use neuralbayes_harness::error::{HarnessError, Result};
use neuralbayes_harness::manifest::{self, Manifest};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "neuralbayes", version, about = "Neural Bayes estimation laboratory")]
struct Cli {
    /// Master seed; overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a training set `(θ_i, Z_i)` and write it as binary and CSV.
    Simulate(SimulateArgs),
    /// Fit a neural estimator to a simulated training set.
    Train(TrainArgs),
    /// Monte Carlo risk of a trained checkpoint on fresh test data.
    Evaluate(EvaluateArgs),
    /// Posterior means of a logistic data set by MCMC, next to quadrature.
    Mcmc(McmcArgs),
    /// Sweep the generalization bounds and write every intermediate term.
    Bounds,
    /// Run a figure study, or repeat a recorded run from its manifest.
    Reproduce(ReproduceArgs),
    /// Print the default configuration of a figure.
    Config { figure: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Logistic,
    Linear,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "logistic")]
    model: Family,
    /// Dimension of the logistic model.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    /// Observation noise of the linear model.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Prior mean of the linear model.
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Prior standard deviation of the linear model.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// TOML file with `[model]` and `[prior]` tables, for any family.
    #[arg(long, conflicts_with = "model")]
    spec: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct ModelSpec {
    model: Model,
    prior: Prior,
}

impl ModelArgs {
    fn resolve(&self) -> Result<(Model, Prior)> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let spec: ModelSpec = toml::from_str(&text)?;
            spec.model.validate()?;
            spec.prior.validate()?;
            return Ok((spec.model, spec.prior));
        }
        Ok(match self.model {
            Family::Logistic => (Model::Logistic { d: self.dim }, Prior::unit_interval()),
            Family::Linear => (
                Model::LinearGaussian { sigma: self.sigma },
                Prior::gaussian(vec![self.mu], vec![self.gamma])?,
            ),
        })
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Replicates per data set.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Number of parameter draws.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "train")]
    purpose: String,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Binary training set written by `simulate`.
    #[arg(long)]
    data: PathBuf,
    /// Hidden widths, e.g. `64,64`; empty for a linear map.
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Output clip bound; omit for an unclipped network.
    #[arg(long)]
    clip: Option<f64>,
    /// Row L1 radius of the restricted class.
    #[arg(long)]
    restrict: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Hold out this fraction for early stopping.
    #[arg(long)]
    early_stopping: Option<f64>,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    /// Feed `ln z` instead of `z` to the network.
    #[arg(long)]
    log_inputs: bool,
    /// Feed `ln z` with coordinates sorted within each block of this size and
    /// blocks sorted, for exchangeable replicates.
    #[arg(long, conflicts_with = "log_inputs")]
    sorted_log: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 500)]
    n_test: usize,
}

#[derive(Debug, Args)]
struct McmcArgs {
    /// Binary logistic data set written by `simulate`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    chain_len: usize,
    #[arg(long, default_value_t = 5_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 0.5)]
    proposal_scale: f64,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// fig4 .. fig10, decomposition, linear or bounds.
    figure: String,
    /// Repeat the run recorded in this manifest and compare its CSVs.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn master_seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(20240501)
}

fn load_config(cli: &Cli, figure: &str) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(figure)?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let (model, prior) = args.model.resolve()?;
    let set = make_set(&model, &prior, args.m, args.n, master_seed(cli), &args.purpose)?;
    let stem = format!("{}_m{}_n{}", model.name(), args.m, args.n);
    save_training_set(&set, &cli.out.join(format!("{stem}.bin")))?;
    write_atomic(&cli.out.join(format!("{stem}.csv")), &training_set_csv(&set)?)?;
    println!("wrote {} draws to {}", set.n, cli.out.join(&stem).display());
    Ok(())
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let data = load_training_set(&args.data)?;
    let mut arch = Architecture::new(args.hidden.clone());
    if let Some(b) = args.clip {
        arch = arch.clipped(b);
    }
    if args.log_inputs {
        arch = arch.with_input_transform(InputTransform::Log);
    }
    if let Some(dim) = args.sorted_log {
        if dim == 0 || data.input_dim() % dim != 0 {
            return Err(HarnessError::Config(format!(
                "--sorted-log {dim} does not divide the input dimension"
            )));
        }
        arch = arch.with_input_transform(InputTransform::SortedLog { dim });
    }
    let mut cfg = TrainConfig::new(args.batch.min(data.n), args.epochs, master_seed(cli));
    cfg.optimizer = Optimizer::adam(args.step);
    cfg.restriction = args.restrict;
    cfg.regularization = match (args.dropout, args.early_stopping) {
        (Some(_), Some(_)) => {
            return Err(HarnessError::Config("choose either dropout or early stopping".into()));
        }
        (Some(rate), None) => Regularization::Dropout { rate },
        (None, Some(validation_fraction)) => Regularization::EarlyStopping {
            validation_fraction,
            patience: args.patience,
        },
        (None, None) => Regularization::None,
    };
    let ck = fit_neural_estimator(&data, &arch, &cfg)?;
    let path = cli.out.join(format!("{}_{}.ckpt", ck.label, arch.label()));
    ck.save(&path)?;
    println!(
        "{} {}: train risk {:.6}, best epoch {} of {}, saved {}",
        ck.label,
        arch.label(),
        ck.train_risk,
        ck.best_epoch,
        ck.epochs,
        path.display()
    );
    Ok(())
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<()> {
    let (model, prior) = args.model.resolve()?;
    let ck = Checkpoint::load_expecting(&args.checkpoint, args.m * model.dim(), prior.dim())?;
    let net = &ck.network;
    let f = |x: &[f64]| net.forward(x).unwrap_or_else(|_| vec![f64::NAN; net.output_dim()]);
    let est = evaluate_risk(&f, &model, &prior, args.m, args.n_test, master_seed(cli))?;
    println!(
        "{}",
        serde_json::json!({"risk": est.risk, "stderr": est.stderr, "n_test": est.n()})
    );
    Ok(())
}

fn mcmc(cli: &Cli, args: &McmcArgs) -> Result<()> {
    let data: TrainingSet = load_training_set(&args.data)?;
    let mut out = String::new();
    for i in 0..data.n {
        let cfg = McmcConfig {
            chain_len: args.chain_len,
            burn_in: args.burn_in,
            proposal_scale: args.proposal_scale,
            seed: neuralbayes::rng::derive_seed(master_seed(cli), "mcmc", i as u64),
        };
        let chain = logistic_posterior_mcmc(data.x_row(i), data.d, &cfg)?;
        let quad = logistic_posterior_quadrature(data.x_row(i), data.d, args.nodes)?;
        out.push_str(&serde_json::to_string(&serde_json::json!({
            "row": i,
            "theta": data.theta[i],
            "mcmc": chain,
            "quadrature": quad,
        }))?);
        out.push('\n');
    }
    let path = cli.out.join("posterior.jsonl");
    write_atomic(&path, out.as_bytes())?;
    println!("wrote {} posterior summaries to {}", data.n, path.display());
    Ok(())
}

fn report(manifest: &Manifest, out: &Path) {
    println!(
        "{}: {} files in {} ({:.1} s), manifest {}",
        manifest.id,
        manifest.files.len(),
        out.display(),
        manifest.wall_clock_seconds,
        manifest::manifest_path(out).display()
    );
}

fn reproduce(cli: &Cli, args: &ReproduceArgs) -> Result<()> {
    match &args.manifest {
        Some(path) => {
            let recorded = Manifest::load(path)?;
            let result = manifest::reproduce(&recorded, &cli.out)?;
            println!("reproduced {} CSV files byte for byte", result.checked.len());
            report(&result.rerun, &cli.out);
        }
        None => {
            let cfg = load_config(cli, &args.figure)?;
            let m = manifest::execute(&cfg, &cli.out)?;
            report(&m, &cli.out);
        }
    }
    Ok(())
}

fn bounds(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli, "bounds")?;
    if !matches!(cfg.experiment, Experiment::Bounds(_)) {
        return Err(HarnessError::Config(
            "the bounds verb needs a bounds configuration".into(),
        ));
    }
    let m = manifest::execute(&cfg, &cli.out)?;
    report(&m, &cli.out);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Mcmc(a) => mcmc(cli, a),
        Command::Bounds => bounds(cli),
        Command::Reproduce(a) => reproduce(cli, a),
        Command::Config { figure } => {
            print!("{}", load_config(cli, figure)?.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
