//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fleetwise_core::data::schema::LABEL_COLUMNS;
use fleetwise_core::data::{synth_farm, synth_load_series, Dataset, InputConfig};
use serde::Serialize;

use crate::config::{resolve_seed, Config, SeedSource, SEED_ENV};
use crate::error::{Error, Result};
use crate::io::{read_dataset, read_json, sha256_file};
use crate::model::{ModelBundle, ModelKind, Network};
use crate::output::OutputDir;
use crate::workflow::{self, export};

pub const MANIFEST_FILE: &str = "manifest.json";
const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "fleetwise", version, about = "Fleet-leader virtual load monitoring with Bayesian neural networks")]
pub struct Cli {
    /// Base seed; overrides the config file and FLEETWISE_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML (or .json) settings file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving every output of the run.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Generate the synthetic farm as one CSV per turbine.
    Synth(SynthArgs),
    /// Train one model on a fleet-leader dataset.
    Train(TrainArgs),
    /// Compare input configurations.
    Sweep(SweepArgs),
    /// Train on growing collection periods and score on a fixed test set.
    PeriodStudy(PeriodArgs),
    /// Deploy a trained variational model on other turbines.
    Deploy(DeployArgs),
    /// Compare deterministic, epistemic and aleatoric models across turbines.
    Compare(CompareArgs),
    /// Run the internal numerical oracles.
    Selfcheck,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Months of records (overrides `farm.months`).
    #[arg(long)]
    pub months: Option<u32>,
    /// Also write the moment series behind the first N records of each turbine.
    #[arg(long, default_value_t = 0)]
    pub series: usize,
}

/// Settings shared by the training commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainingFlags {
    /// Maximum epochs for every network (overrides the config file).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Posterior draws per prediction (overrides `report.forward_runs`).
    #[arg(long)]
    pub forward_runs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Fleet-leader dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "aleatoric_bnn")]
    pub kind: ModelKind,
    /// Input configuration 1-12 (overrides `input_config`).
    #[arg(long)]
    pub inputs: Option<u8>,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated input configurations; all twelve by default.
    #[arg(long, value_delimiter = ',')]
    pub configs: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_value = "dnn,aleatoric_bnn")]
    pub kinds: Vec<ModelKind>,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PeriodArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated collection periods in months (overrides `period_months`).
    #[arg(long, value_delimiter = ',')]
    pub periods: Vec<u32>,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeployArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Rows the model was trained on, for nearest-neighbour distances.
    #[arg(long)]
    pub reference: PathBuf,
    /// Turbine datasets to deploy on (repeatable).
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub forward_runs: Option<usize>,
    /// DEM histogram bins (overrides `report.histogram_bins`).
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Fleet-leader dataset CSV; split into training and test rows.
    #[arg(long)]
    pub data: PathBuf,
    /// Further turbine datasets (repeatable).
    #[arg(long = "turbine")]
    pub turbines: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "dnn,epistemic_bnn,aleatoric_bnn")]
    pub kinds: Vec<ModelKind>,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    seed: u64,
    seed_source: SeedSource,
    config: &'a Config,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

/// Runs one invocation and returns the process exit code. Errors are
/// printed to stderr as a JSON object.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env = std::env::var(SEED_ENV).ok();
    run_with_seed_env(argv, env.as_deref())
}

/// [`run`] with an explicit value for `FLEETWISE_SEED`.
pub fn run_with_seed_env<I, T>(argv: I, seed_env: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                print!("{e}");
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let err = Error::Usage(e.render().to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli, seed_env) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing artifacts and the manifest under `--out`.
pub fn execute(cli: &Cli, seed_env: Option<&str>) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let (seed, seed_source) = resolve_seed(cli.seed, config.seed, seed_env)?;
    config.seed = Some(seed);
    config.farm.seed = seed;
    apply_flags(&cli.command, &mut config)?;
    config.validate()?;

    let mut inputs: Vec<PathBuf> = cli.config.iter().cloned().collect();
    inputs.extend(input_files(&cli.command));
    let mut out = OutputDir::new(&cli.out);
    let previous = cli.out.join(MANIFEST_FILE);
    if previous.exists() {
        return Err(Error::Usage(format!(
            "{} already holds the outputs of an earlier run",
            cli.out.display()
        )));
    }
    for p in &inputs {
        out.add_input(p);
    }
    match &cli.command {
        Command::Synth(a) => synth(a, &config, &mut out)?,
        Command::Train(a) => train(a, &config, seed, &mut out)?,
        Command::Sweep(a) => sweep(a, &config, seed, &mut out)?,
        Command::PeriodStudy(a) => period(a, &config, seed, &mut out)?,
        Command::Deploy(a) => deploy(a, &config, seed, &mut out)?,
        Command::Compare(a) => compare(a, &config, seed, &mut out)?,
        Command::Selfcheck => selfcheck(seed, &mut out)?,
    }
    write_manifest(&mut out, &cli.command, seed, seed_source, &config, &inputs)
}

fn input_files(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Synth(_) | Command::Selfcheck => Vec::new(),
        Command::Train(a) => vec![a.data.clone()],
        Command::Sweep(a) => vec![a.data.clone()],
        Command::PeriodStudy(a) => vec![a.data.clone()],
        Command::Deploy(a) => [&a.model, &a.reference].into_iter().chain(&a.data).cloned().collect(),
        Command::Compare(a) => std::iter::once(&a.data).chain(&a.turbines).cloned().collect(),
    }
}

fn apply_flags(cmd: &Command, cfg: &mut Config) -> Result<()> {
    let training = match cmd {
        Command::Train(a) => {
            if let Some(id) = a.inputs {
                cfg.input_config = InputConfig::new(id).map_err(|e| Error::Usage(e.to_string()))?;
            }
            Some(&a.training)
        }
        Command::Sweep(a) => Some(&a.training),
        Command::PeriodStudy(a) => {
            if !a.periods.is_empty() {
                cfg.period_months = a.periods.clone();
            }
            Some(&a.training)
        }
        Command::Compare(a) => Some(&a.training),
        Command::Deploy(a) => {
            if let Some(n) = a.forward_runs {
                cfg.report.forward_runs = n;
            }
            if let Some(b) = a.bins {
                cfg.report.histogram_bins = b;
            }
            None
        }
        Command::Synth(a) => {
            if let Some(m) = a.months {
                cfg.farm.months = m;
            }
            None
        }
        Command::Selfcheck => None,
    };
    if let Some(t) = training {
        if let Some(e) = t.epochs {
            cfg.dnn.max_epochs = e;
            cfg.bnn.max_epochs = e;
        }
        if let Some(n) = t.forward_runs {
            cfg.report.forward_runs = n;
        }
    }
    Ok(())
}

fn write_manifest(
    out: &mut OutputDir,
    command: &Command,
    seed: u64,
    seed_source: SeedSource,
    config: &Config,
    inputs: &[PathBuf],
) -> Result<()> {
    let digest = |p: &Path, shown: String| -> Result<FileDigest> {
        Ok(FileDigest {
            path: shown,
            sha256: sha256_file(p)?,
        })
    };
    let input_digests = inputs
        .iter()
        .map(|p| digest(p, p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let output_digests = out
        .written()
        .iter()
        .map(|name| digest(&out.root().join(name), name.clone()))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        seed_source,
        config,
        inputs: input_digests,
        outputs: output_digests,
    };
    out.json(MANIFEST_FILE, &manifest)
}

fn load(path: &Path) -> Result<Dataset> {
    let loaded = read_dataset(path)?;
    if loaded.dropped > 0 {
        println!("{}: dropped {} rows with missing values", path.display(), loaded.dropped);
    }
    if loaded.dataset.is_empty() {
        return Err(Error::invalid(format!("{}: no complete rows", path.display())));
    }
    Ok(loaded.dataset)
}

fn synth(a: &SynthArgs, cfg: &Config, out: &mut OutputDir) -> Result<()> {
    let farm = synth_farm(&cfg.farm)?;
    out.json("farm.json", &cfg.farm)?;
    for (index, ds) in farm.iter().enumerate() {
        out.dataset(&format!("{}.csv", ds.turbine_id()), ds)?;
        for &ts in ds.timestamps().iter().take(a.series) {
            let series = synth_load_series(&cfg.farm, index, ts)?;
            for (label, s) in LABEL_COLUMNS.iter().zip(&series) {
                out.load_series(&format!("series/{}/{ts}_{label}.csv", ds.turbine_id()), s)?;
            }
        }
        println!("{}: {} rows", ds.turbine_id(), ds.len());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Evaluation {
    kind: ModelKind,
    input_config: u8,
    train_rows: usize,
    test_rows: usize,
    epochs: usize,
    best_epoch: Option<usize>,
    channels: Vec<String>,
    point_errors: Vec<fleetwise_core::metrics::PointErrors>,
    expected_ll: Option<f64>,
    mean_cov_mu: Option<f64>,
}

fn train(a: &TrainArgs, cfg: &Config, seed: u64, out: &mut OutputDir) -> Result<()> {
    let ds = load(&a.data)?;
    let (train, test) = workflow::train_test_split(&ds, cfg, seed)?;
    let t = workflow::train_model(&train, a.kind, cfg.input_config, cfg, seed)?;
    let ens_seed = workflow::ensemble_seed(seed);
    let (pred, ell, cov) = match &t.network {
        Network::Dnn(_) => (workflow::point_predictions(&t.bundle, &t.network, &test, 1, ens_seed)?, None, None),
        Network::Bnn(net) => {
            let s = workflow::run_ensemble(&t.bundle, net, &test, cfg.report.forward_runs, ens_seed)?;
            let defined: Vec<f64> = s.decomposition.cov_mu.iter().flatten().copied().collect();
            let cov = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            (s.decomposition.expected_mu_matrix(), s.expected_log_likelihood, cov)
        }
    };
    let evaluation = Evaluation {
        kind: a.kind,
        input_config: cfg.input_config.id(),
        train_rows: train.len(),
        test_rows: test.len(),
        epochs: t.history.stopped_epoch,
        best_epoch: t.history.best_epoch,
        channels: t.bundle.label_columns.clone(),
        point_errors: workflow::channel_errors(&t.bundle, &pred, &test)?,
        expected_ll: ell,
        mean_cov_mu: cov,
    };
    out.json("model.json", &t.bundle)?;
    out.dataset("train.csv", &train)?;
    out.dataset("test.csv", &test)?;
    export::history(out, "history.csv", &t.history)?;
    if let Some(w) = &t.weight_stats {
        export::weight_stats(out, "weight_stats.csv", w)?;
    }
    out.json("evaluation.json", &evaluation)?;
    for (c, e) in evaluation.channels.iter().zip(&evaluation.point_errors) {
        println!("{c}: MAE {:.4} RMSE {:.4} percent error {:?}", e.mae, e.rmse, e.percent_error);
    }
    Ok(())
}

fn sweep(a: &SweepArgs, cfg: &Config, seed: u64, out: &mut OutputDir) -> Result<()> {
    let ds = load(&a.data)?;
    let configs = if a.configs.is_empty() {
        InputConfig::all().collect()
    } else {
        a.configs
            .iter()
            .map(|&id| InputConfig::new(id).map_err(|e| Error::Usage(e.to_string())))
            .collect::<Result<Vec<_>>>()?
    };
    let result = workflow::input_sweep(&ds, &configs, &a.kinds, cfg, seed)?;
    export::sweep(out, &result)?;
    println!("{} runs", result.entries.len());
    Ok(())
}

fn period(a: &PeriodArgs, cfg: &Config, seed: u64, out: &mut OutputDir) -> Result<()> {
    let ds = load(&a.data)?;
    let (pool, test) = workflow::train_test_split(&ds, cfg, seed)?;
    let result = workflow::period_study(&pool, &cfg.period_months, &test, cfg, seed)?;
    export::period_study(out, &result)?;
    for e in &result.entries {
        println!(
            "{:>3} months: {:>6} rows, mean cov_mu {:?}, expected ll {:?}",
            e.months, e.rows_used, e.mean_cov_mu, e.expected_ll
        );
    }
    Ok(())
}

fn deploy(a: &DeployArgs, cfg: &Config, seed: u64, out: &mut OutputDir) -> Result<()> {
    let bundle: ModelBundle = read_json(&a.model)?;
    let net = bundle.bnn()?;
    let reference = load(&a.reference)?;
    let turbines = a.data.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let reports = workflow::deploy_farm(&bundle, &net, &turbines, &reference, &cfg.report, workflow::ensemble_seed(seed))?;
    export::deployment(out, &reports)?;
    for r in &reports {
        println!(
            "{}: mean cov_mu {:?}, mean r_min {:.4}, expected ll {:?}",
            r.turbine_id, r.mean_cov_mu, r.mean_r_min, r.expected_log_likelihood
        );
    }
    Ok(())
}

fn compare(a: &CompareArgs, cfg: &Config, seed: u64, out: &mut OutputDir) -> Result<()> {
    let ds = load(&a.data)?;
    let (train, test) = workflow::train_test_split(&ds, cfg, seed)?;
    let test = test.with_turbine_id(&format!("{}_test", ds.turbine_id()));
    let turbines = a.turbines.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let (table, models) = workflow::compare_models(&train, &test, &turbines, &a.kinds, cfg, seed)?;
    for m in &models {
        out.json(&format!("models/{}.json", m.bundle.kind), &m.bundle)?;
    }
    export::comparison(out, &table)?;
    for t in &table.turbines {
        for m in &t.models {
            println!("{} {}: percent error {:?}, mean cov_mu {:?}", t.turbine_id, m.kind, m.percent_error, m.mean_cov_mu);
        }
    }
    Ok(())
}

fn selfcheck(seed: u64, out: &mut OutputDir) -> Result<()> {
    let report = workflow::selfcheck(seed)?;
    export::selfcheck(out, &report)?;
    for c in &report.checks {
        println!(
            "[{}] {} worst {:.3e} (tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance
        );
    }
    if !report.passed {
        return Err(Error::Core(fleetwise_core::Error::NonFinite(
            "selfcheck failed; see selfcheck.json".into(),
        )));
    }
    Ok(())
}
