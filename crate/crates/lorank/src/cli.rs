//! Command-line interface. Every command reads its inputs, delegates to
//! `lorank_core`, and writes its results plus a `manifest.json` into the
//! directory given by `--out`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lorank_core::analysis::{bound_terms, spectrum_report, BoundConstants, BoundInputs, ConcentrationNorm};
use lorank_core::data::{make_splits, synth_planted_subspace, LabeledDataset, PlantedSubspace, SplitFractions};
use lorank_core::lrfl::{train, OptimizerKind, Preset, TrainConfig};
use lorank_core::metrics::{evaluate, EvalReport};
use lorank_core::model::{extract_features, predict_proba, ExtractorSpec};
use lorank_core::tuning::{self, GridSpec, TuneResult};
use lorank_core::DenseMatrix;
use serde::{Deserialize, Serialize};

use crate::io::{load_dataset, read_matrix, write_matrix, Format};
use crate::manifest::{digests, RunManifest};
use crate::{checkpoint, json, CliError};

pub const THREADS_ENV: &str = "LORANK_THREADS";
pub const TRAIN_LOG_FILE: &str = "trainlog.jsonl";

#[derive(Debug, Parser)]
#[command(
    name = "lorank",
    version,
    about = "Low-rank feature learning and spectral diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train a classifier with the truncated nuclear norm penalty.
    Train(TrainArgs),
    /// Cross-validate the rank ratio and regularization weight.
    Tune(TuneArgs),
    /// Eigen-projection, concentration and kernel spectrum of a feature matrix.
    Spectrum(SpectrumArgs),
    /// Terms of the generalization bound for a feature matrix.
    Bound(BoundArgs),
    /// Per-class AUC, mean AUC and accuracy of predictions.
    Eval(EvalArgs),
    /// Generate a planted-subspace dataset.
    Synth(SynthArgs),
    /// Test mean AUC as a function of the rank ratio.
    Sweep(SweepArgs),
    /// Baseline vs regularized training on shrinking training subsets.
    SmallData(SmallDataArgs),
    /// Re-run the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Tune(_) => "tune",
            Command::Spectrum(_) => "spectrum",
            Command::Bound(_) => "bound",
            Command::Eval(_) => "eval",
            Command::Synth(_) => "synth",
            Command::Sweep(_) => "sweep",
            Command::SmallData(_) => "small-data",
            Command::Replay(_) => "replay",
        }
    }

    fn out_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Train(a) => Some(&mut a.out),
            Command::Tune(a) => Some(&mut a.out),
            Command::Spectrum(a) => Some(&mut a.out),
            Command::Bound(a) => Some(&mut a.out),
            Command::Eval(a) => Some(&mut a.out),
            Command::Synth(a) => Some(&mut a.out),
            Command::Sweep(a) => Some(&mut a.out),
            Command::SmallData(a) => Some(&mut a.out),
            Command::Replay(_) => None,
        }
    }

    /// Makes every input path absolute so the recorded invocation does not
    /// depend on the working directory.
    fn absolutize(&mut self) -> Result<(), CliError> {
        let abs = |p: &mut PathBuf| -> Result<(), CliError> {
            *p = std::path::absolute(&*p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            Ok(())
        };
        let opt = |p: &mut Option<PathBuf>| -> Result<(), CliError> {
            if let Some(p) = p {
                abs(p)?;
            }
            Ok(())
        };
        match self {
            Command::Train(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.train.config)?;
            }
            Command::Tune(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.train.config)?;
                opt(&mut a.grid)?;
            }
            Command::Spectrum(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.checkpoint)?;
            }
            Command::Bound(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.checkpoint)?;
            }
            Command::Eval(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.checkpoint)?;
                opt(&mut a.scores)?;
            }
            Command::Sweep(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.train.config)?;
            }
            Command::SmallData(a) => {
                a.data.absolutize(abs)?;
                opt(&mut a.train.config)?;
            }
            Command::Synth(_) | Command::Replay(_) => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Feature matrix, one example per row.
    #[arg(long)]
    pub features: PathBuf,
    /// Binary label matrix, one column per class.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Skip the first CSV line; for labels it supplies the class names.
    #[arg(long)]
    pub header: bool,
}

impl DataArgs {
    fn absolutize(&mut self, abs: impl Fn(&mut PathBuf) -> Result<(), CliError>) -> Result<(), CliError> {
        abs(&mut self.features)?;
        abs(&mut self.labels)
    }

    fn load(&self) -> Result<LabeledDataset, CliError> {
        load_dataset(&self.features, &self.labels, self.format, self.header)
    }

    fn paths(&self) -> Vec<PathBuf> {
        vec![self.features.clone(), self.labels.clone()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerArg {
    Adam,
    SgdMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorArg {
    Identity,
    Linear,
    Mlp,
}

/// Training settings. Values come from the defaults, then the `--config`
/// file, then `--preset`, then the individual flags.
#[derive(Debug, Clone, PartialEq, Default, Args, Serialize, Deserialize)]
pub struct TrainFlags {
    /// JSON file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named (gamma, eta) preset: nih, covidx or chexpert.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Final learning rate of the cosine schedule.
    #[arg(long)]
    pub lr_final: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Rank ratio; the penalty acts on singular values past ceil(gamma * min(n, d)).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Weight of the low-rank penalty.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Epochs between singular vector refreshes.
    #[arg(long)]
    pub refresh_period: Option<usize>,
    #[arg(long, value_enum)]
    pub extractor: Option<ExtractorArg>,
    /// Hidden width of the mlp extractor.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Output width of the extractor (defaults to the input width).
    #[arg(long)]
    pub out_dim: Option<usize>,
    /// Train only the head.
    #[arg(long)]
    pub freeze_extractor: bool,
}

pub fn read_config(path: &Path) -> Result<TrainConfig, CliError> {
    let text = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

impl TrainFlags {
    pub fn resolve(&self) -> Result<TrainConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => read_config(path)?,
            None => TrainConfig::default(),
        };
        if let Some(name) = &self.preset {
            let preset = Preset::from_name(name).ok_or_else(|| {
                let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                CliError::config(format!("unknown preset {name:?} (known: {})", known.join(", ")))
            })?;
            c = c.with_preset(preset);
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = self.$flag { c.$field = v; }
            )*};
        }
        set!(seed => seed, epochs => epochs, batch_size => batch_size, lr => learning_rate_init,
             lr_final => learning_rate_final, momentum => momentum, weight_decay => weight_decay,
             gamma => gamma, eta => eta_reg, refresh_period => refresh_period);
        if let Some(o) = self.optimizer {
            c.optimizer = match o {
                OptimizerArg::Adam => OptimizerKind::Adam,
                OptimizerArg::SgdMomentum => OptimizerKind::SgdMomentum,
            };
        }
        if self.freeze_extractor {
            c.freeze_extractor = true;
        }
        let current_out = match c.extractor {
            ExtractorSpec::Identity => None,
            ExtractorSpec::Linear { out_dim } | ExtractorSpec::Mlp { out_dim, .. } => out_dim,
        };
        let out_dim = self.out_dim.or(current_out);
        c.extractor = match (self.extractor, c.extractor) {
            (Some(ExtractorArg::Identity), _) => ExtractorSpec::Identity,
            (Some(ExtractorArg::Linear), _) => ExtractorSpec::Linear { out_dim },
            (Some(ExtractorArg::Mlp), current) => {
                let hidden = match (self.hidden, current) {
                    (Some(h), _) | (None, ExtractorSpec::Mlp { hidden: h, .. }) => h,
                    _ => return Err(CliError::config("the mlp extractor needs --hidden")),
                };
                ExtractorSpec::Mlp { hidden, out_dim }
            }
            (None, ExtractorSpec::Identity) => ExtractorSpec::Identity,
            (None, ExtractorSpec::Linear { .. }) => ExtractorSpec::Linear { out_dim },
            (None, ExtractorSpec::Mlp { hidden, .. }) => ExtractorSpec::Mlp {
                hidden: self.hidden.unwrap_or(hidden),
                out_dim,
            },
        };
        c.validate()?;
        Ok(c)
    }

    fn paths(&self) -> Vec<PathBuf> {
        self.config.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Base training settings shared by every grid cell.
    #[command(flatten)]
    pub train: TrainFlags,
    /// JSON grid: gamma_values, eta_values, folds, cv_fraction, seed, cv_epochs.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Map inputs through a trained extractor first.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = NormArg::L1)]
    pub norm: NormArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Gradient-descent step size.
    #[arg(long)]
    pub lr: f64,
    /// Number of gradient-descent iterations.
    #[arg(long, default_value_t = 1)]
    pub iterations: u32,
    /// Confidence parameter: the bound holds with probability 1 - exp(-x).
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c3: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Trained model to score the features with.
    #[arg(long, conflicts_with = "scores")]
    pub checkpoint: Option<PathBuf>,
    /// Precomputed scores, one column per class.
    #[arg(long, required_unless_present = "checkpoint")]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 5)]
    pub k_signal: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write a split plan holding out this share for testing.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Share held out for validation in the split plan.
    #[arg(long, default_value_t = 0.0)]
    pub val_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Rank ratios to train with.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
    /// Share of rows held out for testing.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SmallDataArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Training-set fractions to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25,0.5")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the re-run.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses arguments, runs the command and returns the process exit code.
/// Failures print a single line to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lorank: {e}");
            e.exit_code()
        }
    }
}

pub fn run(mut command: Command) -> Result<(), CliError> {
    if let Command::Replay(args) = command {
        return replay(&args);
    }
    command.absolutize()?;
    let start = Instant::now();
    let out = command.out_mut().expect("non-replay commands have --out").clone();
    fs::create_dir_all(&out).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    let outcome = match &command {
        Command::Train(a) => cmd_train(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SmallData(a) => cmd_small_data(a),
        Command::Replay(_) => unreachable!("handled above"),
    };
    let (run, error) = match outcome {
        Ok(run) => (run, None),
        Err(Failure {
            partial: Some(run),
            error,
        }) => (*run, Some(error)),
        Err(Failure { partial: None, error }) => return Err(error),
    };
    let manifest =
        RunManifest::new(command, run.config, run.seed).finish(digests(&run.inputs)?, run.outputs, start.elapsed());
    manifest.write(&out)?;
    match error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let manifest = RunManifest::read(&args.manifest)?;
    let mut command = manifest.invocation;
    match command.out_mut() {
        Some(out) => *out = args.out.clone(),
        None => return Err(CliError::config("a manifest cannot record a replay")),
    }
    run(command)
}

/// What a command did, for the manifest.
struct Completed {
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

/// A failed command, possibly after writing partial results.
struct Failure {
    partial: Option<Box<Completed>>,
    error: CliError,
}

impl<E: Into<CliError>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            partial: None,
            error: e.into(),
        }
    }
}

type CmdResult = Result<Completed, Failure>;

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(CliError::data)
}

fn write_file(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<String, CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(name.to_string())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String, CliError> {
    write_file(dir, name, json::to_vec(value).map_err(CliError::data)?)
}

fn cmd_train(a: &TrainArgs) -> CmdResult {
    let config = a.train.resolve()?;
    let dataset = a.data.load()?;
    let mut inputs = a.data.paths();
    inputs.extend(a.train.paths());
    let mut completed = Completed {
        config: to_value(&config)?,
        seed: Some(config.seed),
        inputs,
        outputs: Vec::new(),
    };
    let (params, log, error) = match train(&dataset, &config) {
        Ok((params, log)) => (params, log, None),
        Err(failure) => match failure.last_good {
            Some(last) => (last.params, last.log, Some(CliError::from(failure.error))),
            None => return Err(failure.error.into()),
        },
    };
    let result = (|| -> Result<Vec<String>, CliError> {
        let mut files = vec![write_file(
            &a.out,
            TRAIN_LOG_FILE,
            json::to_lines(&log.records).map_err(CliError::data)?,
        )?];
        files.extend(checkpoint::save(
            &a.out,
            &params,
            dataset.input_dim(),
            config.seed,
            log.records.len(),
        )?);
        Ok(files)
    })();
    completed.outputs = result?;
    match error {
        None => Ok(completed),
        Some(error) => Err(Failure {
            partial: Some(Box::new(completed)),
            error,
        }),
    }
}

pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Runs the grid on up to `threads` worker threads. The result does not
/// depend on the thread count.
pub fn tune_parallel(
    dataset: &LabeledDataset,
    grid: &GridSpec,
    base: &TrainConfig,
    threads: usize,
) -> Result<TuneResult, CliError> {
    let plan = tuning::prepare(dataset, grid, base)?;
    let slots: Vec<Mutex<Option<Result<f64, tuning::TuneError>>>> =
        plan.jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.min(plan.jobs.len()).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&job) = plan.jobs.get(i) else { break };
                let outcome = tuning::run_job(dataset, &plan, job);
                *slots[i].lock().expect("no panics while holding the lock") = Some(outcome);
            });
        }
    });
    let outcomes: Vec<_> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("unpoisoned").expect("every job ran"))
        .collect();
    Ok(tuning::aggregate(&plan, &outcomes)?)
}

fn read_grid(path: &Path) -> Result<GridSpec, CliError> {
    let text = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn cmd_tune(a: &TuneArgs) -> CmdResult {
    let base = a.train.resolve()?;
    let grid = match &a.grid {
        Some(path) => read_grid(path)?,
        None => GridSpec {
            seed: base.seed,
            ..GridSpec::default()
        },
    };
    grid.validate()?;
    let threads = thread_count()?;
    let dataset = a.data.load()?;
    let result = tune_parallel(&dataset, &grid, &base, threads)?;

    let mut csv = String::from("gamma,eta,mean_score");
    for f in 0..grid.folds {
        write!(csv, ",fold{f}").expect("string write");
    }
    csv.push('\n');
    let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for cell in &result.cells {
        write!(csv, "{},{},{}", cell.gamma, cell.eta, fmt(cell.mean_score)).expect("string write");
        for s in &cell.fold_scores {
            write!(csv, ",{}", fmt(*s)).expect("string write");
        }
        csv.push('\n');
    }
    let outputs = vec![
        write_json(&a.out, "tune.json", &result)?,
        write_file(&a.out, "tune_cells.csv", csv)?,
    ];
    let mut inputs = a.data.paths();
    inputs.extend(a.train.paths());
    inputs.extend(a.grid.iter().cloned());
    Ok(Completed {
        config: serde_json::json!({ "base": to_value(&base)?, "grid": to_value(&grid)? }),
        seed: Some(grid.seed),
        inputs,
        outputs,
    })
}

fn features_for(data: &LabeledDataset, ckpt: Option<&Path>) -> Result<DenseMatrix, CliError> {
    match ckpt {
        None => Ok(data.features().clone()),
        Some(path) => {
            let (_, params) = checkpoint::load(path)?;
            Ok(extract_features(&params, data.features())?)
        }
    }
}

fn checkpoint_inputs(ckpt: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let Some(path) = ckpt else { return Ok(Vec::new()) };
    let (dir, file) = if path.is_dir() {
        (path.to_path_buf(), path.join(checkpoint::CHECKPOINT_FILE))
    } else {
        (
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            path.to_path_buf(),
        )
    };
    let (manifest, _) = checkpoint::load(path)?;
    let mut paths = vec![file];
    paths.extend(manifest.tensors.iter().map(|t| dir.join(&t.file)));
    Ok(paths)
}

fn cmd_spectrum(a: &SpectrumArgs) -> CmdResult {
    let data = a.data.load()?;
    let f = features_for(&data, a.checkpoint.as_deref())?;
    let norm = match a.norm {
        NormArg::L1 => ConcentrationNorm::L1,
        NormArg::L2 => ConcentrationNorm::L2,
    };
    let report = spectrum_report(&f, data.labels(), norm)?;
    let mut csv = String::from("rank,eigenvalue,projection,concentration\n");
    for i in 0..report.eigenvalues.len() {
        writeln!(
            csv,
            "{},{},{},{}",
            i + 1,
            report.eigenvalues[i],
            report.eigen_projection[i],
            report.concentration[i]
        )
        .expect("string write");
    }
    let outputs = vec![
        write_file(&a.out, "spectrum.csv", csv)?,
        write_json(&a.out, "spectrum.json", &report)?,
    ];
    let mut inputs = a.data.paths();
    inputs.extend(checkpoint_inputs(a.checkpoint.as_deref())?);
    Ok(Completed {
        config: serde_json::json!({ "norm": a.norm }),
        seed: None,
        inputs,
        outputs,
    })
}

fn cmd_bound(a: &BoundArgs) -> CmdResult {
    let data = a.data.load()?;
    let f = features_for(&data, a.checkpoint.as_deref())?;
    let inputs = BoundInputs {
        lr: a.lr,
        iterations: a.iterations,
        x: a.x,
        constants: BoundConstants {
            c1: a.c1,
            c2: a.c2,
            c3: a.c3,
        },
    };
    let terms = bound_terms(&f, data.labels(), inputs)?;
    println!(
        "rank {}  residual {:.6}  optimization {:.6}  complexity {:.6}  confidence {:.6}  total {:.6}",
        terms.rank,
        terms.label_residual,
        terms.optimization_term,
        terms.complexity_term,
        terms.confidence_term,
        terms.total
    );
    let outputs = vec![write_json(&a.out, "bound.json", &terms)?];
    let mut paths = a.data.paths();
    paths.extend(checkpoint_inputs(a.checkpoint.as_deref())?);
    Ok(Completed {
        config: serde_json::json!({
            "lr": a.lr, "iterations": a.iterations, "x": a.x, "c1": a.c1, "c2": a.c2, "c3": a.c3
        }),
        seed: None,
        inputs: paths,
        outputs,
    })
}

/// Fixed-width table: one row per class, then the mean.
pub fn format_eval_table(report: &EvalReport) -> String {
    let width = report
        .class_names
        .iter()
        .map(String::len)
        .chain(["class".len(), "mean".len(), "accuracy".len()])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    writeln!(out, "{:<width$}  {:>8}", "class", "AUC").expect("string write");
    for (name, auc) in report.class_names.iter().zip(&report.per_class_auc) {
        match auc {
            Some(v) => writeln!(out, "{name:<width$}  {:>8.4}", v),
            None => writeln!(out, "{name:<width$}  {:>8}", "n/a"),
        }
        .expect("string write");
    }
    writeln!(out, "{:<width$}  {:>8.4}", "mean", report.mean_auc).expect("string write");
    if let Some(acc) = report.top1_accuracy {
        writeln!(out, "{:<width$}  {:>8.4}", "accuracy", acc).expect("string write");
    }
    out
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let data = a.data.load()?;
    let scores = match (&a.checkpoint, &a.scores) {
        (Some(ckpt), _) => predict_proba(&checkpoint::load(ckpt)?.1, data.features())?,
        (None, Some(path)) => read_matrix(path, a.data.format, a.data.header)?,
        (None, None) => return Err(CliError::config("eval needs --checkpoint or --scores").into()),
    };
    let report = evaluate(&scores, data.labels(), data.class_names())?;
    print!("{}", format_eval_table(&report));
    let outputs = vec![write_json(&a.out, "eval.json", &report)?];
    let mut inputs = a.data.paths();
    inputs.extend(a.scores.iter().cloned());
    inputs.extend(checkpoint_inputs(a.checkpoint.as_deref())?);
    Ok(Completed {
        config: serde_json::json!({}),
        seed: None,
        inputs,
        outputs,
    })
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let p = PlantedSubspace {
        n: a.n,
        d: a.d,
        classes: a.classes,
        k_signal: a.k_signal,
        noise_scale: a.noise_scale,
        seed: a.seed,
    };
    let data = synth_planted_subspace(p)?;
    let ext = a.format.extension();
    let features = format!("features.{ext}");
    let labels = format!("labels.{ext}");
    write_matrix(&a.out.join(&features), data.features(), a.format)?;
    write_matrix(&a.out.join(&labels), data.labels(), a.format)?;
    let mut outputs = vec![features, labels];
    if let Some(test) = a.test_fraction {
        let plan = make_splits(
            data.len(),
            a.seed,
            SplitFractions {
                val: a.val_fraction,
                test,
                train_subsample: 1.0,
            },
        )?;
        outputs.push(write_json(&a.out, "split.json", &plan)?);
    }
    Ok(Completed {
        config: serde_json::json!({
            "n": a.n, "d": a.d, "classes": a.classes, "k_signal": a.k_signal,
            "noise_scale": a.noise_scale, "test_fraction": a.test_fraction, "val_fraction": a.val_fraction
        }),
        seed: Some(a.seed),
        inputs: Vec::new(),
        outputs,
    })
}

fn train_test(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), CliError> {
    let plan = make_splits(
        data.len(),
        seed,
        SplitFractions {
            test: test_fraction,
            ..SplitFractions::default()
        },
    )?;
    if plan.test.is_empty() {
        return Err(CliError::config("test split is empty; raise --test-fraction"));
    }
    Ok((data.subset(&plan.train)?, data.subset(&plan.test)?))
}

fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let base = a.train.resolve()?;
    let data = a.data.load()?;
    let (tr, te) = train_test(&data, a.test_fraction, base.seed)?;
    let rows = tuning::rank_sweep(&tr, &te, &a.gammas, &base)?;
    let mut csv = String::from("gamma,rank_t,mean_auc\n");
    for r in &rows {
        writeln!(csv, "{},{},{}", r.gamma, r.rank_t, r.mean_auc).expect("string write");
    }
    let mut inputs = a.data.paths();
    inputs.extend(a.train.paths());
    Ok(Completed {
        config: serde_json::json!({ "base": to_value(&base)?, "gammas": a.gammas, "test_fraction": a.test_fraction }),
        seed: Some(base.seed),
        inputs,
        outputs: vec![write_file(&a.out, "sweep.csv", csv)?],
    })
}

fn cmd_small_data(a: &SmallDataArgs) -> CmdResult {
    let base = a.train.resolve()?;
    let data = a.data.load()?;
    let (tr, te) = train_test(&data, a.test_fraction, base.seed)?;
    let rows = tuning::small_data_experiment(&tr, &te, &a.fractions, &base)?;
    let mut csv = String::from("fraction,n_train,baseline_mean_auc,lrfl_mean_auc\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            r.fraction, r.n_train, r.baseline_mean_auc, r.lrfl_mean_auc
        )
        .expect("string write");
    }
    let mut inputs = a.data.paths();
    inputs.extend(a.train.paths());
    Ok(Completed {
        config: serde_json::json!({
            "base": to_value(&base)?, "fractions": a.fractions, "test_fraction": a.test_fraction
        }),
        seed: Some(base.seed),
        inputs,
        outputs: vec![write_file(&a.out, "small_data.csv", csv)?],
    })
}
