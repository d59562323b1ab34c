//! The `drnn` command-line tool: train, evaluate, gradient-check, generate
//! synthetic data and export DoS traces.
//!
//! Flags are parsed by [`Cli`]; [`RunConfig::from_args`] validates them for
//! the chosen command and [`run`] executes it. Every file is written to a
//! temporary name and renamed into place, and a command computes all of its
//! results before writing the first file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use drnn::cell::{forward_sequence, CellParams};
use drnn::data::{
    load_dataset, load_pca, pca_fit, pca_transform, save_dataset, save_pca, split_by_subject, synth_spike_dataset,
    Dataset, PcaModel, SpikeConfig,
};
use drnn::params_io::{load_params, save_params};
use drnn::training::gradcheck::{run_gradcheck, GradCheckConfig, GradCheckResult};
use drnn::training::{
    evaluate, format_loss_curve, train, ConfusionMatrix, LossMode, TrainConfig, Truncation, DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
};
use drnn::write_atomic;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or invalid flags; nothing was computed.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("no sequence with id {0:?} in the dataset")]
    UnknownSequence(String),
    #[error("model does not fit the dataset: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Core(#[from] drnn::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

#[derive(Debug, Parser)]
#[command(name = "drnn", version, about = "Differential RNN sequence classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Train a model and write it with its loss curve.
    Train(Flags),
    /// Evaluate a model, or run repeated split-train-evaluate trials.
    Eval(Flags),
    /// Check the backward pass against finite differences.
    Gradcheck(Flags),
    /// Generate a synthetic spike dataset.
    Synth(Flags),
    /// Write per-frame velocity and acceleration norms of one sequence.
    DosTrace(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Final,
    Cumulative,
}

impl From<LossArg> for LossMode {
    fn from(arg: LossArg) -> Self {
        match arg {
            LossArg::Final => LossMode::SequenceFinal,
            LossArg::Cumulative => LossMode::PerFrameCumulative,
        }
    }
}

/// Flags shared by all commands; each command reads the ones it needs.
#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file (written by train, read by eval and dos-trace).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file or, for eval, output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 64)]
    pub state_dim: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Final)]
    pub loss: LossArg,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reduce frames with PCA keeping this fraction of the variance.
    #[arg(long)]
    pub pca_energy: Option<f64>,
    /// Fraction of subjects used for training.
    #[arg(long)]
    pub split_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long)]
    pub sequence_id: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub synth_n: usize,
    #[arg(long, default_value_t = 20)]
    pub synth_t: usize,
    #[arg(long, default_value_t = 16)]
    pub synth_d: usize,
    #[arg(long, default_value_t = 4)]
    pub synth_k: usize,
    #[arg(long, default_value_t = 5.0)]
    pub spike_mag: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise_sigma: f64,
    /// Test hook: corrupt the analytic gradient of this gradcheck row.
    #[arg(long, hide = true)]
    pub corrupt_check: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Gradcheck,
    Synth,
    DosTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub fraction: f64,
    pub seed: u64,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model_path: Option<PathBuf>,
    pub data_path: Option<PathBuf>,
    pub out_path: Option<PathBuf>,
    pub order: usize,
    pub state_dim: usize,
    pub loss_mode: LossMode,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub pca_energy: Option<f64>,
    pub split: Option<SplitSpec>,
    pub trials: usize,
    pub sequence_id: Option<String>,
    pub synth: SpikeConfig,
    pub corrupt_check: Option<usize>,
}

impl RunConfig {
    pub fn from_args(args: CommandArgs) -> Result<Self> {
        let (command, f) = match args {
            CommandArgs::Train(f) => (Command::Train, f),
            CommandArgs::Eval(f) => (Command::Eval, f),
            CommandArgs::Gradcheck(f) => (Command::Gradcheck, f),
            CommandArgs::Synth(f) => (Command::Synth, f),
            CommandArgs::DosTrace(f) => (Command::DosTrace, f),
        };
        let config = RunConfig {
            command,
            model_path: f.model,
            data_path: f.data,
            out_path: f.out,
            order: f.order,
            state_dim: f.state_dim,
            loss_mode: f.loss.into(),
            learning_rate: f.lr,
            epochs: f.epochs,
            seed: f.seed,
            pca_energy: f.pca_energy,
            split: f.split_fraction.map(|fraction| SplitSpec {
                fraction,
                seed: f.split_seed,
            }),
            trials: f.trials,
            sequence_id: f.sequence_id,
            synth: SpikeConfig {
                num_sequences: f.synth_n,
                frames: f.synth_t,
                dim: f.synth_d,
                classes: f.synth_k,
                spike_magnitude: f.spike_mag,
                noise_sigma: f.noise_sigma,
                seed: f.seed,
                ..SpikeConfig::default()
            },
            corrupt_check: f.corrupt_check,
        };
        config.validate()?;
        Ok(config)
    }

    /// Parses a full argument list, `argv[0]` included.
    pub fn parse_from<I, T>(argv: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
        Self::from_args(cli.command)
    }

    fn name(&self) -> &'static str {
        match self.command {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Gradcheck => "gradcheck",
            Command::Synth => "synth",
            Command::DosTrace => "dos-trace",
        }
    }

    fn require<'a, T>(&self, value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| usage(format!("{flag} is required for {}", self.name())))
    }

    /// `eval` without a model trains its own on split training sides.
    fn trial_mode(&self) -> bool {
        self.command == Command::Eval && self.model_path.is_none()
    }

    /// Checks that the command has every field it needs and that values are in range.
    pub fn validate(&self) -> Result<()> {
        match self.command {
            Command::Train => {
                self.require(&self.data_path, "--data")?;
                self.require(&self.model_path, "--model")?;
            }
            Command::Eval => {
                self.require(&self.data_path, "--data")?;
                self.require(&self.out_path, "--out")?;
                if self.trials > 1 && self.model_path.is_some() {
                    return Err(usage("--model cannot be combined with --trials"));
                }
                if self.model_path.is_none() && self.split.is_none() {
                    return Err(usage(if self.trials > 1 {
                        "--split-fraction is required when --trials is greater than 1"
                    } else {
                        "--model is required for eval, or --split-fraction to train and evaluate on a split"
                    }));
                }
            }
            Command::Gradcheck => {
                if let Some(i) = self.corrupt_check {
                    if i >= 12 {
                        return Err(usage(format!("--corrupt-check must be below 12, got {i}")));
                    }
                }
            }
            Command::Synth => {
                self.require(&self.out_path, "--out")?;
            }
            Command::DosTrace => {
                self.require(&self.model_path, "--model")?;
                self.require(&self.data_path, "--data")?;
                self.require(&self.sequence_id, "--sequence-id")?;
                self.require(&self.out_path, "--out")?;
            }
        }
        if self.order > drnn::cell::MAX_ORDER {
            return Err(usage(format!("--order must be 0, 1 or 2, got {}", self.order)));
        }
        if self.state_dim == 0 {
            return Err(usage("--state-dim must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(usage(format!("--lr must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(usage("--epochs must be at least 1"));
        }
        if self.trials == 0 {
            return Err(usage("--trials must be at least 1"));
        }
        if let Some(e) = self.pca_energy {
            if !(e > 0.0 && e <= 1.0) {
                return Err(usage(format!("--pca-energy must be in (0, 1], got {e}")));
            }
        }
        if let Some(split) = self.split {
            if !(split.fraction > 0.0 && split.fraction < 1.0) {
                return Err(usage(format!("--split-fraction must be in (0, 1), got {}", split.fraction)));
            }
        }
        if self.command == Command::Synth {
            let s = &self.synth;
            if s.num_sequences == 0 {
                return Err(usage("--synth-n must be at least 1"));
            }
            if s.frames < 4 {
                return Err(usage(format!("--synth-t must be at least 4, got {}", s.frames)));
            }
            if s.dim == 0 {
                return Err(usage("--synth-d must be at least 1"));
            }
            if s.classes < 2 {
                return Err(usage(format!("--synth-k must be at least 2, got {}", s.classes)));
            }
            if !(s.spike_magnitude > 0.0 && s.spike_magnitude.is_finite()) {
                return Err(usage(format!("--spike-mag must be positive, got {}", s.spike_magnitude)));
            }
            if !(s.noise_sigma >= 0.0 && s.noise_sigma.is_finite()) {
                return Err(usage(format!("--noise-sigma must be non-negative, got {}", s.noise_sigma)));
            }
        }
        Ok(())
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            order: self.order,
            state_dim: self.state_dim,
            loss: self.loss_mode,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            truncation: Truncation::TruncatedPaper,
            seed,
            shuffle_seed: seed,
            ..TrainConfig::default()
        }
    }
}

/// What a command printed and whether its contract was met.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub success: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, success: true }
    }
}

pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    match config.command {
        Command::Train => cmd_train(config),
        Command::Eval => cmd_eval(config),
        Command::Gradcheck => cmd_gradcheck(config),
        Command::Synth => cmd_synth(config),
        Command::DosTrace => cmd_dos_trace(config),
    }
}

/// `<model>.pca`, where train stores the projection it fitted.
pub fn pca_sidecar(model: &Path) -> PathBuf {
    with_suffix(model, ".pca")
}

/// `<model>.loss.tsv`, the default loss-curve path.
pub fn loss_curve_path(model: &Path) -> PathBuf {
    with_suffix(model, ".loss.tsv")
}

/// `<dataset>.spikes.tsv`, the synth ground-truth sidecar.
pub fn spike_sidecar(dataset: &Path) -> PathBuf {
    with_suffix(dataset, ".spikes.tsv")
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Fits PCA on `train` frames and applies it to both sets.
fn reduce(train: &Dataset, others: &[&Dataset], energy: f64) -> Result<(PcaModel, Dataset, Vec<Dataset>)> {
    let model = pca_fit(&train.stacked_frames(), energy)?;
    let project = |ds: &Dataset| ds.map_frames(|frames| pca_transform(&model, frames));
    let reduced_train = project(train)?;
    let reduced = others.iter().map(|ds| project(ds)).collect::<drnn::Result<Vec<_>>>()?;
    Ok((model, reduced_train, reduced))
}

pub fn cmd_train(config: &RunConfig) -> Result<Report> {
    let model_path = config.require(&config.model_path, "--model")?;
    let data = load_dataset(config.require(&config.data_path, "--data")?)?;
    let data = match config.split {
        Some(split) => split_by_subject(&data, split.fraction, split.seed)?.0,
        None => data,
    };
    let (pca, data) = match config.pca_energy {
        Some(energy) => {
            let (model, reduced, _) = reduce(&data, &[], energy)?;
            (Some(model), reduced)
        }
        None => (None, data),
    };

    let start = Instant::now();
    let outcome = train(&data, &config.train_config(config.seed))?;
    let elapsed = start.elapsed().as_secs_f64();

    let curve_path = config.out_path.clone().unwrap_or_else(|| loss_curve_path(model_path));
    save_params(&outcome.params, model_path)?;
    write_atomic(&curve_path, format_loss_curve(&outcome.loss_curve).as_bytes())?;
    let sidecar = pca_sidecar(model_path);
    match &pca {
        Some(model) => save_pca(model, &sidecar)?,
        None if sidecar.exists() => std::fs::remove_file(&sidecar).map_err(drnn::Error::from)?,
        None => {}
    }
    let final_loss = outcome.loss_curve.last().copied().unwrap_or(f64::NAN);
    Ok(Report::ok(format!(
        "epochs={} final_loss={final_loss:.6} time_s={elapsed:.3}\n",
        outcome.loss_curve.len()
    )))
}

/// Confusion counts as CSV: header `class,1,..,k`, one row per true class.
pub fn confusion_csv(confusion: &ConfusionMatrix) -> String {
    matrix_csv(confusion.counts().iter().map(|row| row.iter().map(u64::to_string).collect()))
}

/// Row-normalized matrix as CSV with the same header.
pub fn rates_csv(rows: &[Vec<f64>]) -> String {
    matrix_csv(rows.iter().map(|row| row.iter().map(f64::to_string).collect()))
}

fn matrix_csv(rows: impl Iterator<Item = Vec<String>>) -> String {
    let rows: Vec<Vec<String>> = rows.collect();
    let mut out = String::from("class");
    for c in 1..=rows.len() {
        write!(out, ",{c}").unwrap();
    }
    out.push('\n');
    for (r, row) in rows.iter().enumerate() {
        write!(out, "{}", r + 1).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn check_model_fits(params: &CellParams, data: &Dataset) -> Result<()> {
    if params.input_dim() != data.feature_dim || params.output_dim() != data.num_classes {
        return Err(CliError::ModelMismatch(format!(
            "model takes {} features and {} classes, dataset has {} and {}",
            params.input_dim(),
            params.output_dim(),
            data.feature_dim,
            data.num_classes
        )));
    }
    Ok(())
}

/// Loads a model and applies its PCA sidecar, when present, to `data`.
fn load_model_for(model_path: &Path, data: Dataset) -> Result<(CellParams, Dataset)> {
    let params = load_params(model_path)?;
    let sidecar = pca_sidecar(model_path);
    let data = if sidecar.exists() {
        let pca = load_pca(&sidecar)?;
        if pca.input_dim() != data.feature_dim {
            return Err(CliError::ModelMismatch(format!(
                "PCA sidecar takes {} features, dataset has {}",
                pca.input_dim(),
                data.feature_dim
            )));
        }
        data.map_frames(|frames| pca_transform(&pca, frames))?
    } else {
        data
    };
    check_model_fits(&params, &data)?;
    Ok((params, data))
}

pub fn cmd_eval(config: &RunConfig) -> Result<Report> {
    let out_dir = config.require(&config.out_path, "--out")?;
    let data = load_dataset(config.require(&config.data_path, "--data")?)?;
    if config.trial_mode() {
        return eval_trials(config, &data, out_dir);
    }
    let (params, data) = load_model_for(config.require(&config.model_path, "--model")?, data)?;
    let eval = evaluate(&params, &data)?;
    std::fs::create_dir_all(out_dir).map_err(drnn::Error::from)?;
    write_atomic(&out_dir.join("confusion.csv"), confusion_csv(&eval.confusion).as_bytes())?;
    Ok(Report::ok(format!(
        "accuracy={} correct={} total={}\n",
        eval.accuracy,
        eval.confusion.trace(),
        eval.confusion.total()
    )))
}

fn eval_trials(config: &RunConfig, data: &Dataset, out_dir: &Path) -> Result<Report> {
    let split = config.split.expect("validated: trials need a split");
    let mut confusions = Vec::with_capacity(config.trials);
    for r in 0..config.trials as u64 {
        let (train_set, test_set) = split_by_subject(data, split.fraction, split.seed.wrapping_add(r))?;
        let (train_set, test_set) = match config.pca_energy {
            Some(energy) => {
                let (_, tr, mut rest) = reduce(&train_set, &[&test_set], energy)?;
                (tr, rest.remove(0))
            }
            None => (train_set, test_set),
        };
        let outcome = train(&train_set, &config.train_config(config.seed.wrapping_add(r)))?;
        confusions.push(evaluate(&outcome.params, &test_set)?.confusion);
    }

    let k = data.num_classes;
    let mut mean = vec![vec![0.0; k]; k];
    for c in &confusions {
        for (m_row, c_row) in mean.iter_mut().zip(c.row_normalized()) {
            m_row.iter_mut().zip(c_row).for_each(|(m, v)| *m += v);
        }
    }
    mean.iter_mut().flatten().for_each(|m| *m /= confusions.len() as f64);
    let accuracies: Vec<f64> = confusions.iter().map(ConfusionMatrix::accuracy).collect();
    let mean_accuracy = accuracies.iter().sum::<f64>() / accuracies.len() as f64;

    let mut summary = String::from("trial\taccuracy\n");
    let mut text = String::new();
    for (r, a) in accuracies.iter().enumerate() {
        writeln!(summary, "{}\t{a}", r + 1).unwrap();
        writeln!(text, "trial={} accuracy={a}", r + 1).unwrap();
    }
    writeln!(summary, "mean\t{mean_accuracy}").unwrap();
    writeln!(text, "mean_accuracy={mean_accuracy} trials={}", confusions.len()).unwrap();

    std::fs::create_dir_all(out_dir).map_err(drnn::Error::from)?;
    for (r, c) in confusions.iter().enumerate() {
        write_atomic(&out_dir.join(format!("trial-{}.csv", r + 1)), confusion_csv(c).as_bytes())?;
    }
    write_atomic(&out_dir.join("mean_confusion.csv"), rates_csv(&mean).as_bytes())?;
    write_atomic(&out_dir.join("accuracy.tsv"), summary.as_bytes())?;
    Ok(Report::ok(text))
}

fn describe(result: &GradCheckResult) -> String {
    let c = &result.case;
    format!(
        "order={} truncation={} loss={} max_rel_error={:.3e} at={}[{}] {}",
        c.order,
        match c.truncation {
            Truncation::FullBptt => "full",
            Truncation::TruncatedPaper => "truncated",
        },
        match c.mode {
            LossMode::SequenceFinal => "final",
            LossMode::PerFrameCumulative => "cumulative",
        },
        result.discrepancy.max_relative_error,
        result.discrepancy.tensor,
        result.discrepancy.index,
        if result.passed { "PASS" } else { "FAIL" }
    )
}

pub fn cmd_gradcheck(config: &RunConfig) -> Result<Report> {
    let results = run_gradcheck(&GradCheckConfig {
        seed: config.seed,
        corrupt_case: config.corrupt_check,
        ..GradCheckConfig::default()
    })?;
    let mut text = String::new();
    for r in &results {
        writeln!(text, "{}", describe(r)).unwrap();
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(text, "passed={passed}/{}", results.len()).unwrap();
    Ok(Report {
        text,
        success: passed == results.len(),
    })
}

pub fn cmd_synth(config: &RunConfig) -> Result<Report> {
    let out = config.require(&config.out_path, "--out")?;
    let synth = synth_spike_dataset(&config.synth)?;
    save_dataset(&synth.dataset, out)?;
    write_atomic(&spike_sidecar(out), synth.spike_sidecar().as_bytes())?;
    let s = &config.synth;
    Ok(Report::ok(format!(
        "sequences={} frames={} dim={} classes={}\n",
        s.num_sequences, s.frames, s.dim, s.classes
    )))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `t<TAB>‖v_t‖<TAB>‖a_t‖` lines, `t` one-based.
pub fn dos_trace_lines(params: &CellParams, frames: &[Vec<f64>]) -> Result<String> {
    let (_, traces) = forward_sequence(frames, params)?;
    let mut out = String::new();
    for (t, tr) in traces.iter().enumerate() {
        writeln!(out, "{}\t{:.16e}\t{:.16e}", t + 1, norm(&tr.v), norm(&tr.a)).unwrap();
    }
    Ok(out)
}

pub fn cmd_dos_trace(config: &RunConfig) -> Result<Report> {
    let id = config.require(&config.sequence_id, "--sequence-id")?;
    let out = config.require(&config.out_path, "--out")?;
    let data = load_dataset(config.require(&config.data_path, "--data")?)?;
    let (params, data) = load_model_for(config.require(&config.model_path, "--model")?, data)?;
    let seq = data.get(id).ok_or_else(|| CliError::UnknownSequence(id.clone()))?;
    write_atomic(out, dos_trace_lines(&params, &seq.frames)?.as_bytes())?;
    Ok(Report::ok(format!("frames={}\n", seq.frames.len())))
}
