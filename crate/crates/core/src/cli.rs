//! Command-line front end.
//!
//! Every run writes its outputs below `--out-dir`, echoes the resolved
//! configuration there as `<command>.config.json` and updates
//! `manifest.json` with the SHA-256 of every file it wrote. A JSON file given
//! with `--config` supplies defaults for any flag not on the command line;
//! keys are flag names, either at top level or under the subcommand name.
//! `PROXLEARN_SEED` overrides every seed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::admm::{admm_run, AdmmConfig, Shrinkage, TridiagFactorization};
use crate::error::{Error, Result};
use crate::experiments::{
    log_spaced_sigma2, run_ktest_stability, run_noise_sweep, run_scale_once, sha256_hex, snr_improvement,
    KTestConfig, SweepConfig,
};
use crate::learning::{knot_range_from_data, train, TrainConfig, TrainingMode};
use crate::selftest::run_selftest;
use crate::signal::{LevyModel, SignalBatch};
use crate::spline::{recover_penalty, symmetric_grid, ScaledShrinkage, SplineArtifact, SplineMode};

pub const SEED_ENV: &str = "PROXLEARN_SEED";

/// Exit status for a run that completed but failed a validity check.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for unusable arguments or inputs.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug, Serialize)]
#[command(name = "proxlearn", version, about = "Learned convex shrinkage functions for ADMM denoising")]
pub struct Cli {
    /// Directory receiving every output, the resolved config and the manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// JSON file with defaults for flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log per-iteration progress.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Simulate clean/noisy signal pairs.
    Generate(GenerateArgs),
    /// Learn a shrinkage spline from a batch.
    Train(TrainArgs),
    /// Run ADMM with a learned spline on a batch.
    Denoise(DenoiseArgs),
    /// Run an evaluation preset.
    Evaluate(EvaluateArgs),
    /// Rescale a constrained spline to another noise level.
    Scale(ScaleArgs),
    /// Recover the convex penalty of a constrained spline.
    Penalty(PenaltyArgs),
    /// Run the built-in oracle checks.
    Selftest(SelftestArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Train(_) => "train",
            Command::Denoise(_) => "denoise",
            Command::Evaluate(_) => "evaluate",
            Command::Scale(_) => "scale",
            Command::Penalty(_) => "penalty",
            Command::Selftest(_) => "selftest",
        }
    }
}

const SUBCOMMANDS: [&str; 7] = ["generate", "train", "denoise", "evaluate", "scale", "penalty", "selftest"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ModelArg {
    Brownian,
    CompoundPoisson,
}

impl ModelArg {
    fn model(self, lambda: f64) -> Result<LevyModel> {
        match self {
            ModelArg::Brownian => Ok(LevyModel::BrownianMotion),
            ModelArg::CompoundPoisson => LevyModel::compound_poisson(lambda),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ModeArg {
    Constrained,
    Unconstrained,
}

impl From<ModeArg> for TrainingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Constrained => TrainingMode::Constrained,
            ModeArg::Unconstrained => TrainingMode::Unconstrained,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Jump rate of the compound Poisson model.
    #[arg(long, default_value_t = 0.6)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "batch.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub batch: PathBuf,
    /// Unrolled ADMM iterations.
    #[arg(long = "K", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 2.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 2e-4)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    #[arg(long, default_value_t = 3)]
    pub kernel_order: u32,
    /// Knot spacing (default σ/2).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Extra knots beyond the data range.
    #[arg(long, default_value_t = 4)]
    pub margin: usize,
    #[arg(long, default_value = "spline.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "train_report.json")]
    pub report: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub spline: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "xhat.json")]
    pub out: PathBuf,
    /// ADMM iterations (default: the training value, else 10).
    #[arg(long = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Apply the spline rescaled by this factor (constrained splines only).
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Preset {
    /// 100/100 signals, three noise levels.
    Desk,
    /// Brownian motion at full scale.
    FullBrownian,
    /// Compound Poisson at full scale.
    FullPoisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Experiment {
    Sweep,
    ScaleOnce,
    Ktest,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    #[arg(long, value_enum, default_value = "sweep")]
    pub experiment: Experiment,
    /// Signal model (desk preset only; default compound Poisson).
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, default_value_t = 0.6)]
    pub lambda: f64,
    /// Comma-separated noise variances.
    #[arg(long, value_delimiter = ',')]
    pub sigma2: Vec<f64>,
    #[arg(long)]
    pub train_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ScaleArgs {
    #[arg(long)]
    pub spline: PathBuf,
    /// σ²_new / σ²_train.
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub root_tol: f64,
    /// Optional batch to denoise with the rescaled operator.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "scaled.json")]
    pub out: PathBuf,
    /// Samples of the rescaled curve written to `<out>.csv`.
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PenaltyArgs {
    #[arg(long)]
    pub spline: PathBuf,
    #[arg(long, default_value = "phi.csv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_001)]
    pub points: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Files written by one run, recorded in the manifest.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
struct Manifest {
    files: BTreeMap<String, ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    sha256: String,
    bytes: u64,
    command: String,
}

impl Outputs {
    fn path(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.dir.join(rel)
        }
    }

    fn write(&mut self, rel: &Path, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn finish(&self, command: &str) -> Result<()> {
        let manifest_path = self.dir.join("manifest.json");
        let mut manifest: Manifest = match std::fs::read_to_string(&manifest_path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
            Err(_) => Manifest::default(),
        };
        for path in &self.written {
            let bytes = std::fs::read(path)?;
            let key = path
                .strip_prefix(&self.dir)
                .map(Path::to_path_buf)
                .unwrap_or_else(|_| path.clone());
            manifest.files.insert(
                key.to_string_lossy().into_owned(),
                ManifestEntry {
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                    command: command.to_string(),
                },
            );
        }
        std::fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Appends `--key value` for config entries whose flag is absent from `args`.
fn merge_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(pos) = strs.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = if let Some(p) = strs[pos].strip_prefix("--config=") {
        p.to_string()
    } else {
        strs.get(pos + 1).cloned().ok_or("--config needs a file")?
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("invalid config {path}: {e}"))?;
    let obj = value.as_object().ok_or("config must be a JSON object")?;
    let sub = strs.iter().find(|a| SUBCOMMANDS.contains(&a.as_str())).cloned();

    let mut entries: Vec<(String, serde_json::Value)> = Vec::new();
    for (k, v) in obj {
        if SUBCOMMANDS.contains(&k.as_str()) {
            if Some(k) == sub.as_ref() {
                let inner = v.as_object().ok_or_else(|| format!("config section {k:?} must be an object"))?;
                entries.extend(inner.iter().map(|(k, v)| (k.clone(), v.clone())));
            }
        } else {
            entries.push((k.clone(), v.clone()));
        }
    }

    let mut out = args;
    for (key, v) in entries {
        let flag = format!("--{}", if key == "K" { key } else { key.replace('_', "-") });
        let given = strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
            || (flag == "--verbose" && strs.iter().any(|a| a == "-v"));
        if given || flag == "--config" {
            continue;
        }
        match v {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(json_scalar).collect();
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(json_scalar(&other).into());
            }
        }
    }
    Ok(out)
}

fn json_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParameter(_) | Error::Json(_) | Error::Io(_) | Error::NotFirmlyNonexpansive(_) => {
                    EXIT_USAGE
                }
                _ => EXIT_CHECK_FAILED,
            }
        }
    }
}

/// Runs a parsed command. Returns whether all validity checks passed.
pub fn execute(mut cli: Cli) -> Result<bool> {
    if let Some(seed) = env_seed()? {
        match &mut cli.command {
            Command::Generate(a) => a.seed = seed,
            Command::Evaluate(a) => a.seed = Some(seed),
            Command::Selftest(a) => a.seed = seed,
            _ => {}
        }
    }
    std::fs::create_dir_all(&cli.out_dir)?;
    let mut out = Outputs {
        dir: cli.out_dir.clone(),
        written: Vec::new(),
    };
    let name = cli.command.name();
    let ok = match &cli.command {
        Command::Generate(a) => cmd_generate(a, &mut out)?,
        Command::Train(a) => cmd_train(a, &mut out)?,
        Command::Denoise(a) => cmd_denoise(a, &mut out)?,
        Command::Evaluate(a) => cmd_evaluate(a, &mut out)?,
        Command::Scale(a) => cmd_scale(a, &mut out)?,
        Command::Penalty(a) => cmd_penalty(a, &mut out)?,
        Command::Selftest(a) => cmd_selftest(a, &mut out)?,
    };
    out.write(Path::new(&format!("{name}.config.json")), serde_json::to_string_pretty(&cli)?.as_bytes())?;
    out.finish(name)?;
    Ok(ok)
}

fn cmd_generate(a: &GenerateArgs, out: &mut Outputs) -> Result<bool> {
    let model = a.model.model(a.lambda)?;
    let batch = SignalBatch::simulate(model, a.n as usize, a.count as usize, a.sigma2, a.seed)?;
    batch.validate()?;
    let path = out.write(&a.out, serde_json::to_string(&batch)?.as_bytes())?;
    println!("wrote {} signals to {}", batch.len(), path.display());
    Ok(true)
}

fn load_batch(path: &Path) -> Result<SignalBatch> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read batch {}: {e}", path.display())))?;
    let batch: SignalBatch = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("invalid batch file {}: {e}", path.display())))?;
    batch.validate()?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(batch)
}

fn load_artifact(path: &Path) -> Result<SplineArtifact> {
    SplineArtifact::load(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot load spline {}: {e}", path.display())))
}

fn cmd_train(a: &TrainArgs, out: &mut Outputs) -> Result<bool> {
    let batch = load_batch(&a.batch)?;
    let delta = a.delta.unwrap_or(batch.sigma() / 2.0);
    let m_half = knot_range_from_data(&batch, delta, a.margin)?;
    let cfg = TrainConfig {
        gamma: a.gamma,
        outer_iterations: a.iters as usize,
        admm: AdmmConfig::new(a.mu, a.k as usize),
        kernel_order: a.kernel_order,
        seed: batch.seed,
        ..TrainConfig::new(a.mode.into(), delta, m_half)
    };
    let outcome = train(&cfg, &batch)?;
    let artifact = outcome.artifact(&cfg, batch.noise_variance);
    let ok = match cfg.mode {
        TrainingMode::Constrained => outcome.spline.check_firmly_nonexpansive(10_000).ok,
        TrainingMode::Unconstrained => true,
    } && outcome.loss_history.iter().all(|l| l.is_finite());
    out.write(&a.out, artifact.to_json()?.as_bytes())?;
    out.write(&a.report, serde_json::to_string_pretty(&outcome.report(&cfg))?.as_bytes())?;
    println!(
        "{} training: loss {:.6e} -> {:.6e} in {:.1} s",
        cfg.mode.name(),
        outcome.loss_history[0],
        outcome.loss_history[outcome.loss_history.len() - 1],
        outcome.wall_time_s
    );
    Ok(ok)
}

#[derive(Serialize)]
struct Reconstructions {
    reconstructions: Vec<Vec<f64>>,
    delta_snr_db: Vec<Option<f64>>,
    mean_delta_snr_db: Option<f64>,
}

fn denoise_batch<S: Shrinkage + ?Sized>(shrink: &S, admm: &AdmmConfig, batch: &SignalBatch) -> Result<Reconstructions> {
    let fact = TridiagFactorization::new(batch.signal_len(), admm.mu)?;
    let mut recon = Vec::with_capacity(batch.len());
    let mut db = Vec::with_capacity(batch.len());
    for (x, y) in batch.pairs() {
        let xhat = admm_run(y, shrink, admm, &fact)?.x_final;
        // Batches without ground truth carry clean = noisy; the ratio is undefined there.
        db.push(snr_improvement(x, &xhat, y).ok());
        recon.push(xhat);
    }
    let finite: Vec<f64> = db.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let mean = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
    Ok(Reconstructions {
        reconstructions: recon,
        delta_snr_db: db,
        mean_delta_snr_db: mean,
    })
}

fn cmd_denoise(a: &DenoiseArgs, out: &mut Outputs) -> Result<bool> {
    let art = load_artifact(&a.spline)?;
    let batch = load_batch(&a.input)?;
    let meta = art.training_meta.as_ref();
    let admm = AdmmConfig::new(
        a.mu.or(meta.map(|m| m.mu)).unwrap_or(2.0),
        a.k.map(|k| k as usize).or(meta.map(|m| m.k)).unwrap_or(10),
    );
    let result = match a.lambda {
        Some(lambda) => {
            require_constrained(&art)?;
            let scaled = ScaledShrinkage::from_spline(art.spline.clone(), lambda, crate::spline::DEFAULT_ROOT_TOL)?;
            denoise_batch(&scaled, &admm, &batch)?
        }
        None => denoise_batch(&art.spline, &admm, &batch)?,
    };
    let ok = result.reconstructions.iter().flatten().all(|v| v.is_finite());
    if let Some(m) = result.mean_delta_snr_db {
        println!("mean ΔSNR {m:.3} dB over {} signals", batch.len());
    }
    out.write(&a.out, serde_json::to_string(&result)?.as_bytes())?;
    Ok(ok)
}

fn require_constrained(art: &SplineArtifact) -> Result<()> {
    if art.is_unconstrained() || art.spline.mode() != SplineMode::Antisymmetric {
        return Err(Error::NotFirmlyNonexpansive(
            "spline was trained without the firm-nonexpansiveness constraint; \
             rescaling is only valid for proximal operators of convex penalties"
                .into(),
        ));
    }
    art.spline.require_firmly_nonexpansive()
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut Outputs) -> Result<bool> {
    let (model, mut cfg) = match a.preset {
        Preset::Desk => {
            let model = a.model.unwrap_or(ModelArg::CompoundPoisson).model(a.lambda)?;
            (model, SweepConfig::desk(model))
        }
        Preset::FullBrownian => (LevyModel::BrownianMotion, SweepConfig::full(LevyModel::BrownianMotion)),
        Preset::FullPoisson => {
            let m = LevyModel::compound_poisson(a.lambda)?;
            (m, SweepConfig::full(m))
        }
    };
    if !a.sigma2.is_empty() {
        cfg.sigma2_values = a.sigma2.clone();
    }
    if let Some(v) = a.train_count {
        cfg.train_count = v;
    }
    if let Some(v) = a.test_count {
        cfg.test_count = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.iters {
        cfg.outer_iterations = v as usize;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let csv_path = with_suffix(&a.out, ".csv");
    match a.experiment {
        Experiment::Sweep | Experiment::ScaleOnce => {
            let report = if a.experiment == Experiment::Sweep {
                run_noise_sweep(&cfg)?
            } else {
                if a.sigma2.is_empty() {
                    cfg.sigma2_values = log_spaced_sigma2(3);
                }
                run_scale_once(&cfg, 1.0)?
            };
            print!("{}", report.summary());
            let ok = report.cells.iter().all(|c| c.mean_db.is_finite() && c.per_signal_db.len() == cfg.test_count);
            out.write(&a.out, report.to_json()?.as_bytes())?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            out.write(&csv_path, &csv)?;
            Ok(ok)
        }
        Experiment::Ktest => {
            let kcfg = KTestConfig {
                sigma2: a.sigma2.first().copied().unwrap_or(10.0),
                sweep: cfg,
                ..KTestConfig::desk(model)
            };
            let report = run_ktest_stability(&kcfg)?;
            println!(
                "constrained variation over K_test in [20, 50]: {:.4} dB",
                report.constrained_variation(20, 50)
            );
            let ok = report.constrained_snr_db.iter().all(|v| v.is_finite());
            out.write(&a.out, serde_json::to_string_pretty(&report)?.as_bytes())?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            out.write(&csv_path, &csv)?;
            Ok(ok)
        }
    }
}

#[derive(Serialize)]
struct ScaledOperator {
    spline_sha256: String,
    lambda: f64,
    root_tol: f64,
    trained_sigma2: Option<f64>,
    target_sigma2: Option<f64>,
    denoised: Option<Reconstructions>,
}

fn cmd_scale(a: &ScaleArgs, out: &mut Outputs) -> Result<bool> {
    let art = load_artifact(&a.spline)?;
    require_constrained(&art)?;
    let scaled = ScaledShrinkage::from_spline(art.spline.clone(), a.lambda, a.root_tol)?;
    let reach = art.spline.knot_range() + 2.0 * art.spline.delta();
    let grid = symmetric_grid(reach * a.lambda.max(1.0), a.samples.max(2));
    let mut csv = String::from("y,t,t_lambda\n");
    let mut ok = true;
    for &y in &grid {
        let v = scaled.eval(y)?;
        ok &= v.is_finite();
        csv.push_str(&format!("{y},{},{v}\n", art.spline.eval(y)));
    }
    let denoised = match &a.input {
        Some(path) => {
            let batch = load_batch(path)?;
            let meta = art.training_meta.as_ref();
            let admm = AdmmConfig::new(meta.map_or(2.0, |m| m.mu), meta.map_or(10, |m| m.k));
            let r = denoise_batch(&scaled, &admm, &batch)?;
            if let Some(m) = r.mean_delta_snr_db {
                println!("mean ΔSNR {m:.3} dB with λ = {}", a.lambda);
            }
            Some(r)
        }
        None => None,
    };
    let doc = ScaledOperator {
        spline_sha256: sha256_hex(art.to_json()?.as_bytes()),
        lambda: a.lambda,
        root_tol: a.root_tol,
        trained_sigma2: art.trained_sigma2,
        target_sigma2: art.trained_sigma2.map(|s| s * a.lambda),
        denoised,
    };
    out.write(&a.out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    out.write(&with_suffix(&a.out, ".csv"), csv.as_bytes())?;
    Ok(ok)
}

fn cmd_penalty(a: &PenaltyArgs, out: &mut Outputs) -> Result<bool> {
    let art = load_artifact(&a.spline)?;
    require_constrained(&art)?;
    let reach = art.spline.knot_range() + 2.0 * art.spline.delta();
    let curve = recover_penalty(&art.spline, &symmetric_grid(reach, a.points.max(3)))?;
    let sym = curve.symmetry_error();
    let convex = curve.convexity_violation();
    let ok = sym < 1e-6 && convex <= 1e-9;
    println!("penalty: {} samples, symmetry error {sym:.3e}, convexity violation {convex:.3e}", curve.len());
    let mut csv = Vec::new();
    curve.write_csv(&mut csv)?;
    out.write(&a.out, &csv)?;
    Ok(ok)
}

fn cmd_selftest(a: &SelftestArgs, out: &mut Outputs) -> Result<bool> {
    let report = run_selftest(a.seed)?;
    for line in report.lines() {
        println!("{line}");
    }
    out.write(Path::new("selftest.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report.passed())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"threads": 2, "train": {"K": 4, "gamma": 1e-3}, "generate": {"n": 9}}"#).unwrap();
        let args = merge_config(os(&["proxlearn", "--config", path.to_str().unwrap(), "train", "--gamma", "5e-4"])).unwrap();
        let s: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert!(s.windows(2).any(|w| w[0] == "--K" && w[1] == "4"));
        assert!(s.windows(2).any(|w| w[0] == "--threads" && w[1] == "2"));
        assert_eq!(s.iter().filter(|a| *a == "--gamma").count(), 1);
        assert!(!s.contains(&"--n".to_string()));
    }

    #[test]
    fn iterations_must_be_positive() {
        let err = Cli::try_parse_from(["proxlearn", "train", "--mode", "constrained", "--batch", "b.json", "--iters", "0"])
            .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn model_is_required() {
        assert!(Cli::try_parse_from(["proxlearn", "generate", "--n", "5"]).is_err());
    }

    #[test]
    fn suffix_helper() {
        assert_eq!(with_suffix(Path::new("a/report.json"), ".csv"), PathBuf::from("a/report.csv"));
    }
}
