//! Evaluation protocols: noise sweeps, learning once and rescaling to other
//! noise levels, stability in the number of test-time iterations, and cost
//! traces of the generalized ADMM.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::admm::{admm_run, AdmmConfig, Shrinkage, TridiagFactorization};
use crate::baselines::{
    lmmse_denoise, mmse_smoother, tv_admm_config, tv_oracle_lambda, GridSpec, IncrementDensity,
    DEFAULT_GRID_POINTS,
};
use crate::error::{check_len, Error, Result};
use crate::learning::{knot_range_from_data, train, TrainConfig, TrainingMode};
use crate::signal::{mix_seed, LevyModel, SignalBatch};
use crate::spline::{PenaltyCurve, ScaledShrinkage, ShrinkageSpline, DEFAULT_ROOT_TOL};

const TRAIN_SALT: u64 = 0x7261_696e;
const TEST_SALT: u64 = 0x7465_7374;
const DIRECT_SALT: u64 = 0x6469_7263;

/// `10·log10(‖y − x‖² / ‖x̂ − x‖²)`, positive when `x̂` improves on `y`.
///
/// Returns `+∞` when `x̂ = x` exactly.
pub fn snr_improvement(x_clean: &[f64], x_hat: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x_clean.len(), x_hat.len())?;
    check_len(x_clean.len(), y.len())?;
    let sq = |a: &[f64]| -> f64 { a.iter().zip(x_clean).map(|(p, q)| (p - q) * (p - q)).sum() };
    let noise = sq(y);
    if noise == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let err = sq(x_hat);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (noise / err).log10())
}

/// `10·log10(‖x‖² / ‖x̂ − x‖²)`.
pub fn snr_db(x_clean: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_len(x_clean.len(), x_hat.len())?;
    let signal: f64 = x_clean.iter().map(|v| v * v).sum();
    let err: f64 = x_hat.iter().zip(x_clean).map(|(p, q)| (p - q) * (p - q)).sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / err).log10())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn spline_hash(spline: &ShrinkageSpline) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(spline)?.as_bytes()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// ADMM with a shrinkage learned under the firm-nonexpansiveness constraint.
    #[serde(rename = "MMSE-CADMM")]
    Cadmm,
    /// ADMM with an unconstrained learned shrinkage.
    #[serde(rename = "MMSE-ADMM")]
    Admm,
    #[serde(rename = "MMSE")]
    Mmse,
    #[serde(rename = "LMMSE")]
    Lmmse,
    /// TV with the per-signal best weight.
    #[serde(rename = "TV")]
    Tv,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Cadmm,
        EstimatorKind::Admm,
        EstimatorKind::Mmse,
        EstimatorKind::Lmmse,
        EstimatorKind::Tv,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Cadmm => "MMSE-CADMM",
            EstimatorKind::Admm => "MMSE-ADMM",
            EstimatorKind::Mmse => "MMSE",
            EstimatorKind::Lmmse => "LMMSE",
            EstimatorKind::Tv => "TV",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s) || format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sigma2_values: Vec<f64>,
    pub train_count: usize,
    pub test_count: usize,
    pub n: usize,
    pub model: LevyModel,
    pub estimators: Vec<EstimatorKind>,
    pub gamma: f64,
    pub outer_iterations: usize,
    pub admm: AdmmConfig,
    pub kernel_order: u32,
    pub margin_knots: usize,
    pub grid_points: usize,
    pub seed: u64,
}

/// `count` values log-spaced over `[10^{−1/2}, 10^{1/2}]`.
pub fn log_spaced_sigma2(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![1.0];
    }
    (0..count)
        .map(|i| 10f64.powf(-0.5 + i as f64 / (count - 1) as f64))
        .collect()
}

impl SweepConfig {
    /// 100 training and 100 test signals of length 100 at three noise levels.
    pub fn desk(model: LevyModel) -> Self {
        SweepConfig {
            sigma2_values: log_spaced_sigma2(3),
            train_count: 100,
            test_count: 100,
            n: 100,
            model,
            estimators: EstimatorKind::ALL.to_vec(),
            gamma: 2e-4,
            outer_iterations: 1000,
            admm: AdmmConfig::default(),
            kernel_order: 3,
            margin_knots: 4,
            grid_points: DEFAULT_GRID_POINTS,
            seed: 1,
        }
    }

    /// 500 training and 500 test signals at nine noise levels.
    pub fn full(model: LevyModel) -> Self {
        SweepConfig {
            sigma2_values: log_spaced_sigma2(9),
            train_count: 500,
            test_count: 500,
            ..SweepConfig::desk(model)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma2_values.is_empty() {
            return Err(Error::InvalidParameter("no noise levels given".into()));
        }
        if let Some(s) = self.sigma2_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(format!("noise variance must be positive, got {s}")));
        }
        if self.train_count == 0 || self.test_count == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("counts and signal length must be at least 1".into()));
        }
        self.admm.validate()?;
        self.model.validate()
    }

    pub fn train_batch(&self, index: usize, sigma2: f64) -> Result<SignalBatch> {
        let seed = mix_seed(self.seed, TRAIN_SALT ^ index as u64);
        SignalBatch::simulate(self.model, self.n, self.train_count, sigma2, seed)
    }

    pub fn test_batch(&self, index: usize, sigma2: f64) -> Result<SignalBatch> {
        let seed = mix_seed(self.seed, TEST_SALT ^ index as u64);
        SignalBatch::simulate(self.model, self.n, self.test_count, sigma2, seed)
    }

    /// Training configuration for a batch: `Δ = σ/2`, knots from the data.
    pub fn train_config(&self, mode: TrainingMode, batch: &SignalBatch) -> Result<TrainConfig> {
        let delta = batch.sigma() / 2.0;
        let m_half = knot_range_from_data(batch, delta, self.margin_knots)?;
        Ok(TrainConfig {
            gamma: self.gamma,
            outer_iterations: self.outer_iterations,
            admm: self.admm,
            kernel_order: self.kernel_order,
            seed: batch.seed,
            ..TrainConfig::new(mode, delta, m_half)
        })
    }
}

/// Results of one estimator at one noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub sigma2: f64,
    pub estimator: String,
    pub mean_db: f64,
    pub std_db: f64,
    pub per_signal_db: Vec<f64>,
    pub train_seed: Option<u64>,
    pub test_seed: u64,
    pub spline_hash: Option<String>,
    /// Estimator parameters, e.g. per-signal TV weights or the scaling λ.
    pub params: BTreeMap<String, serde_json::Value>,
}

impl Cell {
    fn new(sigma2: f64, estimator: &str, per_signal_db: Vec<f64>, test_seed: u64) -> Self {
        let (mean_db, std_db) = mean_std(&per_signal_db);
        Cell {
            sigma2,
            estimator: estimator.to_string(),
            mean_db,
            std_db,
            per_signal_db,
            train_seed: None,
            test_seed,
            spline_hash: None,
            params: BTreeMap::new(),
        }
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: SweepConfig,
    pub cells: Vec<Cell>,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn cell(&self, sigma2: f64, estimator: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.estimator == estimator && (c.sigma2 - sigma2).abs() <= 1e-12 * sigma2)
    }

    pub fn mean(&self, sigma2: f64, estimator: &str) -> Option<f64> {
        self.cell(sigma2, estimator).map(|c| c.mean_db)
    }

    /// Tidy rows `sigma2,estimator,signal_idx,delta_snr_db`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sigma2,estimator,signal_idx,delta_snr_db")?;
        for c in &self.cells {
            for (i, v) in c.per_signal_db.iter().enumerate() {
                writeln!(w, "{},{},{},{}", c.sigma2, c.estimator, i, v)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Human-readable table of mean ± std per cell.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            out.push_str(&format!(
                "sigma2={:<8.4} {:<14} {:>7.3} dB ± {:.3}\n",
                c.sigma2, c.estimator, c.mean_db, c.std_db
            ));
        }
        out
    }
}

/// ΔSNR of ADMM with `shrink` on every test signal.
pub fn evaluate_shrinkage<S: Shrinkage + ?Sized>(shrink: &S, admm: &AdmmConfig, test: &SignalBatch) -> Result<Vec<f64>> {
    let fact = TridiagFactorization::new(test.signal_len(), admm.mu)?;
    let cfg = AdmmConfig {
        record_trace: false,
        ..*admm
    };
    (0..test.len())
        .into_par_iter()
        .map(|i| {
            let xhat = admm_run(&test.noisy[i], shrink, &cfg, &fact)?.x_final;
            snr_improvement(&test.clean[i], &xhat, &test.noisy[i])
        })
        .collect()
}

fn evaluate_lmmse(test: &SignalBatch) -> Result<Vec<f64>> {
    (0..test.len())
        .into_par_iter()
        .map(|i| {
            let xhat = lmmse_denoise(&test.noisy[i], test.noise_variance)?;
            snr_improvement(&test.clean[i], &xhat, &test.noisy[i])
        })
        .collect()
}

fn evaluate_mmse(test: &SignalBatch, grid_points: usize) -> Result<Vec<f64>> {
    let density = IncrementDensity::new(test.model)?;
    (0..test.len())
        .into_par_iter()
        .map(|i| {
            let y = &test.noisy[i];
            let grid = GridSpec::for_observation(y, test.noise_variance, grid_points, 0.0)?;
            let xhat = mmse_smoother(y, test.noise_variance, &density, &grid)?;
            snr_improvement(&test.clean[i], &xhat, y)
        })
        .collect()
}

/// Returns per-signal ΔSNR and the chosen weights.
fn evaluate_tv(test: &SignalBatch, mu: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = tv_admm_config(mu);
    let fact = TridiagFactorization::new(test.signal_len(), mu)?;
    let rows: Vec<(f64, f64)> = (0..test.len())
        .into_par_iter()
        .map(|i| {
            let (lam, xhat) = tv_oracle_lambda(&test.noisy[i], &test.clean[i], &cfg, &fact)?;
            Ok((snr_improvement(&test.clean[i], &xhat, &test.noisy[i])?, lam))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

fn learned_cell(
    sigma2: f64,
    label: &str,
    spline: &ShrinkageSpline,
    cfg: &SweepConfig,
    train_seed: u64,
    test: &SignalBatch,
) -> Result<Cell> {
    let mut cell = Cell::new(sigma2, label, evaluate_shrinkage(spline, &cfg.admm, test)?, test.seed);
    cell.train_seed = Some(train_seed);
    cell.spline_hash = Some(spline_hash(spline)?);
    cell.params.insert("K".into(), cfg.admm.iterations.into());
    cell.params.insert("mu".into(), cfg.admm.mu.into());
    Ok(cell)
}

fn baseline_cells(sigma2: f64, cfg: &SweepConfig, test: &SignalBatch) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for &kind in &cfg.estimators {
        match kind {
            EstimatorKind::Mmse => {
                let mut cell = Cell::new(sigma2, kind.label(), evaluate_mmse(test, cfg.grid_points)?, test.seed);
                cell.params.insert("grid_points".into(), cfg.grid_points.into());
                cells.push(cell);
            }
            EstimatorKind::Lmmse => cells.push(Cell::new(sigma2, kind.label(), evaluate_lmmse(test)?, test.seed)),
            EstimatorKind::Tv => {
                let (db, lams) = evaluate_tv(test, cfg.admm.mu)?;
                let mut cell = Cell::new(sigma2, kind.label(), db, test.seed);
                cell.params.insert("lambda".into(), serde_json::to_value(lams)?);
                cells.push(cell);
            }
            EstimatorKind::Cadmm | EstimatorKind::Admm => {}
        }
    }
    Ok(cells)
}

/// Trains the requested learned estimators and evaluates every estimator on
/// fresh batches at each noise level.
pub fn run_noise_sweep(cfg: &SweepConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut cells = Vec::new();
    for (j, &sigma2) in cfg.sigma2_values.iter().enumerate() {
        let train_batch = cfg.train_batch(j, sigma2)?;
        let test = cfg.test_batch(j, sigma2)?;
        for &kind in &cfg.estimators {
            let mode = match kind {
                EstimatorKind::Cadmm => TrainingMode::Constrained,
                EstimatorKind::Admm => TrainingMode::Unconstrained,
                _ => continue,
            };
            let tc = cfg.train_config(mode, &train_batch)?;
            let outcome = train(&tc, &train_batch)?;
            log::info!(
                "sigma2={sigma2}: {} trained, loss {:.4e} -> {:.4e}",
                kind.label(),
                outcome.loss_history[0],
                outcome.loss_history.last().copied().unwrap_or(f64::NAN)
            );
            cells.push(learned_cell(sigma2, kind.label(), &outcome.spline, cfg, train_batch.seed, &test)?);
        }
        cells.extend(baseline_cells(sigma2, cfg, &test)?);
    }
    Ok(ExperimentReport {
        experiment: "noise-sweep".into(),
        config: cfg.clone(),
        cells,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub const SCALED_CADMM: &str = "CADMM-scaled";
pub const DIRECT_CADMM: &str = "CADMM-direct";
pub const REUSED_ADMM: &str = "ADMM-reused";

/// Learns once at `train_sigma2` and reuses the result at every noise level
/// in `cfg`: the constrained model through `T_λ` with
/// `λ = σ²/train_sigma2`, the unconstrained one unchanged. A constrained
/// model trained directly at each level serves as reference.
pub fn run_scale_once(cfg: &SweepConfig, train_sigma2: f64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let base_batch = SignalBatch::simulate(
        cfg.model,
        cfg.n,
        cfg.train_count,
        train_sigma2,
        mix_seed(cfg.seed, TRAIN_SALT ^ u64::MAX),
    )?;
    let ctc = cfg.train_config(TrainingMode::Constrained, &base_batch)?;
    let constrained = train(&ctc, &base_batch)?.spline;
    let utc = cfg.train_config(TrainingMode::Unconstrained, &base_batch)?;
    let unconstrained = train(&utc, &base_batch)?.spline;

    let mut cells = Vec::new();
    for (j, &sigma2) in cfg.sigma2_values.iter().enumerate() {
        let test = cfg.test_batch(j, sigma2)?;
        let lambda = sigma2 / train_sigma2;
        let scaled = ScaledShrinkage::from_spline(constrained.clone(), lambda, DEFAULT_ROOT_TOL)?;
        let mut cell = learned_cell(sigma2, SCALED_CADMM, &constrained, cfg, base_batch.seed, &test)?;
        cell.per_signal_db = evaluate_shrinkage(&scaled, &cfg.admm, &test)?;
        (cell.mean_db, cell.std_db) = mean_std(&cell.per_signal_db);
        cell.params.insert("lambda".into(), lambda.into());
        cells.push(cell);

        cells.push(learned_cell(sigma2, REUSED_ADMM, &unconstrained, cfg, base_batch.seed, &test)?);

        let direct = if (lambda - 1.0).abs() < 1e-15 {
            (constrained.clone(), base_batch.seed)
        } else {
            let seed = mix_seed(cfg.seed, DIRECT_SALT ^ j as u64);
            let batch = SignalBatch::simulate(cfg.model, cfg.n, cfg.train_count, sigma2, seed)?;
            let tc = cfg.train_config(TrainingMode::Constrained, &batch)?;
            (train(&tc, &batch)?.spline, seed)
        };
        cells.push(learned_cell(sigma2, DIRECT_CADMM, &direct.0, cfg, direct.1, &test)?);
        cells.extend(baseline_cells(sigma2, cfg, &test)?);
    }
    Ok(ExperimentReport {
        experiment: "scale-once".into(),
        config: cfg.clone(),
        cells,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KTestConfig {
    pub k_train: usize,
    pub sigma2: f64,
    pub k_test_values: Vec<usize>,
    pub sweep: SweepConfig,
}

impl KTestConfig {
    /// `K_train = 2`, `σ² = 10`, `K_test = 2..=50`.
    pub fn desk(model: LevyModel) -> Self {
        KTestConfig {
            k_train: 2,
            sigma2: 10.0,
            k_test_values: (2..=50).collect(),
            sweep: SweepConfig::desk(model),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KTestReport {
    pub config: KTestConfig,
    pub k_test: Vec<usize>,
    /// Mean output SNR (dB) at each `K_test`.
    pub constrained_snr_db: Vec<f64>,
    pub unconstrained_snr_db: Vec<f64>,
    pub spline_hashes: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

impl KTestReport {
    /// `max − min` of the constrained curve over `K_test ∈ [lo, hi]`.
    pub fn constrained_variation(&self, lo: usize, hi: usize) -> f64 {
        let vals: Vec<f64> = self
            .k_test
            .iter()
            .zip(&self.constrained_snr_db)
            .filter(|(k, _)| (lo..=hi).contains(*k))
            .map(|(_, v)| *v)
            .collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k_test,constrained_snr_db,unconstrained_snr_db")?;
        for ((k, c), u) in self.k_test.iter().zip(&self.constrained_snr_db).zip(&self.unconstrained_snr_db) {
            writeln!(w, "{k},{c},{u}")?;
        }
        Ok(())
    }
}

/// Trains both modes with `K_train` iterations and reports the mean output
/// SNR of each when run for every `K_test`.
pub fn run_ktest_stability(cfg: &KTestConfig) -> Result<KTestReport> {
    let sweep = SweepConfig {
        admm: cfg.sweep.admm.with_iterations(cfg.k_train),
        sigma2_values: vec![cfg.sigma2],
        ..cfg.sweep.clone()
    };
    sweep.validate()?;
    let start = Instant::now();
    let train_batch = sweep.train_batch(0, cfg.sigma2)?;
    let test = sweep.test_batch(0, cfg.sigma2)?;
    let mut hashes = BTreeMap::new();
    let mut curves = Vec::new();
    for mode in [TrainingMode::Constrained, TrainingMode::Unconstrained] {
        let tc = sweep.train_config(mode, &train_batch)?;
        let spline = train(&tc, &train_batch)?.spline;
        hashes.insert(mode.name().to_string(), spline_hash(&spline)?);
        let fact = TridiagFactorization::new(test.signal_len(), sweep.admm.mu)?;
        let curve = cfg
            .k_test_values
            .iter()
            .map(|&k| {
                let admm = sweep.admm.with_iterations(k);
                let snr: Vec<f64> = (0..test.len())
                    .into_par_iter()
                    .map(|i| snr_db(&test.clean[i], &admm_run(&test.noisy[i], &spline, &admm, &fact)?.x_final))
                    .collect::<Result<_>>()?;
                Ok(snr.iter().sum::<f64>() / snr.len() as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        curves.push(curve);
    }
    let unconstrained = curves.pop().unwrap_or_default();
    let constrained = curves.pop().unwrap_or_default();
    Ok(KTestReport {
        config: cfg.clone(),
        k_test: cfg.k_test_values.clone(),
        constrained_snr_db: constrained,
        unconstrained_snr_db: unconstrained,
        spline_hashes: hashes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Objective values `½‖y − x^(k)‖² + μ Σ Φ([Lx^(k)]_i)` for `k = 1..=iters`,
/// where `Φ` is the penalty whose proximal map is the shrinkage.
pub fn convergence_trace<S: Shrinkage + ?Sized>(
    shrink: &S,
    y: &[f64],
    penalty: &PenaltyCurve,
    iters: usize,
    mu: f64,
) -> Result<Vec<f64>> {
    let cfg = AdmmConfig::new(mu, iters).traced();
    let fact = TridiagFactorization::new(y.len(), mu)?;
    let mut trace = admm_run(y, shrink, &cfg, &fact)?;
    trace.attach_costs(y, &penalty.scaled(mu))?;
    Ok(trace.cost_per_iter.unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::{Identity, SoftThreshold};
    use crate::spline::{recover_penalty, symmetric_grid};

    #[test]
    fn snr_improvement_values() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 0.0, 3.0];
        assert_eq!(snr_improvement(&x, &y, &y).unwrap(), 0.0);
        let half: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + 0.5 * (b - a)).collect();
        assert!((snr_improvement(&x, &half, &y).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert_eq!(snr_improvement(&x, &x, &y).unwrap(), f64::INFINITY);
        assert!(matches!(snr_improvement(&x, &y, &x), Err(Error::UndefinedSnr)));
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced_sigma2(3);
        assert!((v[0] - 10f64.powf(-0.5)).abs() < 1e-15 && v[1] == 1.0 && (v[2] - 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(log_spaced_sigma2(9).len(), 9);
    }

    #[test]
    fn estimator_labels_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(EstimatorKind::from_label(k.label()).unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.label()));
        }
        assert!(EstimatorKind::from_label("bogus").is_err());
    }

    fn tiny_sweep() -> SweepConfig {
        SweepConfig {
            sigma2_values: vec![1.0],
            train_count: 6,
            test_count: 4,
            n: 30,
            outer_iterations: 5,
            grid_points: 256,
            ..SweepConfig::desk(LevyModel::compound_poisson(0.6).unwrap())
        }
    }

    #[test]
    fn sweep_is_reproducible_and_complete() {
        let cfg = tiny_sweep();
        let a = run_noise_sweep(&cfg).unwrap();
        let b = run_noise_sweep(&cfg).unwrap();
        assert_eq!(a.cells, b.cells);
        for k in EstimatorKind::ALL {
            let cell = a.cell(1.0, k.label()).unwrap();
            assert_eq!(cell.per_signal_db.len(), 4);
        }
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 5 * 4);
    }

    #[test]
    fn scale_once_at_training_level_is_direct() {
        let cfg = SweepConfig {
            estimators: vec![],
            ..tiny_sweep()
        };
        let r = run_scale_once(&cfg, 1.0).unwrap();
        assert_eq!(r.cell(1.0, SCALED_CADMM).unwrap().per_signal_db, r.cell(1.0, DIRECT_CADMM).unwrap().per_signal_db);
    }

    #[test]
    fn ktest_curve_contains_training_k() {
        let cfg = KTestConfig {
            k_test_values: vec![2, 3, 5],
            ..KTestConfig {
                sweep: tiny_sweep(),
                ..KTestConfig::desk(LevyModel::BrownianMotion)
            }
        };
        let r = run_ktest_stability(&cfg).unwrap();
        assert_eq!(r.constrained_snr_db.len(), 3);
        assert_eq!(r.unconstrained_snr_db.len(), 3);
        assert!(r.k_test.contains(&cfg.k_train));
    }

    #[test]
    fn identity_trace_decreases_to_zero() {
        let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let penalty = recover_penalty(&Identity, &symmetric_grid(10.0, 101)).unwrap();
        let costs = convergence_trace(&Identity, &y, &penalty, 50, 2.0).unwrap();
        assert_eq!(costs.len(), 50);
        for w in costs.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        assert!(costs[49] < 1e-6 * costs[0]);
    }

    #[test]
    fn soft_threshold_trace_settles() {
        let y: Vec<f64> = (0..40).map(|i| if i < 20 { 0.3 } else { 2.0 } + 0.2 * (i as f64).cos()).collect();
        let t = SoftThreshold::new(0.25);
        let penalty = recover_penalty(&t, &symmetric_grid(20.0, 40_001)).unwrap();
        let costs = convergence_trace(&t, &y, &penalty, 2000, 2.0).unwrap();
        for w in costs[20..].windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "{} -> {}", w[0], w[1]);
        }
        let (a, b) = (costs[1998], costs[1999]);
        assert!((b - a).abs() < 1e-10 * b.abs(), "{a} {b}");
    }
}
