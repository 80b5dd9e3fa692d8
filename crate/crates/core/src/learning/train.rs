//! Full-batch gradient descent on the spline coefficients, optionally
//! projected onto the firm-nonexpansiveness polyhedron after every step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::backprop::{batch_gradient, batch_loss};
use super::projection::{project_to_s, ConstraintSet};
use crate::admm::{AdmmConfig, TridiagFactorization};
use crate::error::{Error, Result};
use crate::signal::{apply_l, SignalBatch};
use crate::spline::{BSplineKernel, ShrinkageSpline, SplineArtifact, SplineMode, TrainingMeta};

/// Training aborts when the loss exceeds this multiple of the initial loss.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    /// General spline, plain gradient descent.
    Unconstrained,
    /// Antisymmetric spline, projected onto `S` after every step.
    Constrained,
}

impl TrainingMode {
    pub fn spline_mode(self) -> SplineMode {
        match self {
            TrainingMode::Unconstrained => SplineMode::General,
            TrainingMode::Constrained => SplineMode::Antisymmetric,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainingMode::Unconstrained => "unconstrained",
            TrainingMode::Constrained => "constrained",
        }
    }
}

impl std::str::FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconstrained" => Ok(TrainingMode::Unconstrained),
            "constrained" => Ok(TrainingMode::Constrained),
            other => Err(Error::InvalidParameter(format!("unknown training mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `c_m = mΔ`, so the initial shrinkage is the identity on its knot range.
    #[default]
    IdentityLine,
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub outer_iterations: usize,
    pub admm: AdmmConfig,
    pub init: Init,
    pub mode: TrainingMode,
    pub kernel_order: u32,
    pub delta: f64,
    pub m_half: usize,
    pub projection_tol: f64,
    /// Recorded in the artifact metadata; training itself is deterministic.
    pub seed: u64,
}

impl TrainConfig {
    /// Cubic kernel, `μ = 2`, `K = 10`, `γ = 2·10⁻⁴`, 1000 iterations.
    pub fn new(mode: TrainingMode, delta: f64, m_half: usize) -> Self {
        TrainConfig {
            gamma: 2e-4,
            outer_iterations: 1000,
            admm: AdmmConfig::default(),
            init: Init::IdentityLine,
            mode,
            kernel_order: 3,
            delta,
            m_half,
            projection_tol: 1e-12,
            seed: 0,
        }
    }

    /// `Δ = σ/2` and the knot count from the batch.
    pub fn for_batch(mode: TrainingMode, batch: &SignalBatch) -> Result<Self> {
        let delta = batch.sigma() / 2.0;
        let m_half = knot_range_from_data(batch, delta, 4)?;
        Ok(TrainConfig {
            seed: batch.seed,
            ..TrainConfig::new(mode, delta, m_half)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.admm.validate()?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if self.outer_iterations == 0 {
            return Err(Error::InvalidParameter("training needs at least one iteration".into()));
        }
        if !(self.projection_tol > 0.0) {
            return Err(Error::InvalidParameter("projection_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn initial_spline(&self) -> Result<ShrinkageSpline> {
        let kernel = BSplineKernel::new(self.kernel_order);
        let mode = self.mode.spline_mode();
        match &self.init {
            Init::IdentityLine => ShrinkageSpline::identity(kernel, self.delta, self.m_half, mode),
            Init::Custom(c) => ShrinkageSpline::new(kernel, self.delta, self.m_half, mode, c.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub spline: ShrinkageSpline,
    /// `J(c^(i))` for `i = 0..=outer_iterations`.
    pub loss_history: Vec<f64>,
    pub wall_time_s: f64,
    /// Largest constraint violation over all iterates (constrained mode).
    pub max_constraint_violation: Option<f64>,
}

/// JSON report written next to a trained spline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainingReport {
    pub loss_history: Vec<f64>,
    pub config: TrainConfig,
    pub wall_time_s: f64,
    pub final_coeffs: Vec<f64>,
}

impl TrainOutcome {
    pub fn report(&self, config: &TrainConfig) -> TrainingReport {
        TrainingReport {
            loss_history: self.loss_history.clone(),
            config: config.clone(),
            wall_time_s: self.wall_time_s,
            final_coeffs: self.spline.coeffs().to_vec(),
        }
    }

    pub fn artifact(&self, config: &TrainConfig, trained_sigma2: f64) -> SplineArtifact {
        SplineArtifact {
            spline: self.spline.clone(),
            trained_sigma2: Some(trained_sigma2),
            training_meta: Some(TrainingMeta {
                gamma: config.gamma,
                iters: config.outer_iterations,
                k: config.admm.iterations,
                mu: config.admm.mu,
                seed: config.seed,
                training: config.mode.name().to_string(),
            }),
        }
    }
}

/// Runs `outer_iterations` steps of `c ← c − γ∇J(c)`, projecting onto `S`
/// after each step in constrained mode.
pub fn train(config: &TrainConfig, batch: &SignalBatch) -> Result<TrainOutcome> {
    config.validate()?;
    batch.validate()?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let start = Instant::now();
    let fact = TridiagFactorization::new(batch.signal_len(), config.admm.mu)?;
    let mut spline = config.initial_spline()?;
    let constraints = match config.mode {
        TrainingMode::Constrained => Some(ConstraintSet::for_spline(&spline)),
        TrainingMode::Unconstrained => None,
    };
    let mut max_violation: Option<f64> = None;
    if let Some(set) = &constraints {
        let c = project_to_s(spline.coeffs(), set, config.projection_tol)?;
        max_violation = Some(set.violation(&c));
        spline = spline.with_coeffs(c)?;
    }

    let mut history = Vec::with_capacity(config.outer_iterations + 1);
    let mut initial_loss = None;
    for i in 0..config.outer_iterations {
        let g = batch_gradient(&spline, batch, &config.admm, &fact)?;
        check_divergence(i, g.loss, &mut initial_loss)?;
        history.push(g.loss);
        log::debug!("iteration {i}: loss {:.6e}", g.loss);

        let mut c: Vec<f64> = spline
            .coeffs()
            .iter()
            .zip(&g.grad)
            .map(|(c, g)| c - config.gamma * g)
            .collect();
        if let Some(set) = &constraints {
            c = project_to_s(&c, set, config.projection_tol)?;
            let v = set.violation(&c);
            max_violation = Some(max_violation.map_or(v, |m| m.max(v)));
        }
        spline = spline.with_coeffs(c)?;
    }
    let final_loss = batch_loss(&spline, batch, &config.admm, &fact)?;
    check_divergence(config.outer_iterations, final_loss, &mut initial_loss)?;
    history.push(final_loss);

    if constraints.is_some() {
        spline.require_firmly_nonexpansive()?;
    }
    Ok(TrainOutcome {
        spline,
        loss_history: history,
        wall_time_s: start.elapsed().as_secs_f64(),
        max_constraint_violation: max_violation,
    })
}

fn check_divergence(iteration: usize, loss: f64, initial: &mut Option<f64>) -> Result<()> {
    let reference = *initial.get_or_insert(loss);
    let limit = DIVERGENCE_FACTOR * reference;
    if !loss.is_finite() || loss > limit {
        return Err(Error::Diverged { iteration, loss, limit });
    }
    Ok(())
}

/// `M = ⌈max |Ly| / Δ⌉ + margin`, so the knots cover the dynamic range of the
/// observed increments plus `margin` knots of kernel support.
pub fn knot_range_from_data(batch: &SignalBatch, delta: f64, margin_knots: usize) -> Result<usize> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let max_abs = batch
        .noisy
        .iter()
        .flat_map(|y| apply_l(y))
        .fold(0.0f64, |m, u| m.max(u.abs()));
    Ok((max_abs / delta).ceil() as usize + margin_knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::LevyModel;

    fn small_batch(seed: u64) -> SignalBatch {
        SignalBatch::simulate(LevyModel::compound_poisson(0.6).unwrap(), 30, 8, 1.0, seed).unwrap()
    }

    fn small_config(mode: TrainingMode, batch: &SignalBatch) -> TrainConfig {
        TrainConfig {
            outer_iterations: 25,
            admm: AdmmConfig::new(2.0, 5),
            ..TrainConfig::for_batch(mode, batch).unwrap()
        }
    }

    #[test]
    fn zero_learning_rate_keeps_coefficients() {
        let batch = small_batch(3);
        let cfg = TrainConfig {
            gamma: 0.0,
            ..small_config(TrainingMode::Unconstrained, &batch)
        };
        let out = train(&cfg, &batch).unwrap();
        assert_eq!(out.spline, cfg.initial_spline().unwrap());
        assert_eq!(out.loss_history.len(), cfg.outer_iterations + 1);
        assert!(out.loss_history.iter().all(|&l| l == out.loss_history[0]));
    }

    #[test]
    fn constrained_iterates_stay_in_s() {
        let batch = small_batch(4);
        let cfg = TrainConfig {
            gamma: 1e-3,
            ..small_config(TrainingMode::Constrained, &batch)
        };
        let out = train(&cfg, &batch).unwrap();
        assert!(out.max_constraint_violation.unwrap() <= 1e-10);
        let report = out.spline.check_firmly_nonexpansive(10_000);
        assert!(report.ok, "{report:?}");
        assert!(report.min_slope >= -1e-9 && report.max_slope <= 1.0 + 1e-9);
    }

    #[test]
    fn loss_non_increasing_for_small_step() {
        let batch = small_batch(5);
        for mode in [TrainingMode::Unconstrained, TrainingMode::Constrained] {
            let cfg = TrainConfig {
                gamma: 1e-5,
                ..small_config(mode, &batch)
            };
            let out = train(&cfg, &batch).unwrap();
            for w in out.loss_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{mode:?}: {} -> {}", w[0], w[1]);
            }
            assert!(out.loss_history.last() < out.loss_history.first());
        }
    }

    #[test]
    fn divergence_is_reported() {
        let batch = small_batch(6);
        let cfg = TrainConfig {
            gamma: 1e3,
            ..small_config(TrainingMode::Unconstrained, &batch)
        };
        assert!(matches!(train(&cfg, &batch), Err(Error::Diverged { .. })));
    }

    #[test]
    fn zero_iterations_rejected() {
        let batch = small_batch(7);
        let cfg = TrainConfig {
            outer_iterations: 0,
            ..small_config(TrainingMode::Constrained, &batch)
        };
        assert!(train(&cfg, &batch).is_err());
    }

    #[test]
    fn knot_count_arithmetic() {
        // One signal whose largest increment is 3.9.
        let batch = SignalBatch {
            clean: vec![vec![0.0; 3]],
            noisy: vec![vec![1.0, -2.9, -1.0]],
            noise_variance: 1.0,
            model: LevyModel::BrownianMotion,
            seed: 0,
        };
        assert_eq!(knot_range_from_data(&batch, 0.5, 4).unwrap(), 12);
        let doubled = SignalBatch {
            noisy: vec![batch.noisy[0].iter().map(|v| 2.0 * v).collect()],
            ..batch.clone()
        };
        assert_eq!(knot_range_from_data(&doubled, 0.5, 4).unwrap(), 20);
    }

    #[test]
    fn delta_follows_noise_level() {
        let batch = small_batch(8);
        let cfg = TrainConfig::for_batch(TrainingMode::Constrained, &batch).unwrap();
        assert_eq!(cfg.delta, 0.5);
    }

    #[test]
    fn artifact_carries_metadata() {
        let batch = small_batch(9);
        let cfg = TrainConfig {
            outer_iterations: 2,
            ..small_config(TrainingMode::Unconstrained, &batch)
        };
        let art = train(&cfg, &batch).unwrap().artifact(&cfg, 1.0);
        assert!(art.is_unconstrained());
        let back: SplineArtifact = serde_json::from_str(&art.to_json().unwrap()).unwrap();
        assert_eq!(back, art);
    }
}
