//! Reference estimators: the Wiener (LMMSE) filter, total-variation
//! denoising with a per-signal oracle regularization weight, and the exact
//! posterior mean computed by [`mmse_smoother`].

mod mmse;

pub use mmse::{mmse_smoother, mmse_smoother_from, GridSpec, IncrementDensity, DEFAULT_GRID_POINTS};

use crate::admm::{admm_run, AdmmConfig, Shrinkage, SoftThreshold, TridiagFactorization};
use crate::error::{check_len, Error, Result};

/// ADMM iterations used by the TV baseline.
pub const TV_ITERATIONS: usize = 2000;
/// Search interval and budget of [`tv_oracle_lambda`].
pub const TV_LAMBDA_RANGE: (f64, f64) = (1e-3, 1e2);
pub const TV_SEARCH_EVALUATIONS: usize = 40;

/// `x̂ = (I + σ²LᵀL)⁻¹ y`.
pub fn lmmse_denoise(y: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(TridiagFactorization::new(y.len(), sigma2)?.solve(y))
}

/// ADMM configuration of the TV baseline for penalty weight `mu`.
pub fn tv_admm_config(mu: f64) -> AdmmConfig {
    AdmmConfig::new(mu, TV_ITERATIONS)
}

/// Minimizer of `½‖y − x‖² + lam ‖Lx‖₁`, by ADMM with soft-thresholding at
/// `lam/μ`.
pub fn tv_denoise(y: &[f64], lam: f64, admm: &AdmmConfig, fact: &TridiagFactorization) -> Result<Vec<f64>> {
    if !(lam >= 0.0) {
        return Err(Error::InvalidParameter(format!("lam must be nonnegative, got {lam}")));
    }
    let shrink = SoftThreshold::new(lam / admm.mu);
    Ok(admm_run(y, &shrink, admm, fact)?.x_final)
}

/// Per-signal best TV weight: golden-section search on `log lam` over
/// [`TV_LAMBDA_RANGE`] minimizing `‖x̂ − x‖²`, using
/// [`TV_SEARCH_EVALUATIONS`] reconstructions including both endpoints.
/// Returns the best weight seen and its reconstruction.
pub fn tv_oracle_lambda(
    y: &[f64],
    x_clean: &[f64],
    admm: &AdmmConfig,
    fact: &TridiagFactorization,
) -> Result<(f64, Vec<f64>)> {
    check_len(y.len(), x_clean.len())?;
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut eval = |t: f64| -> Result<f64> {
        let lam = t.exp();
        let xhat = tv_denoise(y, lam, admm, fact)?;
        let err: f64 = xhat.iter().zip(x_clean).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, lam, xhat));
        }
        Ok(err)
    };

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (TV_LAMBDA_RANGE.0.ln(), TV_LAMBDA_RANGE.1.ln());
    eval(a)?;
    eval(b)?;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 4..TV_SEARCH_EVALUATIONS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
    }
    let (_, lam, xhat) = best.expect("at least one evaluation");
    Ok((lam, xhat))
}

/// Common `(y, σ²) → x̂` interface for the evaluation harness.
pub trait Estimator: Sync {
    fn name(&self) -> &str;
    fn estimate(&self, y: &[f64], sigma2: f64) -> Result<Vec<f64>>;
}

pub struct Lmmse;

impl Estimator for Lmmse {
    fn name(&self) -> &str {
        "LMMSE"
    }

    fn estimate(&self, y: &[f64], sigma2: f64) -> Result<Vec<f64>> {
        lmmse_denoise(y, sigma2)
    }
}

pub struct Mmse {
    pub density: IncrementDensity,
    pub grid_points: usize,
}

impl Estimator for Mmse {
    fn name(&self) -> &str {
        "MMSE"
    }

    fn estimate(&self, y: &[f64], sigma2: f64) -> Result<Vec<f64>> {
        let grid = GridSpec::for_observation(y, sigma2, self.grid_points, 0.0)?;
        mmse_smoother(y, sigma2, &self.density, &grid)
    }
}

/// TV with a fixed weight.
pub struct TotalVariation {
    pub lam: f64,
    pub mu: f64,
}

impl Estimator for TotalVariation {
    fn name(&self) -> &str {
        "TV"
    }

    fn estimate(&self, y: &[f64], _sigma2: f64) -> Result<Vec<f64>> {
        let fact = TridiagFactorization::new(y.len(), self.mu)?;
        tv_denoise(y, self.lam, &tv_admm_config(self.mu), &fact)
    }
}

/// ADMM with an arbitrary (typically learned) shrinkage.
pub struct LearnedAdmm<S> {
    pub label: String,
    pub shrink: S,
    pub admm: AdmmConfig,
}

impl<S: Shrinkage> Estimator for LearnedAdmm<S> {
    fn name(&self) -> &str {
        &self.label
    }

    fn estimate(&self, y: &[f64], _sigma2: f64) -> Result<Vec<f64>> {
        let fact = TridiagFactorization::new(y.len(), self.admm.mu)?;
        Ok(admm_run(y, &self.shrink, &self.admm, &fact)?.x_final)
    }
}
