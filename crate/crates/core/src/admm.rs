//! Generalized ADMM for `min_x ½‖y − x‖² + Σ_i Φ([Lx]_i)`.
//!
//! One iteration, with `M = (I + μLᵀL)⁻¹`:
//!
//! ```text
//! x ← M (y + Lᵀ(μu + α))
//! α ← α − μ(Lx − u)
//! u ← T(Lx − α/μ)
//! ```
//!
//! `T` is any separable [`Shrinkage`]. When `T = prox_Φ` the fixed point
//! minimizes `½‖y − x‖² + μ Σ Φ([Lx]_i)`; the shrinkage absorbs every scale
//! factor, so the iteration itself never rescales `T`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::signal::{apply_l, apply_l_into, apply_lt_into};
use crate::spline::PenaltyCurve;

/// A separable one-dimensional shrinkage function and its derivative.
pub trait Shrinkage: Sync {
    fn shrink(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
}

impl<S: Shrinkage + ?Sized> Shrinkage for &S {
    fn shrink(&self, x: f64) -> f64 {
        (**self).shrink(x)
    }
    fn slope(&self, x: f64) -> f64 {
        (**self).slope(x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Identity;

impl Shrinkage for Identity {
    fn shrink(&self, x: f64) -> f64 {
        x
    }
    fn slope(&self, _: f64) -> f64 {
        1.0
    }
}

/// `prox` of `threshold · |·|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftThreshold {
    pub threshold: f64,
}

impl SoftThreshold {
    pub fn new(threshold: f64) -> Self {
        SoftThreshold { threshold }
    }
}

impl Shrinkage for SoftThreshold {
    fn shrink(&self, x: f64) -> f64 {
        if x > self.threshold {
            x - self.threshold
        } else if x < -self.threshold {
            x + self.threshold
        } else {
            0.0
        }
    }

    fn slope(&self, x: f64) -> f64 {
        if x.abs() > self.threshold {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub mu: f64,
    pub iterations: usize,
    pub record_trace: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            mu: 2.0,
            iterations: 10,
            record_trace: false,
        }
    }
}

impl AdmmConfig {
    pub fn new(mu: f64, iterations: usize) -> Self {
        AdmmConfig {
            mu,
            iterations,
            record_trace: false,
        }
    }

    pub fn traced(self) -> Self {
        AdmmConfig {
            record_trace: true,
            ..self
        }
    }

    pub fn with_iterations(self, iterations: usize) -> Self {
        AdmmConfig { iterations, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("ADMM needs at least one iteration".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmTrace {
    pub x_final: Vec<f64>,
    /// `v^(k) = Lx^(k) − α^(k)/μ` for `k = 1..=K`; empty unless traced.
    #[serde(skip)]
    pub v_per_iter: Vec<Vec<f64>>,
    /// `x^(k)` for `k = 1..=K` when traced.
    #[serde(skip)]
    pub x_per_iter: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost_per_iter: Option<Vec<f64>>,
}

impl AdmmTrace {
    /// Fills `cost_per_iter` with `cost_eval(x^(k), y, penalty)`. Requires a
    /// traced run.
    pub fn attach_costs(&mut self, y: &[f64], penalty: &PenaltyCurve) -> Result<()> {
        let xs = self.x_per_iter.as_ref().ok_or_else(|| {
            Error::InvalidParameter("costs need a run with record_trace enabled".into())
        })?;
        let costs = xs.iter().map(|x| cost_eval(x, y, penalty)).collect::<Result<_>>()?;
        self.cost_per_iter = Some(costs);
        Ok(())
    }
}

/// `LDLᵀ` factorization of the SPD tridiagonal matrix `I + μLᵀL`, whose
/// diagonal is `1 + 2μ` (last entry `1 + μ`) and off-diagonal `−μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagFactorization {
    mu: f64,
    pivots: Vec<f64>,
    multipliers: Vec<f64>,
}

impl TridiagFactorization {
    pub fn new(n: usize, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("empty system".into()));
        }
        let diag = |i: usize| if i + 1 == n { 1.0 + mu } else { 1.0 + 2.0 * mu };
        let off = -mu;
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n.saturating_sub(1));
        pivots.push(diag(0));
        for i in 1..n {
            let l = off / pivots[i - 1];
            multipliers.push(l);
            pivots.push(diag(i) - l * off);
        }
        Ok(TridiagFactorization {
            mu,
            pivots,
            multipliers,
        })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.pivots.len();
        debug_assert_eq!(x.len(), n);
        for i in 1..n {
            x[i] -= self.multipliers[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.multipliers[i] * x[i + 1];
        }
    }

    /// `(I + μLᵀL) x`, used for residual checks.
    pub fn apply_matrix(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mu = self.mu;
        (0..n)
            .map(|i| {
                let d = if i + 1 == n { 1.0 + mu } else { 1.0 + 2.0 * mu };
                let mut s = d * x[i];
                if i > 0 {
                    s -= mu * x[i - 1];
                }
                if i + 1 < n {
                    s -= mu * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Runs exactly `config.iterations` generalized ADMM iterations from
/// `u = α = 0`.
pub fn admm_run<S: Shrinkage + ?Sized>(
    y: &[f64],
    shrink: &S,
    config: &AdmmConfig,
    fact: &TridiagFactorization,
) -> Result<AdmmTrace> {
    config.validate()?;
    let n = y.len();
    check_len(fact.len(), n)?;
    if fact.mu() != config.mu {
        return Err(Error::InvalidParameter(format!(
            "factorization built for mu = {} but config has mu = {}",
            fact.mu(),
            config.mu
        )));
    }
    let mu = config.mu;
    let k_total = config.iterations;

    let mut x = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut lx = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut v = vec![0.0; n];

    let mut v_per_iter = Vec::new();
    let mut x_per_iter = config.record_trace.then(Vec::new);

    for _ in 0..k_total {
        for i in 0..n {
            w[i] = mu * u[i] + alpha[i];
        }
        apply_lt_into(&w, &mut x);
        for (xi, yi) in x.iter_mut().zip(y) {
            *xi += yi;
        }
        fact.solve_in_place(&mut x);

        apply_l_into(&x, &mut lx);
        for i in 0..n {
            alpha[i] -= mu * (lx[i] - u[i]);
            v[i] = lx[i] - alpha[i] / mu;
            u[i] = shrink.shrink(v[i]);
        }

        if config.record_trace {
            v_per_iter.push(v.clone());
            if let Some(xs) = x_per_iter.as_mut() {
                xs.push(x.clone());
            }
        }
    }

    Ok(AdmmTrace {
        x_final: x,
        v_per_iter,
        x_per_iter,
        cost_per_iter: None,
    })
}

/// `½‖y − x‖² + Σ_i Φ([Lx]_i)` with `Φ` interpolated from `penalty`.
pub fn cost_eval(x: &[f64], y: &[f64], penalty: &PenaltyCurve) -> Result<f64> {
    check_len(x.len(), y.len())?;
    if penalty.is_empty() {
        return Err(Error::InvalidParameter("empty penalty curve".into()));
    }
    let fidelity: f64 = 0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let reg: f64 = apply_l(x).iter().map(|&u| penalty.eval(u)).sum();
    Ok(fidelity + reg)
}
