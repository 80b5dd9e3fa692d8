//! Fast oracle checks run by `proxlearn selftest`.
//!
//! Each check compares a library routine against an independent computation
//! (closed form, dense solve, finite differences or brute force) and reports
//! the observed error next to its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::admm::{admm_run, AdmmConfig, SoftThreshold, TridiagFactorization};
use crate::baselines::{
    lmmse_denoise, mmse_smoother, tv_admm_config, tv_denoise, GridSpec, IncrementDensity, DEFAULT_GRID_POINTS,
};
use crate::error::Result;
use crate::learning::{backprop_gradient, project_to_s, ConstraintSet};
use crate::signal::{apply_l, apply_lt, cumulative_sum, LevyModel, SignalBatch};
use crate::spline::{
    kernel_eval, recover_penalty, scale_operator, symmetric_grid, BSplineKernel, ShrinkageSpline, SplineMode,
};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:<36} error {:.3e} (tolerance {:.1e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.error,
                    c.tolerance
                )
            })
            .collect()
    }
}

fn check(name: &str, error: f64, tolerance: f64) -> Check {
    Check {
        name: name.to_string(),
        error,
        tolerance,
        passed: error < tolerance,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn run_selftest(seed: u64) -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut pou: f64 = 0.0;
    for order in 0..=3u32 {
        for _ in 0..100 {
            let x: f64 = rng.random_range(-10.0..10.0);
            let s: f64 = (-15..=15).map(|m| kernel_eval(order, x - m as f64)).sum();
            pou = pou.max((s - 1.0).abs());
        }
    }
    checks.push(check("B-spline partition of unity", pou, 1e-12));

    let cubic = [(0.0, 2.0 / 3.0), (1.0, 1.0 / 6.0), (2.0, 0.0)];
    let err = cubic.iter().map(|&(x, v)| (kernel_eval(3, x) - v).abs()).fold(0.0, f64::max);
    checks.push(check("cubic B-spline values", err, 1e-15));

    let mut adj: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = apply_l(&x).iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(apply_lt(&u)).map(|(a, b)| a * b).sum();
        adj = adj.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300));
    }
    checks.push(check("difference operator adjoint", adj, 1e-12));

    let b: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
    let fact = TridiagFactorization::new(100, 2.0)?;
    let x = fact.solve(&b);
    // (I + μLᵀL)x computed from the operators, independently of the factorization.
    let ax: Vec<f64> = x.iter().zip(apply_lt(&apply_l(&x))).map(|(xi, li)| xi + 2.0 * li).collect();
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    checks.push(check("tridiagonal solve residual", max_abs_diff(&ax, &b) / bmax, 1e-10));

    let mut grad_err: f64 = 0.0;
    for mode in [SplineMode::General, SplineMode::Antisymmetric] {
        let batch = SignalBatch::simulate(LevyModel::compound_poisson(0.6)?, 20, 2, 1.0, seed ^ 0x5eed)?;
        let spline = ShrinkageSpline::from_knot_values(BSplineKernel::cubic(), 0.5, 14, mode, |v| {
            0.8 * v - 0.1 * v.signum() * v.abs().min(1.0)
        })?;
        let cfg = AdmmConfig::new(2.0, 3);
        let fact = TridiagFactorization::new(20, 2.0)?;
        for (x, y) in batch.pairs() {
            let g = backprop_gradient(&spline, x, y, &cfg, &fact)?.grad;
            let loss = |c: Vec<f64>| -> Result<f64> {
                let s = spline.with_coeffs(c)?;
                let xk = admm_run(y, &s, &cfg, &fact)?.x_final;
                Ok(0.5 * xk.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            };
            let h = 1e-5;
            let mut fd = Vec::with_capacity(g.len());
            for i in 0..g.len() {
                let mut p = spline.coeffs().to_vec();
                let mut m = p.clone();
                p[i] += h;
                m[i] -= h;
                fd.push((loss(p)? - loss(m)?) / (2.0 * h));
            }
            grad_err = grad_err.max(rel_l2(&g, &fd));
        }
    }
    checks.push(check("backprop vs finite differences", grad_err, 1e-5));

    let set = ConstraintSet::new(1.0, 2, SplineMode::Antisymmetric)?;
    let p = project_to_s(&[0.5, 3.0], &set, 1e-12)?;
    let mut best = (f64::INFINITY, [0.0; 2]);
    for i in 0..=1000 {
        for j in 0..=1000 {
            let c = [i as f64 * 1e-3, i as f64 * 1e-3 + j as f64 * 1e-3];
            let d = (c[0] - 0.5).powi(2) + (c[1] - 3.0).powi(2);
            if d < best.0 {
                best = (d, c);
            }
        }
    }
    checks.push(check("projection vs brute force", max_abs_diff(&p, &best.1), 1e-3));

    let tau = 0.5;
    let spline = ShrinkageSpline::from_knot_values(BSplineKernel::new(1), 0.05, 200, SplineMode::Antisymmetric, |v| {
        v.signum() * (v.abs() - tau).max(0.0)
    })?;
    let err = [-5.0 * tau, 0.0, 3.0 * tau]
        .iter()
        .map(|&y| {
            let want = y.signum() * (y.abs() - 2.0 * tau).max(0.0);
            scale_operator(&spline, 2.0, y, 1e-12).map(|got| (got - want).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(check("noise-level scaling closed form", err, 1e-6));

    let curve = recover_penalty(&SoftThreshold::new(1.0), &symmetric_grid(6.0, 12_001))?;
    let err = curve
        .u_grid
        .iter()
        .zip(&curve.phi_values)
        .map(|(u, f)| (f - u.abs()).abs())
        .fold(0.0, f64::max);
    checks.push(check("penalty of soft threshold is |u|", err, 1e-3));

    let batch = SignalBatch::simulate(LevyModel::BrownianMotion, 40, 1, 1.0, seed ^ 0xb0)?;
    let y = &batch.noisy[0];
    let d = IncrementDensity::new(LevyModel::BrownianMotion)?;
    let grid = GridSpec::for_observation(y, 1.0, DEFAULT_GRID_POINTS, 0.0)?;
    let err = max_abs_diff(&mmse_smoother(y, 1.0, &d, &grid)?, &lmmse_denoise(y, 1.0)?);
    checks.push(check("Brownian MMSE equals LMMSE", err, 1e-3));

    let batch = SignalBatch::simulate(LevyModel::compound_poisson(0.6)?, 30, 1, 1.0, seed ^ 0x7f)?;
    let y = &batch.noisy[0];
    let fact = TridiagFactorization::new(30, 2.0)?;
    let admm = tv_denoise(y, 1.0, &tv_admm_config(2.0), &fact)?;
    checks.push(check("TV ADMM vs proximal gradient", rel_l2(&admm, &ista_tv(y, 1.0)), 1e-6));

    Ok(SelftestReport { checks })
}

/// Accelerated proximal gradient with restart on the increments `u = Lx`.
fn ista_tv(y: &[f64], lam: f64) -> Vec<f64> {
    let n = y.len();
    let step = 2.0 / (n * (n + 1)) as f64;
    let mut u = apply_l(y);
    let mut z = u.clone();
    let mut t = 1.0f64;
    for _ in 0..100_000 {
        let r: Vec<f64> = cumulative_sum(&z).iter().zip(y).map(|(a, b)| a - b).collect();
        let mut g = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n).rev() {
            acc += r[i];
            g[i] = acc;
        }
        let next: Vec<f64> = z
            .iter()
            .zip(&g)
            .map(|(zi, gi)| {
                let v = zi - step * gi;
                v.signum() * (v.abs() - step * lam).max(0.0)
            })
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let restart: f64 = z.iter().zip(&next).zip(&u).map(|((a, b), c)| (a - b) * (b - c)).sum();
        if restart > 0.0 {
            t = 1.0;
            z = next.clone();
        } else {
            let beta = (t - 1.0) / t_next;
            z = next.iter().zip(&u).map(|(a, b)| a + beta * (a - b)).collect();
            t = t_next;
        }
        u = next;
    }
    cumulative_sum(&u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        let report = run_selftest(11).unwrap();
        assert!(report.passed(), "{:#?}", report.lines());
        assert_eq!(report.lines().len(), report.checks.len());
    }
}
