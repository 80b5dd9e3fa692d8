//! Gradient of `J(c) = ½‖x^(K)(c, y) − x‖²` with respect to the spline
//! coefficients, by reverse accumulation through the unrolled iterations.
//!
//! With `A = L(I + μLᵀL)⁻¹`, `D^(k) = diag T'(v^(k))` and
//! `B^(k) = I − μALᵀ + (2μALᵀ − I)D^(k)`:
//!
//! ```text
//! r ← A(x^(K) − x),  g ← 0
//! for k = K−1, …, 1:
//!     g ← g + μ Ψ^(k) r
//!     r ← B^(k) r
//! ```
//!
//! `A` is never formed; each product costs one tridiagonal solve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{admm_run, AdmmConfig, TridiagFactorization};
use crate::error::{check_len, Error, Result};
use crate::signal::{apply_l_into, apply_lt_into, SignalBatch};
use crate::spline::ShrinkageSpline;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientResult {
    pub grad: Vec<f64>,
    pub loss: f64,
    /// Set when `K < 2`: `x^(K)` then does not depend on the coefficients
    /// and the gradient is identically zero.
    pub degenerate: bool,
}

pub fn backprop_gradient(
    spline: &ShrinkageSpline,
    x: &[f64],
    y: &[f64],
    admm: &AdmmConfig,
    fact: &TridiagFactorization,
) -> Result<GradientResult> {
    check_len(y.len(), x.len())?;
    let config = admm.traced();
    let trace = admm_run(y, spline, &config, fact)?;
    let n = y.len();
    let mu = config.mu;

    let residual: Vec<f64> = trace.x_final.iter().zip(x).map(|(a, b)| a - b).collect();
    let loss = 0.5 * residual.iter().map(|e| e * e).sum::<f64>();
    let mut grad = vec![0.0; spline.num_coeffs()];
    if config.iterations < 2 {
        return Ok(GradientResult {
            grad,
            loss,
            degenerate: true,
        });
    }

    // r = L M (x^(K) − x)
    let mut tmp = residual;
    fact.solve_in_place(&mut tmp);
    let mut r = vec![0.0; n];
    apply_l_into(&tmp, &mut r);

    let mut slope = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut lq = vec![0.0; n];
    for k in (1..config.iterations).rev() {
        let v = &trace.v_per_iter[k - 1];
        for (j, &vj) in v.iter().enumerate() {
            let weight = mu * r[j];
            spline.for_each_basis(vj, |i, psi| grad[i] += psi * weight);
        }
        if k == 1 {
            break;
        }
        // B r = r − D r + L M Lᵀ (μ (2 D r − r))
        for (j, &vj) in v.iter().enumerate() {
            slope[j] = spline.deriv(vj);
            tmp[j] = mu * (2.0 * slope[j] * r[j] - r[j]);
        }
        apply_lt_into(&tmp, &mut q);
        fact.solve_in_place(&mut q);
        apply_l_into(&q, &mut lq);
        for j in 0..n {
            r[j] = r[j] - slope[j] * r[j] + lq[j];
        }
    }

    Ok(GradientResult {
        grad,
        loss,
        degenerate: false,
    })
}

/// Sum of per-signal gradients and losses over a batch.
///
/// Signals are processed in parallel, then reduced in index order, so the
/// result does not depend on the thread count.
pub fn batch_gradient(
    spline: &ShrinkageSpline,
    batch: &SignalBatch,
    admm: &AdmmConfig,
    fact: &TridiagFactorization,
) -> Result<GradientResult> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let parts: Vec<GradientResult> = (0..batch.len())
        .into_par_iter()
        .map(|i| backprop_gradient(spline, &batch.clean[i], &batch.noisy[i], admm, fact))
        .collect::<Result<_>>()?;
    let mut total = GradientResult {
        grad: vec![0.0; spline.num_coeffs()],
        loss: 0.0,
        degenerate: false,
    };
    for part in parts {
        for (g, p) in total.grad.iter_mut().zip(&part.grad) {
            *g += p;
        }
        total.loss += part.loss;
        total.degenerate |= part.degenerate;
    }
    Ok(total)
}

/// `J(c)` alone, summed over the batch in index order.
pub fn batch_loss(
    spline: &ShrinkageSpline,
    batch: &SignalBatch,
    admm: &AdmmConfig,
    fact: &TridiagFactorization,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let cfg = AdmmConfig {
        record_trace: false,
        ..*admm
    };
    let losses: Vec<f64> = batch
        .clean
        .par_iter()
        .zip(&batch.noisy)
        .map(|(x, y)| {
            let trace = admm_run(y, spline, &cfg, fact)?;
            Ok(0.5 * trace.x_final.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{LevyModel, SignalBatch};
    use crate::spline::{BSplineKernel, SplineMode};

    fn setup(mode: SplineMode) -> (ShrinkageSpline, SignalBatch) {
        let batch = SignalBatch::simulate(LevyModel::compound_poisson(0.6).unwrap(), 20, 3, 1.0, 21).unwrap();
        let spline = ShrinkageSpline::from_knot_values(BSplineKernel::cubic(), 0.5, 14, mode, |x| {
            0.8 * x - 0.1 * x.signum() * x.abs().min(1.0)
        })
        .unwrap();
        (spline, batch)
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        // Identity shrinkage and a noiseless constant-zero signal: every
        // iterate is exactly zero.
        let spline = ShrinkageSpline::identity(BSplineKernel::cubic(), 0.5, 10, SplineMode::General).unwrap();
        let x = vec![0.0; 12];
        let fact = TridiagFactorization::new(12, 2.0).unwrap();
        let g = backprop_gradient(&spline, &x, &x, &AdmmConfig::new(2.0, 5), &fact).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_iteration_is_degenerate() {
        let (spline, batch) = setup(SplineMode::General);
        let fact = TridiagFactorization::new(20, 2.0).unwrap();
        let g = backprop_gradient(&spline, &batch.clean[0], &batch.noisy[0], &AdmmConfig::new(2.0, 1), &fact).unwrap();
        assert!(g.degenerate);
        assert!(g.grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_of_one_equals_single() {
        let (spline, batch) = setup(SplineMode::Antisymmetric);
        let fact = TridiagFactorization::new(20, 2.0).unwrap();
        let cfg = AdmmConfig::new(2.0, 4);
        let one = batch.select(&[1]);
        let single = backprop_gradient(&spline, &one.clean[0], &one.noisy[0], &cfg, &fact).unwrap();
        assert_eq!(batch_gradient(&spline, &one, &cfg, &fact).unwrap(), single);
    }

    #[test]
    fn duplicated_signal_doubles_gradient() {
        let (spline, batch) = setup(SplineMode::General);
        let fact = TridiagFactorization::new(20, 2.0).unwrap();
        let cfg = AdmmConfig::new(2.0, 4);
        let single = batch_gradient(&spline, &batch.select(&[0]), &cfg, &fact).unwrap();
        let double = batch_gradient(&spline, &batch.select(&[0, 0]), &cfg, &fact).unwrap();
        for (a, b) in double.grad.iter().zip(&single.grad) {
            assert_eq!(*a, 2.0 * b);
        }
        assert_eq!(double.loss, 2.0 * single.loss);
    }

    #[test]
    fn empty_batch_rejected() {
        let (spline, batch) = setup(SplineMode::General);
        let fact = TridiagFactorization::new(20, 2.0).unwrap();
        assert!(matches!(
            batch_gradient(&spline, &batch.select(&[]), &AdmmConfig::default(), &fact),
            Err(Error::EmptyBatch)
        ));
    }

    fn central_differences(spline: &ShrinkageSpline, x: &[f64], y: &[f64], cfg: &AdmmConfig, h: f64) -> Vec<f64> {
        let fact = TridiagFactorization::new(y.len(), cfg.mu).unwrap();
        let loss = |c: Vec<f64>| {
            let s = spline.with_coeffs(c).unwrap();
            let xk = admm_run(y, &s, cfg, &fact).unwrap().x_final;
            0.5 * xk.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };
        (0..spline.num_coeffs())
            .map(|i| {
                let mut plus = spline.coeffs().to_vec();
                let mut minus = plus.clone();
                plus[i] += h;
                minus[i] -= h;
                (loss(plus) - loss(minus)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn matches_finite_differences_in_both_modes() {
        for mode in [SplineMode::General, SplineMode::Antisymmetric] {
            let (spline, batch) = setup(mode);
            let cfg = AdmmConfig::new(2.0, 3);
            let fact = TridiagFactorization::new(20, 2.0).unwrap();
            for (x, y) in batch.pairs() {
                let g = backprop_gradient(&spline, x, y, &cfg, &fact).unwrap().grad;
                let fd = central_differences(&spline, x, y, &cfg, 1e-5);
                let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
                assert!(norm > 0.0);
                assert!(err / norm < 1e-5, "{mode:?}: relative error {}", err / norm);
            }
        }
    }

    #[test]
    fn batch_loss_matches_gradient_loss() {
        let (spline, batch) = setup(SplineMode::Antisymmetric);
        let fact = TridiagFactorization::new(20, 2.0).unwrap();
        let cfg = AdmmConfig::new(2.0, 6);
        let a = batch_loss(&spline, &batch, &cfg, &fact).unwrap();
        let b = batch_gradient(&spline, &batch, &cfg, &fact).unwrap().loss;
        assert!((a - b).abs() <= 1e-12 * a);
    }
}
