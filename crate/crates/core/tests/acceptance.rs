//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.
//!
//! Reference values come from computations written here, independently of
//! the library routines under test: central finite differences, a
//! coordinate-descent solver for the dual of the TV problem, a dense
//! Gaussian-process posterior mean and closed-form soft-thresholding.

use std::time::Instant;

use proxlearn::baselines::{mmse_smoother, tv_admm_config, tv_denoise, GridSpec, IncrementDensity};
use proxlearn::experiments::{
    run_ktest_stability, run_noise_sweep, run_scale_once, EstimatorKind, KTestConfig, SweepConfig, DIRECT_CADMM,
    SCALED_CADMM,
};
use proxlearn::spline::symmetric_grid;
use proxlearn::{
    admm_run, backprop_gradient, project_to_s, recover_penalty, scale_operator, train, AdmmConfig, BSplineKernel,
    ConstraintSet, LevyModel, ShrinkageSpline, SignalBatch, SoftThreshold, SplineMode, TrainingMode,
    TridiagFactorization,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cp() -> LevyModel {
    LevyModel::compound_poisson(0.6).expect("valid rate")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = AdmmConfig::new(2.0, 3);
    let fact = TridiagFactorization::new(20, 2.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for mode in [SplineMode::General, SplineMode::Antisymmetric] {
        for i in 0..20 {
            let model = if i % 2 == 0 { LevyModel::BrownianMotion } else { cp() };
            let sigma2 = rng.random_range(0.3..3.0);
            let batch = SignalBatch::simulate(model, 20, 1, sigma2, rng.random()).map_err(err)?;
            let (x, y) = (&batch.clean[0], &batch.noisy[0]);
            let delta = rng.random_range(0.2..0.8);
            let m_half = rng.random_range(5..15);
            let base = ShrinkageSpline::identity(BSplineKernel::cubic(), delta, m_half, mode).map_err(err)?;
            let coeffs: Vec<f64> = base.coeffs().iter().map(|c| c * rng.random_range(0.3..1.2)).collect();
            let spline = base.with_coeffs(coeffs).map_err(err)?;
            let g = backprop_gradient(&spline, x, y, &cfg, &fact).map_err(err)?.grad;
            let loss = |c: Vec<f64>| -> Result<f64, String> {
                let s = spline.with_coeffs(c).map_err(err)?;
                let xk = admm_run(y, &s, &cfg, &fact).map_err(err)?.x_final;
                Ok(0.5 * xk.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            };
            let h = 1e-5;
            let mut fd = Vec::with_capacity(g.len());
            for k in 0..g.len() {
                let mut p = spline.coeffs().to_vec();
                let mut m = p.clone();
                p[k] += h;
                m[k] -= h;
                fd.push((loss(p)? - loss(m)?) / (2.0 * h));
            }
            worst = worst.max(rel_l2(&g, &fd));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < 1e-5 && secs < 30.0,
        format!("gradient vs finite differences: worst relative error {worst:.2e} over 40 instances (< 1e-5), {secs:.1} s (< 30 s)"),
    ))
}

/// Desk-scale constrained training at σ² = 1, shared by criteria 2 and 9.
fn trained_constrained() -> Result<ShrinkageSpline, String> {
    let sweep = SweepConfig::desk(cp());
    let batch = sweep.train_batch(0, 1.0).map_err(err)?;
    let cfg = sweep.train_config(TrainingMode::Constrained, &batch).map_err(err)?;
    Ok(train(&cfg, &batch).map_err(err)?.spline)
}

fn criterion_2(spline: &ShrinkageSpline) -> Outcome {
    let delta = spline.delta();
    let full = spline.full_coeffs();
    let inc: Vec<f64> = full.windows(2).map(|w| w[1] - w[0]).collect();
    let (imin, imax) = inc.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| (a.min(d), b.max(d)));
    // Slopes from difference quotients of T on a 10⁴-point grid over the knot range.
    let r = spline.knot_range();
    let xs: Vec<f64> = (0..10_000).map(|j| -r + 2.0 * r * j as f64 / 9_999.0).collect();
    let mut smin = f64::INFINITY;
    let mut smax = f64::NEG_INFINITY;
    for w in xs.windows(2) {
        let s = (spline.eval(w[1]) - spline.eval(w[0])) / (w[1] - w[0]);
        smin = smin.min(s);
        smax = smax.max(s);
    }
    let ok = imin >= -1e-10 && imax <= delta + 1e-10 && smin >= -1e-9 && smax <= 1.0 + 1e-9;
    Ok((
        ok,
        format!(
            "firm nonexpansiveness after training: increments in [{imin:.2e}, {imax:.6}] (Δ = {delta:.6}), slopes in [{smin:.2e}, {smax:.9}]"
        ),
    ))
}

/// Coordinate descent on the dual of `min ½‖y − x‖² + lam‖Lx‖₁`:
/// minimize `½‖y − Lᵀz‖²` over `|z_i| ≤ lam`, then `x = y − Lᵀz`.
fn tv_dual_reference(y: &[f64], lam: f64) -> Vec<f64> {
    let n = y.len();
    let mut z = vec![0.0; n];
    for _ in 0..2_000_000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let next = if i + 1 < n { z[i + 1] } else { 0.0 };
            let target = if i == 0 {
                y[0] + next
            } else {
                (y[i] - y[i - 1] + next + z[i - 1]) / 2.0
            };
            let new = target.clamp(-lam, lam);
            change = change.max((new - z[i]).abs());
            z[i] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    (0..n)
        .map(|i| y[i] - (z[i] - if i + 1 < n { z[i + 1] } else { 0.0 }))
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let batch = SignalBatch::simulate(cp(), 100, 10, 1.0, 303).map_err(err)?;
    let cfg = tv_admm_config(2.0);
    let fact = TridiagFactorization::new(100, 2.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for y in &batch.noisy {
        let admm = tv_denoise(y, 1.0, &cfg, &fact).map_err(err)?;
        worst = worst.max(rel_l2(&admm, &tv_dual_reference(y, 1.0)));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < 1e-6 && secs < 60.0 && cfg.iterations == 2000,
        format!("TV ADMM (K = {}) vs dual reference: worst relative error {worst:.2e} on 10 signals (< 1e-6), {secs:.1} s", cfg.iterations),
    ))
}

/// `E[x | y]` for Brownian motion with unit increments started at 0:
/// `C (C + σ²I)⁻¹ y` with `C_ij = min(i, j)`, by Cholesky.
fn brownian_posterior_mean(y: &[f64], sigma2: f64) -> Vec<f64> {
    let n = y.len();
    let c = |i: usize, j: usize| (i.min(j) + 1) as f64;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = c(i, j) + if i == j { sigma2 } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
        }
    }
    let mut w = y.to_vec();
    for i in 0..n {
        for k in 0..i {
            w[i] -= l[i][k] * w[k];
        }
        w[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            w[i] -= l[k][i] * w[k];
        }
        w[i] /= l[i][i];
    }
    (0..n).map(|i| (0..n).map(|j| c(i, j) * w[j]).sum()).collect()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let batch = SignalBatch::simulate(LevyModel::BrownianMotion, 100, 20, 1.0, 404).map_err(err)?;
    let density = IncrementDensity::new(LevyModel::BrownianMotion).map_err(err)?;
    let (mut oracle, mut doubling): (f64, f64) = (0.0, 0.0);
    for y in &batch.noisy {
        let g1 = mmse_smoother(y, 1.0, &density, &GridSpec::for_observation(y, 1.0, 2048, 0.0).map_err(err)?).map_err(err)?;
        let g2 = mmse_smoother(y, 1.0, &density, &GridSpec::for_observation(y, 1.0, 4096, 0.0).map_err(err)?).map_err(err)?;
        oracle = oracle.max(max_abs_diff(&g1, &brownian_posterior_mean(y, 1.0)));
        doubling = doubling.max(max_abs_diff(&g1, &g2));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        oracle < 1e-3 && doubling < 1e-6 && secs < 120.0,
        format!("Brownian grid MMSE: max error vs posterior mean {oracle:.2e} (< 1e-3), G 2048 vs 4096 {doubling:.2e} (< 1e-6), {secs:.1} s"),
    ))
}

fn sweep_at_unit_noise(model: LevyModel, estimators: Vec<EstimatorKind>) -> Result<(proxlearn::experiments::ExperimentReport, f64), String> {
    let start = Instant::now();
    let cfg = SweepConfig {
        sigma2_values: vec![1.0],
        estimators,
        ..SweepConfig::desk(model)
    };
    let report = run_noise_sweep(&cfg).map_err(err)?;
    Ok((report, start.elapsed().as_secs_f64()))
}

fn mean_of(report: &proxlearn::experiments::ExperimentReport, sigma2: f64, label: &str) -> Result<f64, String> {
    report.mean(sigma2, label).ok_or_else(|| format!("no cell for {label} at sigma2 = {sigma2}"))
}

fn criterion_5() -> Outcome {
    let (r, secs) = sweep_at_unit_noise(cp(), vec![EstimatorKind::Cadmm, EstimatorKind::Mmse, EstimatorKind::Tv])?;
    let cadmm = mean_of(&r, 1.0, EstimatorKind::Cadmm.label())?;
    let mmse = mean_of(&r, 1.0, EstimatorKind::Mmse.label())?;
    let tv = mean_of(&r, 1.0, EstimatorKind::Tv.label())?;
    Ok((
        (mmse - cadmm).abs() < 0.5 && cadmm > tv && secs < 900.0,
        format!("compound Poisson σ² = 1: CADMM {cadmm:.3} dB, MMSE {mmse:.3} dB (gap {:.3} < 0.5), TV {tv:.3} dB, {secs:.1} s", mmse - cadmm),
    ))
}

fn criterion_6() -> Outcome {
    let (r, secs) = sweep_at_unit_noise(LevyModel::BrownianMotion, vec![EstimatorKind::Cadmm, EstimatorKind::Lmmse])?;
    let cadmm = mean_of(&r, 1.0, EstimatorKind::Cadmm.label())?;
    let lmmse = mean_of(&r, 1.0, EstimatorKind::Lmmse.label())?;
    Ok((
        (lmmse - cadmm).abs() < 0.3 && secs < 900.0,
        format!("Brownian σ² = 1: CADMM {cadmm:.3} dB, LMMSE {lmmse:.3} dB (gap {:.3} < 0.3), {secs:.1} s", lmmse - cadmm),
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let levels = [10f64.powf(-0.5), 10f64.powf(0.5)];
    let cfg = SweepConfig {
        sigma2_values: levels.to_vec(),
        estimators: vec![],
        ..SweepConfig::desk(cp())
    };
    let r = run_scale_once(&cfg, 1.0).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for s in levels {
        let scaled = mean_of(&r, s, SCALED_CADMM)?;
        let direct = mean_of(&r, s, DIRECT_CADMM)?;
        ok &= (scaled - direct).abs() < 0.3;
        parts.push(format!("σ² = {s:.4}: scaled {scaled:.3} vs direct {direct:.3} dB"));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((ok && secs < 1200.0, format!("scale once: {} (< 0.3 dB), {secs:.1} s", parts.join(", "))))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let tau = 0.4;
    let spline = ShrinkageSpline::from_knot_values(BSplineKernel::new(1), 0.02, 400, SplineMode::Antisymmetric, |v| {
        v.signum() * (v.abs() - tau).max(0.0)
    })
    .map_err(err)?;
    let mut worst: f64 = 0.0;
    for y in [-3.0, -1.1, -0.8, -0.5, -0.1, 0.0, 0.2, 0.79, 0.81, 1.5, 4.0] {
        let want = f64::signum(y) * (f64::abs(y) - 2.0 * tau).max(0.0);
        worst = worst.max((scale_operator(&spline, 2.0, y, 1e-12).map_err(err)? - want).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < 1e-6 && secs < 1.0,
        format!("scaling soft-threshold({tau}) by 2: max error vs soft-threshold({}) {worst:.2e} (< 1e-6), {secs:.3} s", 2.0 * tau),
    ))
}

fn criterion_9(trained: &ShrinkageSpline) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut splines = vec![trained.clone()];
    for _ in 0..10 {
        let delta = rng.random_range(0.2..1.0);
        let m_half = rng.random_range(6..20);
        let set = ConstraintSet::new(delta, m_half, SplineMode::Antisymmetric).map_err(err)?;
        let z: Vec<f64> = (0..m_half).map(|_| rng.random_range(-1.0..3.0) * delta * 2.0).collect();
        let c = project_to_s(&z, &set, 1e-12).map_err(err)?;
        splines.push(ShrinkageSpline::new(BSplineKernel::cubic(), delta, m_half, SplineMode::Antisymmetric, c).map_err(err)?);
    }
    let (mut sym, mut conv): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for s in &splines {
        let reach = s.knot_range() + 2.0 * s.delta();
        let curve = recover_penalty(s, &symmetric_grid(reach, 20_001)).map_err(err)?;
        let scale = curve.phi_prime_values.iter().fold(1.0f64, |m, p| m.max(p.abs()));
        sym = sym.max(curve.symmetry_error());
        conv = conv.max(curve.convexity_violation() / scale);
    }
    let soft = recover_penalty(&SoftThreshold::new(1.0), &symmetric_grid(6.0, 12_001)).map_err(err)?;
    let abs_err = soft
        .u_grid
        .iter()
        .zip(&soft.phi_values)
        .map(|(u, f)| (f - u.abs()).abs())
        .fold(0.0, f64::max);
    Ok((
        sym < 1e-6 && conv <= 1e-9 && abs_err < 1e-3,
        format!(
            "penalty recovery on {} constrained splines: symmetry {sym:.2e} (< 1e-6), largest normalized slope decrease {conv:.2e} (≤ 1e-9); soft threshold vs |u| {abs_err:.2e} (< 1e-3)",
            splines.len()
        ),
    ))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let r = run_ktest_stability(&KTestConfig::desk(cp())).map_err(err)?;
    let var = r.constrained_variation(20, 50);
    let secs = start.elapsed().as_secs_f64();
    let pick = |v: &[f64], k: usize| r.k_test.iter().position(|&x| x == k).map(|i| v[i]).unwrap_or(f64::NAN);
    Ok((
        var < 0.2 && secs < 600.0,
        format!(
            "K_test stability: constrained variation over [20, 50] {var:.4} dB (< 0.2); unconstrained SNR at K = 2, 20, 50: {:.2}, {:.2}, {:.2} dB; {secs:.1} s",
            pick(&r.unconstrained_snr_db, 2),
            pick(&r.unconstrained_snr_db, 20),
            pick(&r.unconstrained_snr_db, 50)
        ),
    ))
}

fn report(n: usize, outcome: Outcome) -> bool {
    match outcome {
        Ok((true, detail)) => {
            println!("PASS criterion {n:>2}: {detail}");
            true
        }
        Ok((false, detail)) => {
            println!("FAIL criterion {n:>2}: {detail}");
            false
        }
        Err(e) => {
            println!("FAIL criterion {n:>2}: error: {e}");
            false
        }
    }
}

fn main() {
    // `cargo test -- <filter>` passes arguments; only an explicit filter that
    // does not mention this suite skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let trained = trained_constrained();
    let results = [
        report(1, criterion_1()),
        report(2, trained.clone().and_then(|s| criterion_2(&s))),
        report(3, criterion_3()),
        report(4, criterion_4()),
        report(5, criterion_5()),
        report(6, criterion_6()),
        report(7, criterion_7()),
        report(8, criterion_8()),
        report(9, trained.and_then(|s| criterion_9(&s))),
        report(10, criterion_10()),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
