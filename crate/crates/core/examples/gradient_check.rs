//! Compare the backpropagated gradient with central finite differences.

use proxlearn::{admm_run, backprop_gradient, AdmmConfig, BSplineKernel, LevyModel, ShrinkageSpline, SignalBatch, SplineMode, TridiagFactorization};

fn main() -> proxlearn::Result<()> {
    let batch = SignalBatch::simulate(LevyModel::compound_poisson(0.6)?, 20, 1, 1.0, 9)?;
    let (x, y) = (&batch.clean[0], &batch.noisy[0]);
    let cfg = AdmmConfig::new(2.0, 3);
    let fact = TridiagFactorization::new(20, cfg.mu)?;
    for mode in [SplineMode::General, SplineMode::Antisymmetric] {
        let spline = ShrinkageSpline::from_knot_values(BSplineKernel::cubic(), 0.5, 12, mode, |v| 0.7 * v)?;
        let g = backprop_gradient(&spline, x, y, &cfg, &fact)?.grad;
        let loss = |c: Vec<f64>| -> proxlearn::Result<f64> {
            let xk = admm_run(y, &spline.with_coeffs(c)?, &cfg, &fact)?.x_final;
            Ok(0.5 * xk.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        };
        let h = 1e-5;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..g.len() {
            let mut p = spline.coeffs().to_vec();
            let mut m = p.clone();
            p[i] += h;
            m[i] -= h;
            let fd = (loss(p)? - loss(m)?) / (2.0 * h);
            num += (g[i] - fd).powi(2);
            den += fd * fd;
        }
        println!("{mode:?}: {} coefficients, relative error {:.3e}", g.len(), (num / den).sqrt());
    }
    Ok(())
}
