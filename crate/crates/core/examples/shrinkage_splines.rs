//! Build shrinkage splines, evaluate them and check firm nonexpansiveness.

use proxlearn::{BSplineKernel, ShrinkageSpline, SplineMode};

fn main() -> proxlearn::Result<()> {
    let delta = 0.25;
    let identity = ShrinkageSpline::identity(BSplineKernel::cubic(), delta, 24, SplineMode::General)?;
    println!("identity: T(1.3) = {:.12}, knot range ±{}", identity.eval(1.3), identity.knot_range());

    // c_m = max(0, m − 2)Δ: a smoothed soft threshold.
    let soft = ShrinkageSpline::from_knot_values(BSplineKernel::cubic(), delta, 24, SplineMode::Antisymmetric, |x| {
        x.signum() * (x.abs() - 2.0 * delta).max(0.0)
    })?;
    for x in [-2.0, -0.5, 0.0, 0.3, 1.0, 2.0] {
        println!("T({x:>5}) = {:>8.5}   T'({x:>5}) = {:.5}", soft.eval(x), soft.deriv(x));
    }
    let report = soft.check_firmly_nonexpansive(10_000);
    println!(
        "firmly nonexpansive: {} (slopes in [{:.3e}, {:.6}], increments in [{:.3e}, {:.6}])",
        report.ok, report.min_slope, report.max_slope, report.min_increment, report.max_increment
    );

    let steep = soft.with_coeffs(soft.coeffs().iter().map(|c| 2.0 * c).collect())?;
    println!("doubled coefficients: ok = {}", steep.check_firmly_nonexpansive(10_000).ok);
    Ok(())
}
