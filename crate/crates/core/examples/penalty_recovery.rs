//! Recover the convex penalty whose proximal map is a given shrinkage, and
//! write it as CSV.
//!
//! Usage: `cargo run --example penalty_recovery [out.csv]`

use proxlearn::spline::symmetric_grid;
use proxlearn::{recover_penalty, BSplineKernel, ShrinkageSpline, SoftThreshold, SplineMode};

fn main() -> proxlearn::Result<()> {
    let soft = recover_penalty(&SoftThreshold::new(1.0), &symmetric_grid(5.0, 10_001))?;
    let worst = soft
        .u_grid
        .iter()
        .zip(&soft.phi_values)
        .map(|(u, f)| (f - u.abs()).abs())
        .fold(0.0, f64::max);
    println!("soft threshold: max |Φ(u) − |u|| = {worst:.2e}");

    let spline = ShrinkageSpline::from_knot_values(BSplineKernel::cubic(), 0.25, 24, SplineMode::Antisymmetric, |x| {
        x.signum() * (0.8 * x.abs() - 0.2).max(0.0)
    })?;
    let curve = recover_penalty(&spline, &symmetric_grid(4.0, 20_001))?;
    println!(
        "spline: {} samples, symmetry error {:.2e}, largest secant-slope decrease {:.2e} (convex if ≤ 0)",
        curve.len(),
        curve.symmetry_error(),
        curve.convexity_violation()
    );
    if let Some(path) = std::env::args().nth(1) {
        curve.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
