//! Objective values along the ADMM iterations for a learned constrained
//! shrinkage, using its recovered penalty.

use proxlearn::experiments::{convergence_trace, SweepConfig};
use proxlearn::spline::symmetric_grid;
use proxlearn::{recover_penalty, train, LevyModel, TrainingMode};

fn main() -> proxlearn::Result<()> {
    let sweep = SweepConfig {
        outer_iterations: 200,
        ..SweepConfig::desk(LevyModel::compound_poisson(0.6)?)
    };
    let batch = sweep.train_batch(0, 1.0)?;
    let cfg = sweep.train_config(TrainingMode::Constrained, &batch)?;
    let spline = train(&cfg, &batch)?.spline;
    let reach = spline.knot_range() + 2.0 * spline.delta();
    let penalty = recover_penalty(&spline, &symmetric_grid(reach, 20_001))?;
    let test = sweep.test_batch(0, 1.0)?;
    let costs = convergence_trace(&spline, &test.noisy[0], &penalty, 50, cfg.admm.mu)?;
    for (k, c) in costs.iter().enumerate().filter(|(k, _)| k % 5 == 4 || *k < 3) {
        println!("iteration {:>2}: cost {c:.10}", k + 1);
    }
    Ok(())
}
