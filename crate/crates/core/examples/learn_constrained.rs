//! Learn a constrained (firmly nonexpansive, antisymmetric) shrinkage and an
//! unconstrained one from the same training batch.
//!
//! Usage: `cargo run --release --example learn_constrained [iterations]`

use proxlearn::experiments::{evaluate_shrinkage, SweepConfig};
use proxlearn::{train, LevyModel, TrainingMode};

fn main() -> proxlearn::Result<()> {
    env_logger::init();
    let iters = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(300);
    let sweep = SweepConfig {
        outer_iterations: iters,
        ..SweepConfig::desk(LevyModel::compound_poisson(0.6)?)
    };
    let train_batch = sweep.train_batch(0, 1.0)?;
    let test = sweep.test_batch(0, 1.0)?;
    for mode in [TrainingMode::Constrained, TrainingMode::Unconstrained] {
        let cfg = sweep.train_config(mode, &train_batch)?;
        let out = train(&cfg, &train_batch)?;
        let db = evaluate_shrinkage(&out.spline, &cfg.admm, &test)?;
        println!(
            "{:<13} Δ = {}, M = {}, loss {:.1} -> {:.1}, test ΔSNR {:.3} dB, firmly nonexpansive: {}",
            mode.name(),
            cfg.delta,
            cfg.m_half,
            out.loss_history[0],
            out.loss_history[out.loss_history.len() - 1],
            db.iter().sum::<f64>() / db.len() as f64,
            out.spline.check_firmly_nonexpansive(10_000).ok
        );
    }
    Ok(())
}
