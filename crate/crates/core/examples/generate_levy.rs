//! Simulate Lévy-process signals and their noisy observations, then check
//! the increment statistics.

use proxlearn::{apply_l, LevyModel, SignalBatch};

fn main() -> proxlearn::Result<()> {
    for model in [LevyModel::BrownianMotion, LevyModel::compound_poisson(0.6)?] {
        let batch = SignalBatch::simulate(model, 100, 1000, 1.0, 42)?;
        let increments: Vec<f64> = batch.clean.iter().flat_map(|x| apply_l(x)).collect();
        let zeros = increments.iter().filter(|u| **u == 0.0).count() as f64 / increments.len() as f64;
        let var = increments.iter().map(|u| u * u).sum::<f64>() / increments.len() as f64;
        let noise: Vec<f64> = batch.pairs().flat_map(|(x, y)| y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>()).collect();
        let noise_var = noise.iter().map(|n| n * n).sum::<f64>() / noise.len() as f64;
        println!(
            "{:<17} zero increments {:.4} (expected {:.4}), increment second moment {:.4}, noise variance {:.4}",
            model.name(),
            zeros,
            model.zero_probability(),
            var,
            noise_var
        );
    }
    Ok(())
}
