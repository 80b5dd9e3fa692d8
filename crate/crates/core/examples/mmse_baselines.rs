//! Grid-based posterior mean against the Wiener filter.

use proxlearn::baselines::{lmmse_denoise, mmse_smoother, GridSpec, IncrementDensity, DEFAULT_GRID_POINTS};
use proxlearn::experiments::snr_improvement;
use proxlearn::{LevyModel, SignalBatch};

fn main() -> proxlearn::Result<()> {
    for model in [LevyModel::BrownianMotion, LevyModel::compound_poisson(0.6)?] {
        let batch = SignalBatch::simulate(model, 100, 5, 1.0, 11)?;
        let density = IncrementDensity::new(model)?;
        let (mut mmse, mut lmmse, mut gap) = (0.0, 0.0, 0.0f64);
        for (x, y) in batch.pairs() {
            let grid = GridSpec::for_observation(y, 1.0, DEFAULT_GRID_POINTS, 0.0)?;
            let a = mmse_smoother(y, 1.0, &density, &grid)?;
            let b = lmmse_denoise(y, 1.0)?;
            mmse += snr_improvement(x, &a, y)? / 5.0;
            lmmse += snr_improvement(x, &b, y)? / 5.0;
            gap = gap.max(a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
        }
        println!("{:<17} MMSE {mmse:.3} dB, LMMSE {lmmse:.3} dB, max |MMSE − LMMSE| {gap:.2e}", model.name());
    }
    Ok(())
}
