//! Learn one constrained shrinkage at σ² = 1 and reuse it at other noise
//! levels through `T_λ = (λT⁻¹ + (1 − λ)id)⁻¹`, compared with models trained
//! directly at each level and with the unconstrained model reused as is.
//!
//! Usage: `cargo run --release --example scale_noise_level [brownian|poisson]`

use proxlearn::experiments::{run_scale_once, SweepConfig, DIRECT_CADMM, REUSED_ADMM, SCALED_CADMM};
use proxlearn::LevyModel;

fn main() -> proxlearn::Result<()> {
    env_logger::init();
    let model = match std::env::args().nth(1).as_deref() {
        Some("brownian") => LevyModel::BrownianMotion,
        _ => LevyModel::compound_poisson(0.6)?,
    };
    let cfg = SweepConfig {
        estimators: vec![],
        ..SweepConfig::desk(model)
    };
    let report = run_scale_once(&cfg, 1.0)?;
    println!("{:>8} {:>14} {:>14} {:>14}", "sigma2", SCALED_CADMM, DIRECT_CADMM, REUSED_ADMM);
    for &s in &cfg.sigma2_values {
        let get = |name| report.mean(s, name).unwrap_or(f64::NAN);
        println!("{s:>8.4} {:>14.3} {:>14.3} {:>14.3}", get(SCALED_CADMM), get(DIRECT_CADMM), get(REUSED_ADMM));
    }
    Ok(())
}
