//! Desk-scale noise sweep: learned CADMM/ADMM shrinkages against the MMSE,
//! LMMSE and oracle-TV baselines.
//!
//! Usage: `cargo run --release --example noise_sweep [brownian|poisson] [sigma2...]`

use proxlearn::experiments::{run_noise_sweep, SweepConfig};
use proxlearn::LevyModel;

fn main() -> proxlearn::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let model = match args.next().as_deref() {
        Some("brownian") => LevyModel::BrownianMotion,
        _ => LevyModel::compound_poisson(0.6)?,
    };
    let mut cfg = SweepConfig::desk(model);
    let levels: Vec<f64> = args.filter_map(|a| a.parse().ok()).collect();
    if !levels.is_empty() {
        cfg.sigma2_values = levels;
    }
    let report = run_noise_sweep(&cfg)?;
    print!("{}", report.summary());
    println!("wall time {:.1} s", report.wall_time_s);
    Ok(())
}
