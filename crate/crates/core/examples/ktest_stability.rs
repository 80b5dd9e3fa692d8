//! Train with two unrolled iterations at σ² = 10, then run the learned
//! shrinkages for 2..=50 iterations. The constrained model settles; the
//! unconstrained one need not.
//!
//! Usage: `cargo run --release --example ktest_stability [brownian|poisson]`

use proxlearn::experiments::{run_ktest_stability, KTestConfig};
use proxlearn::LevyModel;

fn main() -> proxlearn::Result<()> {
    env_logger::init();
    let model = match std::env::args().nth(1).as_deref() {
        Some("brownian") => LevyModel::BrownianMotion,
        _ => LevyModel::compound_poisson(0.6)?,
    };
    let report = run_ktest_stability(&KTestConfig::desk(model))?;
    println!("{:>6} {:>12} {:>14}", "K_test", "constrained", "unconstrained");
    for ((k, c), u) in report.k_test.iter().zip(&report.constrained_snr_db).zip(&report.unconstrained_snr_db) {
        println!("{k:>6} {c:>12.3} {u:>14.3}");
    }
    println!(
        "constrained variation over K_test in [20, 50]: {:.4} dB",
        report.constrained_variation(20, 50)
    );
    Ok(())
}
