//! Sufficient conditions for equilibrium existence, checked analytically and
//! by sampling the own-rate curvature of every utility.
//!
//! ```text
//! cargo run --example existence_check
//! ```

use crowdgame::config::reference_scenario;
use crowdgame::equilibrium::{check_existence, RateBox};

fn main() -> crowdgame::Result<()> {
    let mut cfg = reference_scenario();
    let region = RateBox::uniform(cfg.num_sensors(), 0.1, 0.5);

    let report = check_existence(&cfg, &region, 1_000)?;
    println!("reference scenario");
    println!("  a m^2 - c            = {:.3}", report.curvature_margin);
    println!("  sum r >= 1 at corner = {}", report.condition_b);
    println!(
        "  max d2u/dr2          = {:.4} (sensor {}, {} of {} draws feasible)",
        report.worst_second_derivative,
        report.worst_sensor + 1,
        report.samples_evaluated,
        report.draws
    );

    // Without the quadratic term the fee can be convex in the own rate.
    cfg.blockchain.quad_coeff = 0.0;
    let report = check_existence(&cfg, &region, 1_000)?;
    println!("quad_coeff = 0");
    println!(
        "  condition_a = {}, numeric_concavity = {}",
        report.condition_a, report.numeric_concavity
    );
    Ok(())
}
