//! Utility of one sensor against the equilibrium profile of the others,
//! drawn as a coarse text plot with the refined best response marked.
//!
//! ```text
//! cargo run --release --example best_response_curve
//! ```

use crowdgame::config::reference_scenario;
use crowdgame::equilibrium::SolverOptions;
use crowdgame::experiment::run_br_curve;

fn main() -> crowdgame::Result<()> {
    let cfg = reference_scenario();
    let curve = run_br_curve(&cfg, 1, &SolverOptions::default())?;
    let (best_rate, best_utility) = curve.best_response;

    let lo = curve.grid.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let width = 60.0;
    for &(rate, utility) in curve.grid.iter().step_by(16) {
        let bar = ((utility - lo) / (best_utility - lo) * width).round().max(0.0) as usize;
        println!("{rate:>8.4} {utility:>10.4} {}", "#".repeat(bar));
    }
    println!("best response of sensor 2: r = {best_rate:.9}, u = {best_utility:.9}");
    println!("equilibrium rate:          r = {:.9}", curve.equilibrium.rates[1]);
    println!("grid cell width:           {:.2e}", curve.cell_width());
    Ok(())
}
