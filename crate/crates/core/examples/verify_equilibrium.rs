//! Certifies a solved profile as an epsilon-Nash equilibrium two ways: the
//! solver's refined deviation search and a brute-force grid.
//!
//! ```text
//! cargo run --release --example verify_equilibrium
//! ```

use crowdgame::config::reference_scenario;
use crowdgame::equilibrium::{solve, verify_epsilon_ne, SolverOptions};
use crowdgame::oracle::grid_certify_ne;

fn main() -> crowdgame::Result<()> {
    let cfg = reference_scenario();
    let opts = SolverOptions::default();
    let eq = solve(&cfg, &opts)?;

    let check = verify_epsilon_ne(&eq.rates, &cfg, 1e-6, 1_000, opts.min_rate)?;
    let grid_gain = grid_certify_ne(&eq.rates, &cfg, 10_000, opts.min_rate)?;
    println!(
        "equilibrium: verified={} worst gain={:.2e}",
        check.verified, check.worst_gain
    );
    println!("             grid worst gain={grid_gain:.2e}");

    // The reference equilibrium sits close to channel saturation, so nudge
    // downward: raising any rate by 0.05 leaves the achievable region.
    let nudged = eq.rates.with(0, eq.rates[0] - 0.05);
    let check = verify_epsilon_ne(&nudged, &cfg, 1e-6, 1_000, opts.min_rate)?;
    println!(
        "nudged:      verified={} worst gain={:.2e} (sensor {}), sensor 1 gains {:.2e}",
        check.verified,
        check.worst_gain,
        check.worst_sensor + 1,
        check.gains[0]
    );
    Ok(())
}
