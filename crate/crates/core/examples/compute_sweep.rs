//! Sweeps the blockchain's computation coefficient and writes the
//! equilibrium rates as CSV.
//!
//! ```text
//! cargo run --release --example compute_sweep > sweep.csv
//! ```

use crowdgame::config::reference_scenario;
use crowdgame::equilibrium::SolverOptions;
use crowdgame::experiment::{run_sweep, Report, SweepSpec};

fn main() -> crowdgame::Result<()> {
    let cfg = reference_scenario();
    let sweep = SweepSpec {
        param: "blockchain.compute_coeff".into(),
        values: vec![2.4, 2.7, 3.0, 3.3],
    };
    let report = run_sweep(&cfg, &sweep, &SolverOptions::default())?;
    print!("{}", report.render());

    // Larger m makes fees steeper: sensor 2 backs off while sensor 3 gains.
    for p in &report.points {
        if let Ok(eq) = &p.outcome {
            eprintln!("m = {:.1}: r2 = {:.9}  r3 = {:.9}", p.value, eq.rates[1], eq.rates[2]);
        }
    }
    Ok(())
}
