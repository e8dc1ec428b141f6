//! Solves the reference game with each method and prints the equilibrium.
//!
//! ```text
//! cargo run --release --example solve_equilibrium
//! ```

use std::time::Instant;

use crowdgame::config::reference_scenario;
use crowdgame::equilibrium::{solve, Method, SolverOptions};

fn main() -> crowdgame::Result<()> {
    let cfg = reference_scenario();
    let mut solutions = Vec::new();

    for method in [Method::GaussSeidelBr, Method::JacobiBr, Method::GradientAscent] {
        let start = Instant::now();
        let eq = solve(&cfg, &SolverOptions::with_method(method))?;
        println!(
            "{:<16} converged={} iterations={:<4} residual={:.2e} ({:.0?})",
            method.name(),
            eq.converged,
            eq.iterations,
            eq.residual,
            start.elapsed()
        );
        solutions.push(eq);
    }

    let eq = &solutions[0];
    println!(
        "\n{:>6} {:>10} {:>10} {:>10} {:>10}",
        "sensor", "rate", "power", "fee", "utility"
    );
    for i in 0..cfg.num_sensors() {
        println!(
            "{:>6} {:>10.6} {:>10.4} {:>10.4} {:>10.4}",
            i + 1,
            eq.rates[i],
            eq.powers[i],
            eq.fees[i],
            eq.utilities[i]
        );
    }

    let spread = solutions
        .iter()
        .flat_map(|a| solutions.iter().map(move |b| a.rates.max_abs_diff(&b.rates)))
        .fold(0.0, f64::max);
    println!("\nlargest disagreement between methods: {spread:.2e}");
    Ok(())
}
