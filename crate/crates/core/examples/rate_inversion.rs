//! Forward rate map and its closed-form inverse.
//!
//! ```text
//! cargo run --example rate_inversion
//! ```

use crowdgame::config::reference_scenario;
use crowdgame::model::{forward_rates, invert_rates, PowerVector, RateVector};

fn main() -> crowdgame::Result<()> {
    let cfg = reference_scenario();

    let target = RateVector::new(vec![0.30, 0.25, 0.20, 0.30, 0.25, 0.20, 0.30, 0.25, 0.20, 0.30]);
    let (powers, inv) = invert_rates(&target, &cfg)?;
    let back = forward_rates(&powers, &cfg)?;

    println!("load sum(gamma) = {:.6}  (must stay below 1)", inv.load);
    println!("{:>6} {:>10} {:>12} {:>12}", "sensor", "rate", "power", "round trip");
    for i in 0..cfg.num_sensors() {
        println!(
            "{:>6} {:>10.4} {:>12.6} {:>12.3e}",
            i + 1,
            target[i],
            powers[i],
            (back[i] - target[i]).abs()
        );
    }

    // Pushing every sensor to 0.35 saturates the channel.
    match invert_rates(&RateVector::filled(10, 0.35), &cfg) {
        Ok(_) => println!("0.35 each is achievable"),
        Err(e) => println!("0.35 each: {e}"),
    }

    // Power at or below the circuit draw transmits nothing.
    let idle = PowerVector::new(cfg.sensors.iter().map(|s| s.circuit_power).collect());
    println!("rates at circuit power: {:?}", forward_rates(&idle, &cfg)?.as_slice());
    Ok(())
}
