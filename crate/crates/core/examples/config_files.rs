//! Builds a small game in code, saves it as a config document, and runs
//! the same experiment the `crowdgame` binary would.
//!
//! ```text
//! cargo run --example config_files
//! ```

use crowdgame::config::{load_config, to_document};
use crowdgame::experiment::{run, Command, ExperimentSpec};
use crowdgame::{BlockchainParams, GameConfig, SensorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sensor = |gain: f64, circuit: f64| SensorParams {
        bandwidth: 2.0,
        channel_gain: gain,
        ap_distance: 0.2,
        path_loss_exp: 3.0,
        circuit_power: circuit,
        unit_rate_price: 5.0,
        beacon_distance: 1.0,
        max_received_power: 10.0,
    };
    let cfg = GameConfig::new(
        vec![sensor(2.0, 1.0), sensor(1.5, 1.0), sensor(2.0, 2.0)],
        1.0,
        0.01,
        2.0,
        BlockchainParams {
            quad_coeff: 0.1,
            lin_coeff: 0.1,
            const_coeff: 0.1,
            compute_coeff: 3.0,
        },
    )?;

    let dir = std::env::temp_dir().join("crowdgame-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("three_sensors.cfg");
    std::fs::write(&path, to_document(&cfg))?;
    assert_eq!(load_config(&path)?, cfg);

    let mut spec = ExperimentSpec::new(&path, Command::Solve);
    spec.output_path = Some(dir.join("solve.csv"));
    let outcome = run(&spec)?;
    println!(
        "wrote {} (exit code {})",
        dir.join("solve.csv").display(),
        outcome.status.exit_code()
    );
    print!("{}", outcome.output);
    Ok(())
}
