#![allow(dead_code)]

use crowdgame::model::invert_rates;
use crowdgame::{GameConfig, PowerVector, RateVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Feasible rate profile drawn through the SINR-fraction space so that
/// loads close to saturation are represented, not just the easy interior.
/// `max_load` bounds the total fraction.
pub fn random_feasible(rng: &mut StdRng, cfg: &GameConfig, max_load: f64) -> RateVector {
    let n = cfg.num_sensors();
    loop {
        let load = rng.random_range(0.0..max_load);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let rates: Vec<f64> = weights
            .iter()
            .zip(&cfg.sensors)
            .map(|(w, s)| -s.bandwidth * (-load * w / total).ln_1p() / std::f64::consts::LN_2)
            .collect();
        let r = RateVector::new(rates);
        if invert_rates(&r, cfg).is_ok() {
            return r;
        }
    }
}

/// Power vector anywhere in `[0, cap]`, including below the circuit draw.
pub fn random_powers(rng: &mut StdRng, cfg: &GameConfig) -> PowerVector {
    PowerVector::new(
        cfg.sensors
            .iter()
            .map(|s| rng.random_range(0.0..s.max_received_power))
            .collect(),
    )
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// True when successive differences rise and then fall, never rising again.
pub fn single_peak(values: &[f64]) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d < 0.0 {
            falling = true;
        } else if d > 0.0 && falling {
            return false;
        }
    }
    true
}
