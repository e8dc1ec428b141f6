//! Brute-force reference implementations for verification.
//!
//! Nothing here is tuned for speed. The rate oracle shares no code with
//! [`crate::model::forward_rates`]; the optimality oracles only touch the
//! model through [`utility_rate_space`].

use crate::error::{GameError, Result};
use crate::model::{utility_rate_space, GameConfig, PowerVector, RateVector};

/// Rate of sensor `i`, transcribed term by term with scalar arithmetic.
pub fn scalar_rate(i: usize, p: &PowerVector, cfg: &GameConfig) -> f64 {
    let me = &cfg.sensors[i];
    let own_transmit = if p[i] > me.circuit_power {
        p[i] - me.circuit_power
    } else {
        0.0
    };
    let signal = me.channel_gain * own_transmit / me.ap_distance.powf(me.path_loss_exp);

    let mut interference = 0.0;
    for j in 0..cfg.sensors.len() {
        if j == i {
            continue;
        }
        let other = &cfg.sensors[j];
        let transmit = if p[j] > other.circuit_power {
            p[j] - other.circuit_power
        } else {
            0.0
        };
        interference += other.channel_gain * transmit / other.ap_distance.powf(other.path_loss_exp);
    }

    let sinr = signal / (interference + cfg.noise_variance);
    me.bandwidth * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Feasible own-rate interval for sensor `i`, probing only whether the
/// utility can be evaluated.
fn probe_interval(i: usize, r: &RateVector, cfg: &GameConfig, min_rate: f64) -> Result<(f64, f64)> {
    let ok = |x: f64| utility_rate_space(i, &r.with(i, x), cfg).is_ok();
    if !ok(min_rate) {
        return Err(GameError::EmptyFeasibleInterval {
            sensor: i,
            lower: min_rate,
            upper: f64::NEG_INFINITY,
        });
    }
    let mut hi = min_rate + 1.0;
    while ok(hi) {
        hi = 2.0 * hi + 1.0;
        if hi > 1e12 {
            return Err(GameError::invalid(
                format!("sensors[{i}]"),
                "feasible rate is unbounded",
            ));
        }
    }
    let mut lo = min_rate;
    while hi - lo > f64::EPSILON * hi.max(1.0) {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((min_rate, lo))
}

/// Exhaustive grid search over `grid_points` evenly spaced rates spanning
/// the feasible interval; returns `(rate, utility)` with ties to the left.
fn grid_maximum(i: usize, r: &RateVector, cfg: &GameConfig, grid_points: usize, min_rate: f64) -> Result<(f64, f64)> {
    if grid_points < 2 {
        return Err(GameError::invalid("grid_points", "must be >= 2"));
    }
    let (lo, hi) = probe_interval(i, r, cfg, min_rate)?;
    let mut best = (lo, f64::NEG_INFINITY);
    let mut trial = r.clone();
    for k in 0..grid_points {
        let x = if k + 1 == grid_points {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (grid_points - 1) as f64
        };
        trial.as_mut_slice()[i] = x;
        let u = utility_rate_space(i, &trial, cfg)?;
        if u > best.1 {
            best = (x, u);
        }
    }
    Ok(best)
}

/// Best response of sensor `i` restricted to a uniform grid.
pub fn grid_best_response(
    i: usize,
    r: &RateVector,
    cfg: &GameConfig,
    grid_points: usize,
    min_rate: f64,
) -> Result<f64> {
    grid_maximum(i, r, cfg, grid_points, min_rate).map(|(x, _)| x)
}

/// Grid spacing used by [`grid_best_response`] for the same inputs.
pub fn grid_cell(i: usize, r: &RateVector, cfg: &GameConfig, grid_points: usize, min_rate: f64) -> Result<f64> {
    let (lo, hi) = probe_interval(i, r, cfg, min_rate)?;
    Ok((hi - lo) / (grid_points - 1) as f64)
}

/// Largest utility gain any single sensor finds on a uniform deviation grid.
/// A value at or below epsilon certifies an epsilon-equilibrium at grid resolution.
pub fn grid_certify_ne(r_star: &RateVector, cfg: &GameConfig, grid_points: usize, min_rate: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..cfg.num_sensors() {
        let current = utility_rate_space(i, r_star, cfg)?;
        let (_, best) = grid_maximum(i, r_star, cfg, grid_points, min_rate.min(r_star[i]))?;
        worst = worst.max(best - current);
    }
    Ok(worst)
}

/// Central difference of `u_i` in the own rate.
pub fn fd_gradient(i: usize, r: &RateVector, cfg: &GameConfig, h: f64) -> Result<f64> {
    let up = utility_rate_space(i, &r.with(i, r[i] + h), cfg)?;
    let down = utility_rate_space(i, &r.with(i, r[i] - h), cfg)?;
    Ok((up - down) / (2.0 * h))
}

/// Second central difference of `u_i` in the own rate.
pub fn fd_second_derivative(i: usize, r: &RateVector, cfg: &GameConfig, h: f64) -> Result<f64> {
    let up = utility_rate_space(i, &r.with(i, r[i] + h), cfg)?;
    let mid = utility_rate_space(i, r, cfg)?;
    let down = utility_rate_space(i, &r.with(i, r[i] - h), cfg)?;
    Ok((up - 2.0 * mid + down) / (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    #[test]
    fn scalar_rate_worked_example() {
        let cfg = fixtures::single();
        assert!((scalar_rate(0, &PowerVector::new(vec![2.0]), &cfg) - 2.0).abs() < 1e-15);
        assert_eq!(scalar_rate(0, &PowerVector::new(vec![1.0]), &cfg), 0.0);
    }

    #[test]
    fn zero_price_grid_response_is_min_rate() {
        let mut cfg = fixtures::single();
        cfg.sensors[0].unit_rate_price = 0.0;
        let r = RateVector::new(vec![1.0]);
        assert_eq!(grid_best_response(0, &r, &cfg, 1000, 0.1).unwrap(), 0.1);
    }

    #[test]
    fn finer_grids_never_lose_utility() {
        let cfg = fixtures::single();
        let r = RateVector::new(vec![1.0]);
        let mut last = f64::NEG_INFINITY;
        // each grid contains the previous one: sizes 2^k + 1
        for k in 1..12 {
            let (_, u) = grid_maximum(0, &r, &cfg, (1 << k) + 1, 0.1).unwrap();
            assert!(u >= last);
            last = u;
        }
    }

    #[test]
    fn grid_points_must_be_at_least_two() {
        let cfg = fixtures::single();
        assert!(grid_best_response(0, &RateVector::new(vec![1.0]), &cfg, 1, 0.1).is_err());
    }
}
