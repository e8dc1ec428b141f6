//! Game primitives: the interference-limited rate map and its closed-form
//! inverse, the blockchain power and fee-sharing model, and sensor utilities
//! in both power and rate coordinates.
//!
//! Sensor `i` transmits with power `p_i - c_i` (received power minus circuit
//! power). With `beta_i = g_i (p_i - c_i) / d_i^alpha_i` its rate is
//!
//! ```text
//! r_i = b_i log2(1 + beta_i / (sum_{j != i} beta_j + sigma^2))
//! ```
//!
//! The inverse uses `q_i = 1 - 2^(-r_i / b_i)` (the SINR fraction
//! `gamma_i / (1 + gamma_i)`). Writing `T = sum q_j`, every feasible profile
//! satisfies `beta_i = q_i (S + sigma^2)` with `S = sigma^2 T / (1 - T)`,
//! which pins the powers down uniquely whenever `T < 1`.

use std::f64::consts::LN_2;
use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

/// Received-power cap applied when a config leaves `max_received_power` out.
pub const DEFAULT_MAX_RECEIVED_POWER: f64 = 10.0;

/// Rate vectors whose load reaches `1 - FEASIBILITY_MARGIN` are rejected.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    pub bandwidth: f64,
    pub channel_gain: f64,
    pub ap_distance: f64,
    pub path_loss_exp: f64,
    pub circuit_power: f64,
    pub unit_rate_price: f64,
    pub beacon_distance: f64,
    pub max_received_power: f64,
}

impl SensorParams {
    /// Path loss over channel gain, `d^alpha / g`: received power per unit of `beta`.
    pub fn attenuation(&self) -> f64 {
        self.ap_distance.powf(self.path_loss_exp) / self.channel_gain
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let field = |name: &str| format!("sensors[{index}].{name}");
        let checks = [
            ("bandwidth", self.bandwidth, true),
            ("channel_gain", self.channel_gain, true),
            ("ap_distance", self.ap_distance, true),
            ("path_loss_exp", self.path_loss_exp, true),
            ("circuit_power", self.circuit_power, false),
            ("unit_rate_price", self.unit_rate_price, false),
            ("beacon_distance", self.beacon_distance, true),
            ("max_received_power", self.max_received_power, true),
        ];
        for (name, value, strictly_positive) in checks {
            check_value(&field(name), value, strictly_positive)?;
        }
        if self.max_received_power < self.circuit_power {
            return Err(GameError::invalid(
                field("max_received_power"),
                format!(
                    "cap {} is below circuit power {}",
                    self.max_received_power, self.circuit_power
                ),
            ));
        }
        Ok(())
    }
}

fn check_value(field: &str, value: f64, strictly_positive: bool) -> Result<()> {
    if !value.is_finite() {
        return Err(GameError::invalid(field, format!("{value} is not finite")));
    }
    if strictly_positive && value <= 0.0 {
        return Err(GameError::invalid(field, format!("{value} must be > 0")));
    }
    if value < 0.0 {
        return Err(GameError::invalid(field, format!("{value} must be >= 0")));
    }
    Ok(())
}

/// Coefficients of the blockchain power model `a (m R)^2 + b (m R) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockchainParams {
    pub quad_coeff: f64,
    pub lin_coeff: f64,
    pub const_coeff: f64,
    pub compute_coeff: f64,
}

impl BlockchainParams {
    pub fn validate(&self) -> Result<()> {
        check_value("blockchain.quad_coeff", self.quad_coeff, false)?;
        check_value("blockchain.lin_coeff", self.lin_coeff, false)?;
        check_value("blockchain.const_coeff", self.const_coeff, false)?;
        check_value("blockchain.compute_coeff", self.compute_coeff, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub sensors: Vec<SensorParams>,
    pub noise_variance: f64,
    pub power_price: f64,
    pub wpt_path_loss_exp: f64,
    pub blockchain: BlockchainParams,
}

impl GameConfig {
    /// Builds a config and checks every field invariant.
    pub fn new(
        sensors: Vec<SensorParams>,
        noise_variance: f64,
        power_price: f64,
        wpt_path_loss_exp: f64,
        blockchain: BlockchainParams,
    ) -> Result<Self> {
        let cfg = GameConfig {
            sensors,
            noise_variance,
            power_price,
            wpt_path_loss_exp,
            blockchain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(GameError::invalid("sensors", "at least one sensor is required"));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            s.validate(i)?;
        }
        check_value("noise_variance", self.noise_variance, true)?;
        check_value("power_price", self.power_price, false)?;
        // The beacon path-loss exponent may be zero (distance-free transfer).
        check_value("wpt_path_loss_exp", self.wpt_path_loss_exp, false)?;
        self.blockchain.validate()
    }

    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn sensor(&self, i: usize) -> Result<&SensorParams> {
        self.sensors.get(i).ok_or(GameError::SensorOutOfRange {
            index: i,
            sensors: self.sensors.len(),
        })
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.sensors.len() {
            return Err(GameError::DimensionMismatch {
                expected: self.sensors.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

macro_rules! strategy_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                $name(values)
            }

            pub fn filled(len: usize, value: f64) -> Self {
                $name(vec![value; len])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            /// Copy of `self` with entry `i` replaced.
            pub fn with(&self, i: usize, value: f64) -> Self {
                let mut out = self.clone();
                out.0[i] = value;
                out
            }

            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(&other.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                $name(values)
            }
        }
    };
}

strategy_vector!(
    /// Received power per sensor.
    PowerVector
);
strategy_vector!(
    /// Transmission rate per sensor.
    RateVector
);

impl PowerVector {
    /// Checks length and the `0 <= p_i <= p^u_i` box.
    pub fn checked(values: Vec<f64>, cfg: &GameConfig) -> Result<Self> {
        cfg.check_len(values.len())?;
        for (i, (&p, s)) in values.iter().zip(&cfg.sensors).enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(GameError::invalid(
                    format!("p[{i}]"),
                    format!("{p} must be finite and >= 0"),
                ));
            }
            if p > s.max_received_power {
                return Err(GameError::PowerBoundExceeded {
                    sensor: i,
                    required: p,
                    cap: s.max_received_power,
                });
            }
        }
        Ok(PowerVector(values))
    }
}

impl RateVector {
    pub fn checked(values: Vec<f64>, cfg: &GameConfig) -> Result<Self> {
        cfg.check_len(values.len())?;
        check_rates(&values)?;
        Ok(RateVector(values))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

fn check_rates(values: &[f64]) -> Result<()> {
    for (i, &r) in values.iter().enumerate() {
        if !r.is_finite() || r < 0.0 {
            return Err(GameError::invalid(
                format!("r[{i}]"),
                format!("{r} must be finite and >= 0"),
            ));
        }
    }
    Ok(())
}

/// Intermediate quantities of the closed-form rate inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct RateInversion {
    /// Target SINR per sensor, `2^(r_i/b_i) - 1`.
    pub gamma: Vec<f64>,
    /// Effective received signal `g_i (p_i - c_i) / d_i^alpha_i`.
    pub beta: Vec<f64>,
    pub beta_sum: f64,
    /// `sum gamma_j / (1 + gamma_j)`; must stay below one.
    pub load: f64,
}

/// Equilibrium profile together with the per-sensor economics at that point.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub rates: RateVector,
    pub powers: PowerVector,
    pub utilities: Vec<f64>,
    pub fees: Vec<f64>,
    pub fee_shares: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    /// `‖r^k - r^{k-1}‖∞` after each iteration.
    pub trace: Vec<f64>,
}

impl EquilibriumResult {
    /// Fills the per-sensor economics for a (solved) profile.
    pub fn evaluate(
        rates: RateVector,
        cfg: &GameConfig,
        iterations: usize,
        converged: bool,
        residual: f64,
        trace: Vec<f64>,
    ) -> Result<Self> {
        let (powers, _) = invert_rates(&rates, cfg)?;
        let fees = transaction_fees(&rates, cfg)?;
        let total = rates.total();
        let fee_shares = rates
            .iter()
            .map(|&r| if total > 0.0 { r / total } else { 0.0 })
            .collect();
        let utilities = (0..cfg.num_sensors())
            .map(|i| Ok(cfg.sensors[i].unit_rate_price * rates[i] - wpt_cost(i, powers[i], cfg)? - fees[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(EquilibriumResult {
            rates,
            powers,
            utilities,
            fees,
            fee_shares,
            iterations,
            converged,
            residual,
            trace,
        })
    }
}

/// Rates achieved by a received-power vector.
///
/// Sensors at or below their circuit power transmit nothing and get rate zero.
pub fn forward_rates(p: &PowerVector, cfg: &GameConfig) -> Result<RateVector> {
    cfg.check_len(p.len())?;
    let beta: Vec<f64> = p
        .iter()
        .zip(&cfg.sensors)
        .map(|(&p, s)| (p - s.circuit_power).max(0.0) / s.attenuation())
        .collect();

    // Interference excludes the own term; prefix/suffix sums avoid the
    // cancellation of `total - beta_i` when one sensor dominates.
    let n = beta.len();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + beta[i];
    }
    let mut prefix = 0.0;
    let mut rates = Vec::with_capacity(n);
    for (i, s) in cfg.sensors.iter().enumerate() {
        let interference = prefix + suffix[i + 1] + cfg.noise_variance;
        rates.push(s.bandwidth * (beta[i] / interference).ln_1p() / LN_2);
        prefix += beta[i];
    }
    Ok(RateVector(rates))
}

/// Closed-form inverse of [`forward_rates`].
///
/// Fails with [`GameError::InfeasibleRates`] when the load reaches
/// `1 - FEASIBILITY_MARGIN` and with [`GameError::PowerBoundExceeded`] when
/// a sensor would need more than its received-power cap.
pub fn invert_rates(r: &RateVector, cfg: &GameConfig) -> Result<(PowerVector, RateInversion)> {
    cfg.check_len(r.len())?;
    check_rates(r)?;

    let fractions: Vec<f64> = r
        .iter()
        .zip(&cfg.sensors)
        .map(|(&r, s)| sinr_fraction(r, s.bandwidth))
        .collect();
    let load: f64 = fractions.iter().sum();
    let limit = 1.0 - FEASIBILITY_MARGIN;
    if load >= limit {
        return Err(GameError::InfeasibleRates { load, limit });
    }

    let sigma2 = cfg.noise_variance;
    let beta_sum = sigma2 * load / (1.0 - load);
    let scale = beta_sum + sigma2;
    let beta: Vec<f64> = fractions.iter().map(|q| q * scale).collect();

    let mut powers = Vec::with_capacity(r.len());
    for (i, (s, b)) in cfg.sensors.iter().zip(&beta).enumerate() {
        let p = s.circuit_power + b * s.attenuation();
        if p > s.max_received_power {
            return Err(GameError::PowerBoundExceeded {
                sensor: i,
                required: p,
                cap: s.max_received_power,
            });
        }
        powers.push(p);
    }

    let gamma = r
        .iter()
        .zip(&cfg.sensors)
        .map(|(&r, s)| (r * LN_2 / s.bandwidth).exp_m1())
        .collect();
    Ok((
        PowerVector(powers),
        RateInversion {
            gamma,
            beta,
            beta_sum,
            load,
        },
    ))
}

/// `gamma / (1 + gamma) = 1 - 2^(-r/b)`, computed without cancellation.
fn sinr_fraction(rate: f64, bandwidth: f64) -> f64 {
    -(-rate * LN_2 / bandwidth).exp_m1()
}

/// Power drawn by the blockchain to process an aggregate rate.
pub fn blockchain_power(total_rate: f64, bc: &BlockchainParams) -> f64 {
    let compute = bc.compute_coeff * total_rate;
    bc.quad_coeff * compute * compute + bc.lin_coeff * compute + bc.const_coeff
}

/// Sensor `i`'s rate-proportional share of the blockchain power.
///
/// With zero aggregate rate nobody pays, so the constant term stays unallocated.
pub fn transaction_fee(i: usize, r: &RateVector, cfg: &GameConfig) -> Result<f64> {
    cfg.sensor(i)?;
    cfg.check_len(r.len())?;
    let total = r.total();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(r[i] / total * blockchain_power(total, &cfg.blockchain))
}

pub fn transaction_fees(r: &RateVector, cfg: &GameConfig) -> Result<Vec<f64>> {
    cfg.check_len(r.len())?;
    let total = r.total();
    if total <= 0.0 {
        return Ok(vec![0.0; r.len()]);
    }
    let power = blockchain_power(total, &cfg.blockchain);
    Ok(r.iter().map(|&ri| ri / total * power).collect())
}

/// Price paid to the beacons for delivering `received_power` to sensor `i`.
pub fn wpt_cost(i: usize, received_power: f64, cfg: &GameConfig) -> Result<f64> {
    let s = cfg.sensor(i)?;
    Ok(cfg.power_price * received_power * s.beacon_distance.powf(cfg.wpt_path_loss_exp))
}

/// Utility of sensor `i` when the sensors choose received powers.
pub fn utility_power_space(i: usize, p: &PowerVector, cfg: &GameConfig) -> Result<f64> {
    let s = cfg.sensor(i)?;
    let rates = forward_rates(p, cfg)?;
    Ok(s.unit_rate_price * rates[i] - wpt_cost(i, p[i], cfg)? - transaction_fee(i, &rates, cfg)?)
}

/// Utility of sensor `i` when the sensors choose rates.
pub fn utility_rate_space(i: usize, r: &RateVector, cfg: &GameConfig) -> Result<f64> {
    let s = cfg.sensor(i)?;
    let (powers, _) = invert_rates(r, cfg)?;
    Ok(s.unit_rate_price * r[i] - wpt_cost(i, powers[i], cfg)? - transaction_fee(i, r, cfg)?)
}

/// Central-difference `du_i/dr_i`.
///
/// If a perturbed point leaves the feasible region the step is shrunk once
/// by 100x before the error is returned.
pub fn utility_gradient(i: usize, r: &RateVector, cfg: &GameConfig) -> Result<f64> {
    cfg.sensor(i)?;
    let h = fd_step(r[i]);
    central_difference(i, r, cfg, h).or_else(|_| central_difference(i, r, cfg, h * 1e-2))
}

fn fd_step(rate: f64) -> f64 {
    1e-6_f64.max(1e-6 * rate)
}

fn central_difference(i: usize, r: &RateVector, cfg: &GameConfig, h: f64) -> Result<f64> {
    if r[i] - h < 0.0 {
        return Err(GameError::invalid(
            format!("r[{i}]"),
            "too close to zero for a central difference",
        ));
    }
    let up = utility_rate_space(i, &r.with(i, r[i] + h), cfg)?;
    let down = utility_rate_space(i, &r.with(i, r[i] - h), cfg)?;
    Ok((up - down) / (2.0 * h))
}

/// Terms of the inverse received power `p_i(r)` and its first two derivatives
/// with respect to `r_i`.
struct PowerCurvature {
    first: f64,
    second: f64,
}

fn inverse_power_derivatives(i: usize, r: &RateVector, cfg: &GameConfig) -> Result<PowerCurvature> {
    let (_, inv) = invert_rates(r, cfg)?;
    let s = &cfg.sensors[i];
    let q = sinr_fraction(r[i], s.bandwidth);
    let k = LN_2 / s.bandwidth;
    let dq = k * (1.0 - q);
    let d2q = -k * dq;
    let slack = 1.0 - inv.load;

    // p_i = c_i + attenuation * sigma^2 * q_i / (1 - T), and dT/dr_i = dq_i.
    let scale = s.attenuation() * cfg.noise_variance;
    let first = dq / slack + q * dq / (slack * slack);
    let second =
        d2q / slack + (2.0 * dq * dq + q * d2q) / (slack * slack) + 2.0 * q * dq * dq / (slack * slack * slack);
    Ok(PowerCurvature {
        first: scale * first,
        second: scale * second,
    })
}

/// Closed-form `du_i/dr_i`; agrees with [`utility_gradient`] on interior points.
pub fn utility_gradient_analytic(i: usize, r: &RateVector, cfg: &GameConfig) -> Result<f64> {
    let s = cfg.sensor(i)?;
    let power = inverse_power_derivatives(i, r, cfg)?;
    let beacon = s.beacon_distance.powf(cfg.wpt_path_loss_exp);
    let bc = &cfg.blockchain;
    let a_m2 = bc.quad_coeff * bc.compute_coeff * bc.compute_coeff;
    let total = r.total();
    let fee_slope = if total > 0.0 {
        a_m2 * total
            + bc.lin_coeff * bc.compute_coeff
            + bc.const_coeff / total
            + r[i] * (a_m2 - bc.const_coeff / (total * total))
    } else {
        // right derivative of a m^2 r^2 + b m r + c at r = 0
        bc.lin_coeff * bc.compute_coeff
    };
    Ok(s.unit_rate_price - cfg.power_price * beacon * power.first - fee_slope)
}

/// `d^2 u_i / dr_i^2`: beacon-cost curvature plus the fee curvature
/// `-2 a m^2 + 2 c sum_{j != i} r_j / (sum_j r_j)^3`.
pub fn utility_second_derivative(i: usize, r: &RateVector, cfg: &GameConfig) -> Result<f64> {
    let s = cfg.sensor(i)?;
    let power = inverse_power_derivatives(i, r, cfg)?;
    let beacon = s.beacon_distance.powf(cfg.wpt_path_loss_exp);
    let bc = &cfg.blockchain;
    let total = r.total();
    let others = total - r[i];
    let fee_curvature = if total > 0.0 {
        -2.0 * bc.quad_coeff * bc.compute_coeff * bc.compute_coeff
            + 2.0 * bc.const_coeff * others / (total * total * total)
    } else {
        -2.0 * bc.quad_coeff * bc.compute_coeff * bc.compute_coeff
    };
    Ok(-cfg.power_price * beacon * power.second + fee_curvature)
}

/// `[du_i/dr_i]_i` for every sensor at once.
pub fn pseudo_gradient(r: &RateVector, cfg: &GameConfig) -> Result<Vec<f64>> {
    (0..r.len()).map(|i| utility_gradient_analytic(i, r, cfg)).collect()
}

/// Jacobian of [`pseudo_gradient`]: row `i` holds `d^2 u_i / (dr_i dr_j)`.
pub fn pseudo_gradient_jacobian(r: &RateVector, cfg: &GameConfig) -> Result<Vec<Vec<f64>>> {
    let (_, inv) = invert_rates(r, cfg)?;
    let n = r.len();
    let slack = 1.0 - inv.load;
    let slopes: Vec<f64> = r
        .iter()
        .zip(&cfg.sensors)
        .map(|(&ri, s)| LN_2 / s.bandwidth * (1.0 - sinr_fraction(ri, s.bandwidth)))
        .collect();
    let bc = &cfg.blockchain;
    let a_m2 = bc.quad_coeff * bc.compute_coeff * bc.compute_coeff;
    let total = r.total();

    let mut jac = vec![vec![0.0; n]; n];
    for (i, row) in jac.iter_mut().enumerate() {
        let s = &cfg.sensors[i];
        let q = sinr_fraction(r[i], s.bandwidth);
        let weight =
            cfg.power_price * s.beacon_distance.powf(cfg.wpt_path_loss_exp) * s.attenuation() * cfg.noise_variance;
        // d/dr_j of q_i'/D + q_i q_i'/D^2, with dD/dr_j = -q_j'
        let cross_power = slopes[i] * (1.0 / (slack * slack) + 2.0 * q / (slack * slack * slack));
        let cross_fee = if total > 0.0 {
            a_m2 - bc.const_coeff / (total * total) + 2.0 * bc.const_coeff * r[i] / (total * total * total)
        } else {
            a_m2
        };
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = if i == j {
                utility_second_derivative(i, r, cfg)?
            } else {
                -weight * cross_power * slopes[j] - cross_fee
            };
        }
    }
    Ok(jac)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn sensor(
        bandwidth: f64,
        channel_gain: f64,
        ap_distance: f64,
        path_loss_exp: f64,
        circuit_power: f64,
    ) -> SensorParams {
        SensorParams {
            bandwidth,
            channel_gain,
            ap_distance,
            path_loss_exp,
            circuit_power,
            unit_rate_price: 20.0,
            beacon_distance: 1.0,
            max_received_power: DEFAULT_MAX_RECEIVED_POWER,
        }
    }

    pub fn sec4_blockchain() -> BlockchainParams {
        BlockchainParams {
            quad_coeff: 0.1,
            lin_coeff: 0.1,
            const_coeff: 0.1,
            compute_coeff: 3.0,
        }
    }

    /// One sensor with b=2, g=1, d=1, alpha=2, c=1 and unit noise.
    pub fn single() -> GameConfig {
        GameConfig::new(vec![sensor(2.0, 1.0, 1.0, 2.0, 1.0)], 1.0, 0.01, 2.0, sec4_blockchain()).unwrap()
    }
}
