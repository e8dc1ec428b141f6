//! Game-config documents.
//!
//! A config is a TOML document whose keys are the field names of
//! [`GameConfig`], [`BlockchainParams`] and [`SensorParams`]. Per-sensor
//! fields are arrays indexed by sensor id:
//!
//! ```toml
//! noise_variance = 1.0
//! power_price = 0.01
//! wpt_path_loss_exp = 2.0
//!
//! [blockchain]
//! quad_coeff = 0.1
//! lin_coeff = 0.1
//! const_coeff = 0.1
//! compute_coeff = 3.0
//!
//! [sensors]
//! bandwidth = [2.0, 2.0]
//! channel_gain = [1.95, 2.0]
//! # ... one array per SensorParams field;
//! # max_received_power may be omitted
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::model::{BlockchainParams, GameConfig, SensorParams, DEFAULT_MAX_RECEIVED_POWER};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    noise_variance: f64,
    power_price: f64,
    wpt_path_loss_exp: f64,
    blockchain: BlockchainParams,
    sensors: SensorTable,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorTable {
    bandwidth: Vec<f64>,
    channel_gain: Vec<f64>,
    ap_distance: Vec<f64>,
    path_loss_exp: Vec<f64>,
    circuit_power: Vec<f64>,
    unit_rate_price: Vec<f64>,
    beacon_distance: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_received_power: Option<Vec<f64>>,
}

impl SensorTable {
    fn into_sensors(self) -> Result<Vec<SensorParams>> {
        let n = self.bandwidth.len();
        let columns: [(&str, usize); 7] = [
            ("channel_gain", self.channel_gain.len()),
            ("ap_distance", self.ap_distance.len()),
            ("path_loss_exp", self.path_loss_exp.len()),
            ("circuit_power", self.circuit_power.len()),
            ("unit_rate_price", self.unit_rate_price.len()),
            ("beacon_distance", self.beacon_distance.len()),
            (
                "max_received_power",
                self.max_received_power.as_ref().map_or(n, Vec::len),
            ),
        ];
        for (name, len) in columns {
            if len != n {
                return Err(GameError::invalid(
                    format!("sensors.{name}"),
                    format!("has {len} entries but sensors.bandwidth has {n}"),
                ));
            }
        }
        let caps = self
            .max_received_power
            .unwrap_or_else(|| vec![DEFAULT_MAX_RECEIVED_POWER; n]);
        Ok((0..n)
            .map(|i| SensorParams {
                bandwidth: self.bandwidth[i],
                channel_gain: self.channel_gain[i],
                ap_distance: self.ap_distance[i],
                path_loss_exp: self.path_loss_exp[i],
                circuit_power: self.circuit_power[i],
                unit_rate_price: self.unit_rate_price[i],
                beacon_distance: self.beacon_distance[i],
                max_received_power: caps[i],
            })
            .collect())
    }

    fn from_sensors(sensors: &[SensorParams]) -> Self {
        let column = |f: fn(&SensorParams) -> f64| sensors.iter().map(f).collect();
        SensorTable {
            bandwidth: column(|s| s.bandwidth),
            channel_gain: column(|s| s.channel_gain),
            ap_distance: column(|s| s.ap_distance),
            path_loss_exp: column(|s| s.path_loss_exp),
            circuit_power: column(|s| s.circuit_power),
            unit_rate_price: column(|s| s.unit_rate_price),
            beacon_distance: column(|s| s.beacon_distance),
            max_received_power: Some(column(|s| s.max_received_power)),
        }
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<GameConfig> {
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| GameError::Config(e.to_string()))?;
    GameConfig::new(
        doc.sensors.into_sensors()?,
        doc.noise_variance,
        doc.power_price,
        doc.wpt_path_loss_exp,
        doc.blockchain,
    )
}

pub fn load_config(path: impl AsRef<Path>) -> Result<GameConfig> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| GameError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        GameError::Config(msg) => GameError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Serializes a config; [`parse_config`] reads the output back to an equal value.
pub fn to_document(cfg: &GameConfig) -> String {
    let doc = ConfigDocument {
        noise_variance: cfg.noise_variance,
        power_price: cfg.power_price,
        wpt_path_loss_exp: cfg.wpt_path_loss_exp,
        blockchain: cfg.blockchain,
        sensors: SensorTable::from_sensors(&cfg.sensors),
    };
    toml::to_string(&doc).expect("config document is always representable")
}

/// The ten-sensor reference scenario, identical to `configs/paper_sec4.cfg`.
pub fn reference_scenario() -> GameConfig {
    let pattern = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0];
    let ap_distance = [0.25, 0.2, 0.15, 0.25, 0.2, 0.15, 0.25, 0.2, 0.15, 0.25];
    let path_loss_exp = [3.5, 3.0, 2.5, 3.5, 3.0, 2.5, 3.5, 3.0, 2.5, 3.5];
    let channel_gain = [1.95, 2.0, 2.18, 1.95, 2.0, 2.18, 1.95, 2.0, 2.18, 1.95];
    let sensors = (0..10)
        .map(|i| SensorParams {
            bandwidth: 2.0,
            channel_gain: channel_gain[i],
            ap_distance: ap_distance[i],
            path_loss_exp: path_loss_exp[i],
            circuit_power: pattern[i],
            unit_rate_price: 20.0,
            beacon_distance: 1.0 + pattern[i] * 1e-3,
            max_received_power: DEFAULT_MAX_RECEIVED_POWER,
        })
        .collect();
    GameConfig::new(
        sensors,
        1.0,
        0.01,
        2.0,
        BlockchainParams {
            quad_coeff: 0.1,
            lin_coeff: 0.1,
            const_coeff: 0.1,
            compute_coeff: 3.0,
        },
    )
    .expect("reference scenario is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
noise_variance = 1.0
power_price = 0.01
wpt_path_loss_exp = 2.0

[blockchain]
quad_coeff = 0.1
lin_coeff = 0.1
const_coeff = 0.1
compute_coeff = 3.0

[sensors]
bandwidth = [2.0, 2.0]
channel_gain = [1.0, 2.0]
ap_distance = [1.0, 0.5]
path_loss_exp = [2.0, 3.0]
circuit_power = [1.0, 2.0]
unit_rate_price = [20.0, 20.0]
beacon_distance = [1.0, 1.002]
"#;

    #[test]
    fn parses_and_defaults_power_cap() {
        let cfg = parse_config(SMALL).unwrap();
        assert_eq!(cfg.num_sensors(), 2);
        assert_eq!(cfg.sensors[1].channel_gain, 2.0);
        assert!(cfg
            .sensors
            .iter()
            .all(|s| s.max_received_power == DEFAULT_MAX_RECEIVED_POWER));
    }

    #[test]
    fn missing_field_is_named() {
        let text = SMALL.replace("noise_variance = 1.0\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("noise_variance"), "{err}");
    }

    #[test]
    fn negative_gain_is_rejected() {
        let text = SMALL.replace("channel_gain = [1.0, 2.0]", "channel_gain = [-1.0, 2.0]");
        match parse_config(&text).unwrap_err() {
            GameError::InvalidParameter { field, .. } => assert_eq!(field, "sensors[0].channel_gain"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ragged_columns_are_rejected() {
        let text = SMALL.replace("ap_distance = [1.0, 0.5]", "ap_distance = [1.0]");
        match parse_config(&text).unwrap_err() {
            GameError::InvalidParameter { field, .. } => assert_eq!(field, "sensors.ap_distance"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_report_position() {
        let text = SMALL.replace("power_price = 0.01", "power_price = = 0.01");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{SMALL}\nextra = [1.0]\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn document_round_trip() {
        let cfg = reference_scenario();
        let again = parse_config(&to_document(&cfg)).unwrap();
        assert_eq!(cfg, again);
    }
}
