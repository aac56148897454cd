//! Parameter sets shipped with the crate.

use crate::config::ModelConfig;

/// Holybro S500 V2 quadcopter with a 4S1P 5000 mAh pack.
pub const HOLYBRO_S500_V2_TOML: &str = include_str!("../fixtures/holybro_s500_v2.toml");

pub fn holybro() -> ModelConfig {
    ModelConfig::from_toml_str(HOLYBRO_S500_V2_TOML, "holybro_s500_v2.toml").expect("shipped fixture is valid")
}
