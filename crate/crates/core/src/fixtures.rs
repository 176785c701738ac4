//! Bundled scenario documents.

use crate::model::SystemSpec;
use crate::scenario::load_system_spec;

/// Six-zone, two-converter plant (MG + AG) with the 36-load table.
pub const SIX_ZONE_TOML: &str = include_str!("../fixtures/six_zone.toml");

/// Reduced two-zone plant small enough for exhaustive enumeration.
pub const TWO_ZONE_TOML: &str = include_str!("../fixtures/two_zone.toml");

pub fn six_zone() -> SystemSpec {
    load_system_spec(SIX_ZONE_TOML).expect("bundled six-zone fixture is valid")
}

pub fn two_zone() -> SystemSpec {
    load_system_spec(TWO_ZONE_TOML).expect("bundled two-zone fixture is valid")
}
