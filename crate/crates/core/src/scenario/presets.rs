//! Bundled scenario files.

use crate::error::{Error, Result};

use super::config::ScenarioConfig;

pub const PRESETS: [(&str, &str); 4] = [
    ("table1_energy_aware", include_str!("../../presets/table1_energy_aware.toml")),
    ("table1_impedance", include_str!("../../presets/table1_impedance.toml")),
    ("table1_hybrid", include_str!("../../presets/table1_hybrid.toml")),
    ("compare_all", include_str!("../../presets/compare_all.toml")),
];

/// TOML text of a bundled preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
        Error::Scenario(format!("no preset `{name}` (available: {})", names.join(", ")))
    })
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    ScenarioConfig::from_toml_str(preset_text(name)?)
}
