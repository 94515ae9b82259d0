//! Shipped configurations, one per paper figure panel.

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../presets/", $name, ".toml")))),*]
    };
}

/// `(name, TOML text)` pairs.
pub const PRESETS: &[(&str, &str)] = presets![
    "appc-bath",
    "fig3-marcus",
    "fig4-theta0-dg-0.01",
    "fig4-theta0-dg-0.029",
    "fig4-theta0-dg0",
    "fig4-theta30-dg-0.01",
    "fig4-theta30-dg-0.029",
    "fig4-theta30-dg0",
    "fig4-theta45-dg-0.01",
    "fig4-theta45-dg-0.029",
    "fig4-theta45-dg0",
    "fig6-phi0-eta0",
    "fig6-phi0-eta90",
    "fig6-phi90-eta0",
    "fig6-phi90-eta90",
    "fig7-temperature",
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
