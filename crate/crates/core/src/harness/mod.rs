//! Scenario configuration, simulation runs, records and comparisons.

pub mod compare;
pub mod config;
pub mod record;
pub mod run;

pub use compare::{compare_variants, Comparison, Metric, VariantFigures};
pub use config::{validate_config, ConfigError, ConfigFile, Mode, Scenario, Variant};
pub use record::{compute_metrics, read_metric_rows, Metrics, RunRecord, RunStatus};
pub use run::{run, RunOutput};

/// Bundled scenario files, by file name.
pub const BUNDLED: [(&str, &str); 6] = [
    ("hover.cfg", include_str!("../../scenarios/hover.cfg")),
    (
        "position_hold.cfg",
        include_str!("../../scenarios/position_hold.cfg"),
    ),
    (
        "position_far.cfg",
        include_str!("../../scenarios/position_far.cfg"),
    ),
    (
        "ballistic.cfg",
        include_str!("../../scenarios/ballistic.cfg"),
    ),
    ("yaw_damp.cfg", include_str!("../../scenarios/yaw_damp.cfg")),
    ("robobee.cfg", include_str!("../../scenarios/robobee.cfg")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
