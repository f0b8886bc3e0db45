//! Fixtures shared by the benchmarks.

use gaslab_core::calibration::calibrated_sizes;
use gaslab_core::{AppParams, AppVersion, GasSchedule, Pattern, ScenarioConfig, World};

/// The default grid with `iterations` calls per test case.
pub fn grid(iterations: usize) -> ScenarioConfig {
    ScenarioConfig { iterations, ..ScenarioConfig::default() }
}

/// A freshly deployed world at `version` with the calibrated sizes.
pub fn world(pattern: Pattern, version: AppVersion) -> World {
    World::deployed(pattern, version, GasSchedule::default(), AppParams::default(), calibrated_sizes())
        .expect("calibrated sizes deploy")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(grid(3).iterations, 3);
        assert_eq!(world(Pattern::Diamond, AppVersion::V3).version(), Some(AppVersion::V3));
    }
}
