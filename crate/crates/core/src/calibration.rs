//! Fitting bytecode sizes to measured cumulative deployment totals.
//!
//! Each pattern's sizes are scaled together from a reference table by an
//! integer factor `t` (parts per million of the reference size). Deployment
//! gas is strictly increasing in every size, so the smallest `t` whose
//! simulated total reaches the target is found by bisection; that `t` is
//! unique for a given total, which makes calibration idempotent.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::app::AppVersion;
use crate::dispatch::{self, CodeSizeTable, Pattern};
use crate::error::{CalibrationError, PlanError};
use crate::gas::{Gas, GasSchedule};

const PPM: u64 = 1_000_000;
const MAX_SCALE: u64 = 1 << 40;

/// Relative tolerance a calibrated total must meet.
pub const TOLERANCE: f64 = 1e-3;

/// Cumulative (V1 through V3) deployment gas to reproduce, per pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CalibrationTargets(pub BTreeMap<Pattern, Gas>);

impl CalibrationTargets {
    /// Totals measured for the notarization app.
    pub fn measured() -> Self {
        CalibrationTargets(BTreeMap::from([
            (Pattern::Classic, 1_614_545),
            (Pattern::Proxy, 4_343_104),
            (Pattern::Diamond, 4_123_977),
        ]))
    }
}

/// Deployment gas of each version's plan, in version order.
pub fn deployment_gas_by_version(
    pattern: Pattern,
    sizes: &CodeSizeTable,
    schedule: &GasSchedule,
) -> Result<Vec<(AppVersion, Gas)>, PlanError> {
    AppVersion::ALL
        .into_iter()
        .map(|v| {
            let plan = dispatch::plan_for(pattern, v, sizes)?;
            Ok((v, dispatch::deploy_gas(&plan, schedule)?))
        })
        .collect()
}

pub fn cumulative_deployment_gas(
    pattern: Pattern,
    sizes: &CodeSizeTable,
    schedule: &GasSchedule,
) -> Result<Gas, PlanError> {
    Ok(deployment_gas_by_version(pattern, sizes, schedule)?.iter().map(|(_, g)| g).sum())
}

/// `base` with `pattern`'s sizes multiplied by `scale / 1e6`, rounded down.
pub fn scale_sizes(base: &CodeSizeTable, pattern: Pattern, scale: u64) -> CodeSizeTable {
    let mut out = base.clone();
    for entry in out.entries.iter_mut().filter(|e| e.pattern == pattern) {
        entry.deployed_size = (entry.deployed_size as u128 * scale as u128 / PPM as u128) as u64;
        entry.initcode_size = (entry.initcode_size as u128 * scale as u128 / PPM as u128) as u64;
    }
    out
}

/// Scales every targeted pattern of `base` so its cumulative deployment gas
/// matches the target within [`TOLERANCE`].
pub fn calibrate(
    targets: &CalibrationTargets,
    base: &CodeSizeTable,
    schedule: &GasSchedule,
) -> Result<CodeSizeTable, CalibrationError> {
    let mut table = base.clone();
    for (&pattern, &target) in &targets.0 {
        if target == 0 {
            return Err(CalibrationError::NonPositive(pattern));
        }
        let total_at = |scale: u64| cumulative_deployment_gas(pattern, &scale_sizes(base, pattern, scale), schedule);

        let floor = total_at(0)?;
        if target < floor {
            return Err(CalibrationError::Infeasible { pattern, target, floor });
        }
        let mut hi = PPM;
        while total_at(hi)? < target {
            hi *= 2;
            if hi > MAX_SCALE {
                return Err(CalibrationError::Unreachable { pattern, target });
            }
        }
        // smallest scale reaching the target
        let mut lo = 0u64;
        if floor < target {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if total_at(mid)? >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        } else {
            hi = 0;
        }
        let reached = total_at(hi)?;
        if (reached as f64 - target as f64).abs() > target as f64 * TOLERANCE {
            return Err(CalibrationError::Unreachable { pattern, target });
        }
        let scaled = scale_sizes(base, pattern, hi);
        for entry in table.entries.iter_mut().filter(|e| e.pattern == pattern) {
            *entry = scaled
                .get(entry.pattern, entry.version, entry.contract)
                .cloned()
                .expect("scaled table has the same entries");
        }
    }
    Ok(table)
}

/// Reference sizes calibrated to [`CalibrationTargets::measured`] under the default schedule.
pub fn calibrated_sizes() -> &'static CodeSizeTable {
    static SIZES: OnceLock<CodeSizeTable> = OnceLock::new();
    SIZES.get_or_init(|| {
        calibrate(&CalibrationTargets::measured(), &CodeSizeTable::reference(), &GasSchedule::default())
            .expect("reference sizes calibrate to the measured totals")
    })
}
