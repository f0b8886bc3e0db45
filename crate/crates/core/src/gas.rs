//! Gas rule table and per-transaction metering.
//!
//! Access pricing follows the warm/cold model (first touch of a slot or an
//! account in a transaction is cold), and `SSTORE` uses net metering over the
//! `(original, current, new)` triple with clearing refunds. Refunds are only
//! applied when a transaction is finalized, capped at `used / refund_cap_divisor`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::word::{ContractId, SlotKey, Word};

pub type Gas = u64;

/// Every gas constant the model prices with. Defaults are the London schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasSchedule {
    pub tx_intrinsic: Gas,
    pub tx_create: Gas,
    pub calldata_zero_byte: Gas,
    pub calldata_nonzero_byte: Gas,
    pub cold_sload: Gas,
    pub warm_sload: Gas,
    pub cold_account_access: Gas,
    pub warm_account_access: Gas,
    pub sstore_set: Gas,
    pub sstore_reset: Gas,
    pub sstore_noop: Gas,
    pub refund_clear: Gas,
    pub refund_cap_divisor: u64,
    pub hash_base: Gas,
    pub hash_per_word: Gas,
    pub code_deposit_per_byte: Gas,
    /// Abstract arithmetic/comparison/branch step.
    pub compute_unit: Gas,
    /// Charged on top of the account access for every delegated call.
    pub call_base: Gas,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            tx_intrinsic: 21_000,
            tx_create: 32_000,
            calldata_zero_byte: 4,
            calldata_nonzero_byte: 16,
            cold_sload: 2_100,
            warm_sload: 100,
            cold_account_access: 2_600,
            warm_account_access: 100,
            sstore_set: 20_000,
            sstore_reset: 2_900,
            sstore_noop: 100,
            refund_clear: 4_800,
            refund_cap_divisor: 5,
            hash_base: 30,
            hash_per_word: 6,
            code_deposit_per_byte: 200,
            compute_unit: 12,
            call_base: 100,
        }
    }
}

impl GasSchedule {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.refund_cap_divisor < 1 {
            problems.push("schedule.refund_cap_divisor must be >= 1".to_string());
        }
        if self.cold_sload <= self.warm_sload {
            problems.push("schedule.cold_sload must exceed schedule.warm_sload".to_string());
        }
        if self.cold_account_access <= self.warm_account_access {
            problems.push("schedule.cold_account_access must exceed schedule.warm_account_access".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    /// Applies a partial JSON object on top of this schedule.
    pub fn apply_overrides(&self, overrides: &serde_json::Value) -> Result<Self, ConfigError> {
        let mut merged = serde_json::to_value(self).expect("schedule serializes");
        let (Some(base), Some(patch)) = (merged.as_object_mut(), overrides.as_object()) else {
            return Err(ConfigError::Invalid(vec!["schedule overrides must be a JSON object".to_string()]));
        };
        for (key, value) in patch {
            base.insert(key.clone(), value.clone());
        }
        serde_json::from_value(merged).map_err(|e| ConfigError::Invalid(vec![format!("schedule: {e}")]))
    }

    pub fn sload_cost(&self, access: &mut AccessSet, contract: ContractId, slot: SlotKey) -> Gas {
        if access.warm_slot(contract, slot) {
            self.warm_sload
        } else {
            self.cold_sload
        }
    }

    /// Prices a store into `cell` and updates it. Returns `(gas, refund delta)`.
    pub fn sstore_cost(
        &self,
        cell: &mut StorageCell,
        new: Word,
        access: &mut AccessSet,
        contract: ContractId,
        slot: SlotKey,
    ) -> (Gas, i64) {
        let surcharge = if access.warm_slot(contract, slot) { 0 } else { self.cold_sload };
        let original = cell.original;
        let current = cell.current;
        let mut refund = 0i64;

        let base = if new == current {
            self.sstore_noop
        } else if current == original {
            if original.is_zero() {
                self.sstore_set
            } else {
                if new.is_zero() {
                    refund += self.refund_clear as i64;
                }
                self.sstore_reset
            }
        } else {
            if !original.is_zero() {
                if current.is_zero() {
                    refund -= self.refund_clear as i64;
                }
                if new.is_zero() {
                    refund += self.refund_clear as i64;
                }
            }
            if new == original {
                if original.is_zero() {
                    refund += (self.sstore_set - self.sstore_noop) as i64;
                } else {
                    refund += (self.sstore_reset - self.sstore_noop) as i64;
                }
            }
            self.sstore_noop
        };

        cell.current = new;
        (surcharge + base, refund)
    }

    pub fn account_access_cost(&self, access: &mut AccessSet, contract: ContractId) -> Gas {
        if access.warm_account(contract) {
            self.warm_account_access
        } else {
            self.cold_account_access
        }
    }

    pub fn hash_cost(&self, byte_len: usize) -> Gas {
        self.hash_base + self.hash_per_word * (byte_len as u64).div_ceil(32)
    }

    pub fn calldata_cost(&self, payload: &[u8]) -> Gas {
        payload.iter().map(|b| if *b == 0 { self.calldata_zero_byte } else { self.calldata_nonzero_byte }).sum()
    }

    /// Gas charged after capping the refund counter.
    pub fn finalize_tx(&self, meter: &GasMeter) -> Gas {
        let cap = meter.used / self.refund_cap_divisor;
        meter.used - meter.refund().min(cap)
    }
}

/// Warm slots and accounts of the running transaction.
#[derive(Clone, Debug, Default)]
pub struct AccessSet {
    warm_slots: HashSet<(ContractId, SlotKey)>,
    warm_accounts: HashSet<ContractId>,
}

impl AccessSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks the slot warm, returning whether it already was.
    pub fn warm_slot(&mut self, contract: ContractId, slot: SlotKey) -> bool {
        !self.warm_slots.insert((contract, slot))
    }

    pub fn warm_account(&mut self, contract: ContractId) -> bool {
        !self.warm_accounts.insert(contract)
    }

    pub fn is_slot_warm(&self, contract: ContractId, slot: SlotKey) -> bool {
        self.warm_slots.contains(&(contract, slot))
    }

    pub fn is_account_warm(&self, contract: ContractId) -> bool {
        self.warm_accounts.contains(&contract)
    }

    pub fn slot_count(&self) -> usize {
        self.warm_slots.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GasMeter {
    pub used: Gas,
    refund_counter: i64,
}

impl GasMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, gas: Gas) {
        self.used += gas;
    }

    pub fn add_refund(&mut self, delta: i64) {
        self.refund_counter += delta;
    }

    /// The refund counter. Negative intermediate values read as zero.
    pub fn refund(&self) -> Gas {
        self.refund_counter.max(0) as Gas
    }

    pub fn clear_refund(&mut self) {
        self.refund_counter = 0;
    }
}

/// Value of a slot at transaction start and now.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StorageCell {
    pub original: Word,
    pub current: Word,
}

impl StorageCell {
    pub fn new(value: Word) -> Self {
        StorageCell { original: value, current: value }
    }
}
