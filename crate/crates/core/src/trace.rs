//! Operation traces and the transaction context that records them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::gas::{AccessSet, Gas, GasMeter, GasSchedule};
use crate::storage::{self, AccessKind, ContractStorage, StorageOp};
use crate::word::{ContractId, SlotKey, Word};

/// One priced step of a transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraceOp {
    Intrinsic { create: bool, gas: Gas },
    Calldata { zero_bytes: u64, nonzero_bytes: u64, gas: Gas },
    CodeDeposit { bytes: u64, gas: Gas },
    Storage(StorageOp),
    Hash { byte_len: usize, gas: Gas },
    Compute { units: u64, gas: Gas },
    CallOverhead { target: ContractId, cold: bool, gas: Gas },
}

impl TraceOp {
    pub fn gas(&self) -> Gas {
        match self {
            TraceOp::Intrinsic { gas, .. }
            | TraceOp::Calldata { gas, .. }
            | TraceOp::CodeDeposit { gas, .. }
            | TraceOp::Hash { gas, .. }
            | TraceOp::Compute { gas, .. }
            | TraceOp::CallOverhead { gas, .. } => *gas,
            TraceOp::Storage(op) => op.gas,
        }
    }

    /// Transaction-level charges that are not part of execution.
    pub fn is_intrinsic(&self) -> bool {
        matches!(self, TraceOp::Intrinsic { .. } | TraceOp::Calldata { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TraceOp::Intrinsic { .. } => "intrinsic",
            TraceOp::Calldata { .. } => "calldata",
            TraceOp::CodeDeposit { .. } => "code_deposit",
            TraceOp::Storage(op) => match op.kind {
                AccessKind::Read => "sload",
                AccessKind::Write => "sstore",
            },
            TraceOp::Hash { .. } => "hash",
            TraceOp::Compute { .. } => "compute",
            TraceOp::CallOverhead { .. } => "delegatecall",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnValue {
    Unit,
    Bool(bool),
    Word(Word),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok(ReturnValue),
    Reverted(String),
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok(_))
    }
}

/// A finished transaction: its priced steps and the meter totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTrace {
    pub ops: Vec<TraceOp>,
    pub outcome: Outcome,
    /// Gas charged before refunds, intrinsic included.
    pub used: Gas,
    /// Refund counter at the end of the transaction.
    pub refund: Gas,
    /// Gas charged after refund capping, intrinsic included.
    pub total: Gas,
    /// Gas charged after refund capping, intrinsic and calldata excluded.
    pub execution: Gas,
}

impl OpTrace {
    pub fn gas(&self, include_intrinsic: bool) -> Gas {
        if include_intrinsic {
            self.total
        } else {
            self.execution
        }
    }

    pub fn intrinsic_gas(&self) -> Gas {
        self.ops.iter().filter(|op| op.is_intrinsic()).map(TraceOp::gas).sum()
    }

    pub fn storage_ops(&self) -> impl Iterator<Item = &StorageOp> {
        self.ops.iter().filter_map(|op| match op {
            TraceOp::Storage(s) => Some(s),
            _ => None,
        })
    }

    pub fn reads(&self) -> usize {
        self.storage_ops().filter(|op| op.kind == AccessKind::Read).count()
    }

    pub fn writes(&self) -> usize {
        self.storage_ops().filter(|op| op.kind == AccessKind::Write).count()
    }

    /// One line per step: index, kind, slot or target, cold flag, gas, running total.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut cumulative = 0;
        for (i, op) in self.ops.iter().enumerate() {
            cumulative += op.gas();
            let (target, cold) = match op {
                TraceOp::Storage(s) => (s.slot.to_string(), s.cold.to_string()),
                TraceOp::CallOverhead { target, cold, .. } => (target.address().to_string(), cold.to_string()),
                TraceOp::Hash { byte_len, .. } => (format!("{byte_len} bytes"), "-".into()),
                TraceOp::Compute { units, .. } => (format!("{units} units"), "-".into()),
                TraceOp::Calldata { zero_bytes, nonzero_bytes, .. } => {
                    (format!("{zero_bytes} zero/{nonzero_bytes} nonzero"), "-".into())
                }
                TraceOp::CodeDeposit { bytes, .. } => (format!("{bytes} bytes"), "-".into()),
                TraceOp::Intrinsic { create, .. } => {
                    ((if *create { "create" } else { "call" }).to_string(), "-".into())
                }
            };
            let _ = writeln!(out, "{i}\t{}\t{target}\t{cold}\t{}\t{cumulative}", op.kind(), op.gas());
        }
        let _ = writeln!(out, "# outcome: {:?}", self.outcome);
        let _ = writeln!(
            out,
            "# used: {} refund: {} charged: {} execution: {}",
            self.used, self.refund, self.total, self.execution
        );
        out
    }
}

/// Metering context of a single transaction.
pub struct Tx<'s> {
    schedule: &'s GasSchedule,
    meter: GasMeter,
    access: AccessSet,
    ops: Vec<TraceOp>,
}

impl<'s> Tx<'s> {
    pub fn new(schedule: &'s GasSchedule) -> Self {
        Tx { schedule, meter: GasMeter::new(), access: AccessSet::new(), ops: Vec::new() }
    }

    pub fn schedule(&self) -> &'s GasSchedule {
        self.schedule
    }

    pub fn meter(&self) -> &GasMeter {
        &self.meter
    }

    pub fn access(&self) -> &AccessSet {
        &self.access
    }

    fn push(&mut self, op: TraceOp) {
        self.meter.charge(op.gas());
        self.ops.push(op);
    }

    pub fn intrinsic(&mut self, create: bool) {
        let s = self.schedule;
        let gas = s.tx_intrinsic + if create { s.tx_create } else { 0 };
        self.push(TraceOp::Intrinsic { create, gas });
    }

    pub fn calldata(&mut self, payload: &[u8]) {
        let zero = payload.iter().filter(|b| **b == 0).count() as u64;
        let gas = self.schedule.calldata_cost(payload);
        self.push(TraceOp::Calldata { zero_bytes: zero, nonzero_bytes: payload.len() as u64 - zero, gas });
    }

    /// Calldata of `len` bytes of which `nonzero` are nonzero.
    pub fn calldata_counts(&mut self, len: u64, nonzero: u64) {
        let s = self.schedule;
        let zero = len - nonzero;
        let gas = zero * s.calldata_zero_byte + nonzero * s.calldata_nonzero_byte;
        self.push(TraceOp::Calldata { zero_bytes: zero, nonzero_bytes: nonzero, gas });
    }

    pub fn code_deposit(&mut self, bytes: u64) {
        let gas = bytes * self.schedule.code_deposit_per_byte;
        self.push(TraceOp::CodeDeposit { bytes, gas });
    }

    pub fn hash(&mut self, byte_len: usize) {
        let gas = self.schedule.hash_cost(byte_len);
        self.push(TraceOp::Hash { byte_len, gas });
    }

    pub fn compute(&mut self, units: u64) {
        if units == 0 {
            return;
        }
        let gas = units * self.schedule.compute_unit;
        self.push(TraceOp::Compute { units, gas });
    }

    /// Account access plus call overhead for a delegated call.
    pub fn delegate_call(&mut self, target: ContractId) {
        let cold = !self.access.is_account_warm(target);
        let gas = self.schedule.account_access_cost(&mut self.access, target) + self.schedule.call_base;
        self.push(TraceOp::CallOverhead { target, cold, gas });
    }

    pub fn mapping_slot(&mut self, base: SlotKey, key: &[u8]) -> SlotKey {
        let (slot, _) = storage::mapping_slot(self.schedule, base, key);
        self.hash(key.len() + 32);
        slot
    }

    pub fn sload(&mut self, storage: &mut ContractStorage, slot: SlotKey) -> Word {
        let (value, op) = storage.read_word(slot, self.schedule, &mut self.meter, &mut self.access);
        self.ops.push(TraceOp::Storage(op));
        value
    }

    pub fn sstore(&mut self, storage: &mut ContractStorage, slot: SlotKey, value: Word) {
        let op = storage.write_word(slot, value, self.schedule, &mut self.meter, &mut self.access);
        self.ops.push(TraceOp::Storage(op));
    }

    /// Stores a string at `head`, clearing data slots a longer previous value left behind.
    pub fn store_string(&mut self, storage: &mut ContractStorage, head: SlotKey, value: &[u8]) {
        let previous = self.sload(storage, head);
        let old_len = storage::string_len_from_head(previous);
        let old_data = if old_len > 31 { old_len.div_ceil(32) } else { 0 };
        let new_data = if value.len() > 31 { value.len().div_ceil(32) } else { 0 };
        let (words, hash_gas) = storage::encode_string(self.schedule, head, value);
        if hash_gas > 0 || old_data > new_data {
            self.hash(32);
        }
        for (slot, word) in words {
            self.sstore(storage, slot, word);
        }
        if old_data > new_data {
            let data = storage::string_data_slot(&storage::Keccak, head);
            for i in new_data..old_data {
                self.sstore(storage, data.offset(i as u64), Word::ZERO);
            }
        }
    }

    pub fn load_string(&mut self, storage: &mut ContractStorage, head: SlotKey) -> Vec<u8> {
        let head_word = self.sload(storage, head);
        let len = storage::string_len_from_head(head_word);
        if head_word.0[31] & 1 == 0 {
            return head_word.0[..len.min(31)].to_vec();
        }
        self.hash(32);
        let data = storage::string_data_slot(&storage::Keccak, head);
        let mut out = Vec::with_capacity(len);
        for i in 0..len.div_ceil(32) {
            let word = self.sload(storage, data.offset(i as u64));
            let take = (len - out.len()).min(32);
            out.extend_from_slice(&word.0[..take]);
        }
        out
    }

    /// Closes the transaction. A revert discards refunds; the caller rolls back storage.
    pub fn finish(mut self, outcome: Outcome) -> OpTrace {
        if !outcome.is_ok() {
            self.meter.clear_refund();
        }
        let used = self.meter.used;
        let refund = self.meter.refund();
        let total = self.schedule.finalize_tx(&self.meter);
        let intrinsic: Gas = self.ops.iter().filter(|op| op.is_intrinsic()).map(TraceOp::gas).sum();
        let mut exec_meter = GasMeter::new();
        exec_meter.charge(used - intrinsic);
        exec_meter.add_refund(refund as i64);
        let execution = self.schedule.finalize_tx(&exec_meter);
        OpTrace { ops: self.ops, outcome, used, refund, total, execution }
    }
}
