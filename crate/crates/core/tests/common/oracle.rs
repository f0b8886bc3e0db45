//! Naive re-pricing of a trace from its recorded values alone.
//!
//! Constants are written out here rather than read from the schedule type, and
//! warmth and original values are tracked from scratch, so a bug in the meter
//! does not cancel out.

use std::collections::{HashMap, HashSet};

use gaslab_core::storage::AccessKind;
use gaslab_core::{ContractId, OpTrace, SlotKey, TraceOp, Word};

#[derive(Debug, PartialEq, Eq)]
pub struct Fold {
    pub used: u64,
    pub refund: u64,
    pub total: u64,
    pub execution: u64,
}

fn words(len: usize) -> u64 {
    (len as u64).div_ceil(32)
}

pub fn reprice(trace: &OpTrace) -> Result<Fold, String> {
    let mut warm_slots: HashSet<(ContractId, SlotKey)> = HashSet::new();
    let mut warm_accounts: HashSet<ContractId> = HashSet::new();
    let mut original: HashMap<(ContractId, SlotKey), Word> = HashMap::new();
    let mut current: HashMap<(ContractId, SlotKey), Word> = HashMap::new();
    let mut used: u64 = 0;
    let mut intrinsic: u64 = 0;
    let mut refund: i64 = 0;

    for (i, op) in trace.ops.iter().enumerate() {
        let expect = match op {
            TraceOp::Intrinsic { create, .. } => {
                let g = 21_000 + if *create { 32_000 } else { 0 };
                intrinsic += g;
                g
            }
            TraceOp::Calldata { zero_bytes, nonzero_bytes, .. } => {
                let g = 4 * zero_bytes + 16 * nonzero_bytes;
                intrinsic += g;
                g
            }
            TraceOp::CodeDeposit { bytes, .. } => 200 * bytes,
            TraceOp::Hash { byte_len, .. } => 30 + 6 * words(*byte_len),
            TraceOp::Compute { units, .. } => 12 * units,
            TraceOp::CallOverhead { target, .. } => {
                let access = if warm_accounts.insert(*target) { 2_600 } else { 100 };
                access + 100
            }
            TraceOp::Storage(s) => {
                let key = (s.contract, s.slot);
                let cur = *current.get(&key).unwrap_or(&s.old);
                if cur != s.old {
                    return Err(format!("op {i}: recorded old value disagrees with earlier writes"));
                }
                let orig = *original.entry(key).or_insert(s.old);
                let cold = warm_slots.insert(key);
                match s.kind {
                    AccessKind::Read => {
                        if s.new != s.old {
                            return Err(format!("op {i}: read changed the value"));
                        }
                        if cold {
                            2_100
                        } else {
                            100
                        }
                    }
                    AccessKind::Write => {
                        let new = s.new;
                        current.insert(key, new);
                        let z = Word::ZERO;
                        let base = if new == cur {
                            100
                        } else if cur == orig && orig == z {
                            20_000
                        } else if cur == orig {
                            if new == z {
                                refund += 4_800;
                            }
                            2_900
                        } else {
                            if orig != z && cur == z {
                                refund -= 4_800;
                            }
                            if orig != z && new == z {
                                refund += 4_800;
                            }
                            if new == orig {
                                refund += if orig == z { 19_900 } else { 2_800 };
                            }
                            100
                        };
                        base + if cold { 2_100 } else { 0 }
                    }
                }
            }
        };
        if expect != op.gas() {
            return Err(format!("op {i} ({}): meter {} vs oracle {expect}", op.kind(), op.gas()));
        }
        used += expect;
    }

    let refund = if trace.outcome.is_ok() { refund.max(0) as u64 } else { 0 };
    let total = used - refund.min(used / 5);
    let exec_used = used - intrinsic;
    let execution = exec_used - refund.min(exec_used / 5);
    Ok(Fold { used, refund, total, execution })
}

/// `Ok` when the oracle and the meter agree on every total.
pub fn check(trace: &OpTrace) -> Result<(), String> {
    let fold = reprice(trace)?;
    let meter = Fold { used: trace.used, refund: trace.refund, total: trace.total, execution: trace.execution };
    if fold == meter {
        Ok(())
    } else {
        Err(format!("oracle {fold:?} vs meter {meter:?}"))
    }
}
