//! Storage layout rules and per-contract storage.
//!
//! Layout follows the Solidity conventions the app relies on:
//! value types take one slot, mapping entries live at `H(key ‖ base)`,
//! strings of up to 31 bytes are packed into their head slot together with
//! `2·len`, longer strings keep `2·len + 1` in the head slot and their data in
//! consecutive slots starting at `H(head)`, and structs occupy consecutive
//! slots from their head.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha3::{Digest, Keccak256};

use crate::gas::{AccessSet, Gas, GasMeter, GasSchedule, StorageCell};
use crate::word::{ContractId, SlotKey, Word};

/// 256-bit digest used to derive dynamic slot locations.
pub trait SlotHasher {
    fn digest(&self, data: &[u8]) -> [u8; 32];
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Keccak;

impl SlotHasher for Keccak {
    fn digest(&self, data: &[u8]) -> [u8; 32] {
        keccak256(data)
    }
}

pub fn keccak256(data: &[u8]) -> [u8; 32] {
    Keccak256::digest(data).into()
}

/// Slot of `mapping[key]` for a mapping declared at `base`, with the hashing gas.
///
/// Keys are hashed as raw bytes (no padding), followed by the 32-byte base.
pub fn mapping_slot_with<H: SlotHasher + ?Sized>(
    hasher: &H,
    schedule: &GasSchedule,
    base: SlotKey,
    key: &[u8],
) -> (SlotKey, Gas) {
    let mut preimage = Vec::with_capacity(key.len() + 32);
    preimage.extend_from_slice(key);
    preimage.extend_from_slice(base.word().as_bytes());
    let slot = SlotKey(Word(hasher.digest(&preimage)));
    (slot, schedule.hash_cost(preimage.len()))
}

pub fn mapping_slot(schedule: &GasSchedule, base: SlotKey, key: &[u8]) -> (SlotKey, Gas) {
    mapping_slot_with(&Keccak, schedule, base, key)
}

/// Number of slots a string of `len` bytes occupies.
pub fn string_slot_count(len: usize) -> usize {
    if len <= 31 {
        1
    } else {
        1 + len.div_ceil(32)
    }
}

/// First data slot of a long string whose head is at `head`.
pub fn string_data_slot<H: SlotHasher + ?Sized>(hasher: &H, head: SlotKey) -> SlotKey {
    SlotKey(Word(hasher.digest(head.word().as_bytes())))
}

/// Slot/word pairs holding `value` at `head`, plus the hashing gas spent
/// locating the data area (long form only).
pub fn encode_string_with<H: SlotHasher + ?Sized>(
    hasher: &H,
    schedule: &GasSchedule,
    head: SlotKey,
    value: &[u8],
) -> (Vec<(SlotKey, Word)>, Gas) {
    let len = value.len();
    if len <= 31 {
        let mut bytes = [0u8; 32];
        bytes[..len].copy_from_slice(value);
        bytes[31] = (2 * len) as u8;
        return (vec![(head, Word(bytes))], 0);
    }
    let mut out = Vec::with_capacity(string_slot_count(len));
    out.push((head, Word::from_u64(2 * len as u64 + 1)));
    let data = string_data_slot(hasher, head);
    for (i, chunk) in value.chunks(32).enumerate() {
        let mut bytes = [0u8; 32];
        bytes[..chunk.len()].copy_from_slice(chunk);
        out.push((data.offset(i as u64), Word(bytes)));
    }
    (out, schedule.hash_cost(32))
}

pub fn encode_string(schedule: &GasSchedule, head: SlotKey, value: &[u8]) -> (Vec<(SlotKey, Word)>, Gas) {
    encode_string_with(&Keccak, schedule, head, value)
}

/// Byte length recorded in a string head word.
pub fn string_len_from_head(head: Word) -> usize {
    if head.0[31] & 1 == 0 {
        (head.0[31] / 2) as usize
    } else {
        ((head.low_u64() - 1) / 2) as usize
    }
}

/// Reassembles a string from storage. `None` if the head is malformed.
pub fn decode_string_with<H, F>(hasher: &H, head: SlotKey, mut read: F) -> Option<Vec<u8>>
where
    H: SlotHasher + ?Sized,
    F: FnMut(SlotKey) -> Word,
{
    let head_word = read(head);
    let len = string_len_from_head(head_word);
    if head_word.0[31] & 1 == 0 {
        if len > 31 {
            return None;
        }
        return Some(head_word.0[..len].to_vec());
    }
    if len < 32 {
        return None;
    }
    let data = string_data_slot(hasher, head);
    let mut out = Vec::with_capacity(len);
    for i in 0..len.div_ceil(32) {
        let word = read(data.offset(i as u64));
        let take = (len - out.len()).min(32);
        out.extend_from_slice(&word.0[..take]);
    }
    Some(out)
}

pub fn decode_string<F: FnMut(SlotKey) -> Word>(head: SlotKey, read: F) -> Option<Vec<u8>> {
    decode_string_with(&Keccak, head, read)
}

/// Owner, content hash, creation and modification time in four consecutive slots.
pub fn struct_layout_file(record: &crate::app::FileRecord, head: SlotKey) -> [(SlotKey, Word); 4] {
    [
        (head, Word::from_address(record.owner)),
        (head.offset(1), record.content_hash),
        (head.offset(2), Word::from_u64(record.created_at)),
        (head.offset(3), Word::from_u64(record.updated_at)),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Read,
    Write,
}

/// One priced storage access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageOp {
    pub contract: ContractId,
    pub kind: AccessKind,
    pub slot: SlotKey,
    pub old: Word,
    pub new: Word,
    pub gas: Gas,
    pub cold: bool,
    pub refund: i64,
}

/// Storage of one contract. Absent slots read as zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractStorage {
    contract: ContractId,
    slots: BTreeMap<SlotKey, StorageCell>,
}

impl ContractStorage {
    pub fn new(contract: ContractId) -> Self {
        ContractStorage { contract, slots: BTreeMap::new() }
    }

    pub fn contract(&self) -> ContractId {
        self.contract
    }

    /// Unpriced read of the current value.
    pub fn get(&self, slot: SlotKey) -> Word {
        self.slots.get(&slot).map(|c| c.current).unwrap_or_default()
    }

    pub fn cell(&self, slot: SlotKey) -> StorageCell {
        self.slots.get(&slot).copied().unwrap_or_default()
    }

    /// Unpriced write used for genesis state and fixtures.
    pub fn poke(&mut self, slot: SlotKey, value: Word) {
        self.slots.insert(slot, StorageCell::new(value));
    }

    /// Starts a transaction: current values become the originals.
    pub fn snapshot_tx(&mut self) {
        self.slots.retain(|_, cell| !cell.current.is_zero());
        for cell in self.slots.values_mut() {
            cell.original = cell.current;
        }
    }

    /// Discards every write made since the last snapshot.
    pub fn revert_tx(&mut self) {
        for cell in self.slots.values_mut() {
            cell.current = cell.original;
        }
    }

    /// Nonzero slots in key order.
    pub fn iter(&self) -> impl Iterator<Item = (SlotKey, Word)> + '_ {
        self.slots.iter().filter(|(_, c)| !c.current.is_zero()).map(|(k, c)| (*k, c.current))
    }

    pub fn read_word(
        &mut self,
        slot: SlotKey,
        schedule: &GasSchedule,
        meter: &mut GasMeter,
        access: &mut AccessSet,
    ) -> (Word, StorageOp) {
        let cold = !access.is_slot_warm(self.contract, slot);
        let gas = schedule.sload_cost(access, self.contract, slot);
        meter.charge(gas);
        let value = self.get(slot);
        let op = StorageOp {
            contract: self.contract,
            kind: AccessKind::Read,
            slot,
            old: value,
            new: value,
            gas,
            cold,
            refund: 0,
        };
        (value, op)
    }

    pub fn write_word(
        &mut self,
        slot: SlotKey,
        new: Word,
        schedule: &GasSchedule,
        meter: &mut GasMeter,
        access: &mut AccessSet,
    ) -> StorageOp {
        let cold = !access.is_slot_warm(self.contract, slot);
        let cell = self.slots.entry(slot).or_default();
        let old = cell.current;
        let (gas, refund) = schedule.sstore_cost(cell, new, access, self.contract, slot);
        meter.charge(gas);
        meter.add_refund(refund);
        StorageOp { contract: self.contract, kind: AccessKind::Write, slot, old, new, gas, cold, refund }
    }
}
