//! 32-byte words, storage keys and account identifiers.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A 32-byte EVM word. The zero word is the default value of every slot.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub [u8; 32]);

impl Word {
    pub const ZERO: Word = Word([0u8; 32]);

    pub fn from_u64(value: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&value.to_be_bytes());
        Word(bytes)
    }

    /// Interprets the low 8 bytes as an integer. Higher bytes are ignored.
    pub fn low_u64(&self) -> u64 {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&self.0[24..]);
        u64::from_be_bytes(buf)
    }

    /// Right-aligns a 20-byte address in a word.
    pub fn from_address(address: Address) -> Self {
        let mut bytes = [0u8; 32];
        bytes[12..].copy_from_slice(&address.0);
        Word(bytes)
    }

    pub fn to_address(&self) -> Address {
        let mut out = [0u8; 20];
        out.copy_from_slice(&self.0[12..]);
        Address(out)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| *b == 0)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Big-endian addition, wrapping at 2^256.
    pub fn wrapping_add_u64(&self, rhs: u64) -> Self {
        let mut out = self.0;
        let mut carry = rhs as u128;
        for byte in out.iter_mut().rev() {
            if carry == 0 {
                break;
            }
            let sum = *byte as u128 + (carry & 0xff);
            *byte = sum as u8;
            carry = (carry >> 8) + (sum >> 8);
        }
        Word(out)
    }

    pub fn wrapping_sub_u64(&self, rhs: u64) -> Self {
        let mut out = self.0;
        let mut borrow = rhs as u128;
        for byte in out.iter_mut().rev() {
            if borrow == 0 {
                break;
            }
            let sub = borrow & 0xff;
            let cur = *byte as u128;
            if cur >= sub {
                *byte = (cur - sub) as u8;
                borrow >>= 8;
            } else {
                *byte = (cur + 256 - sub) as u8;
                borrow = (borrow >> 8) + 1;
            }
        }
        Word(out)
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        let digits = text.strip_prefix("0x").unwrap_or(text);
        if digits.len() > 64 {
            return None;
        }
        let padded = format!("{digits:0>64}");
        let raw = hex::decode(padded).ok()?;
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&raw);
        Some(Word(bytes))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self.to_hex())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Word::from_hex(&text).ok_or_else(|| serde::de::Error::custom(format!("invalid word: {text}")))
    }
}

/// A storage address within one contract.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotKey(pub Word);

impl SlotKey {
    pub fn new(index: u64) -> Self {
        SlotKey(Word::from_u64(index))
    }

    /// The slot `offset` positions after this one.
    pub fn offset(&self, offset: u64) -> Self {
        SlotKey(self.0.wrapping_add_u64(offset))
    }

    pub fn successor(&self) -> Self {
        self.offset(1)
    }

    pub fn word(&self) -> Word {
        self.0
    }
}

impl fmt::Debug for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlotKey({})", self.0.to_hex())
    }
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_hex())
    }
}

/// A 20-byte account address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        let raw = hex::decode(text.strip_prefix("0x").unwrap_or(text)).ok()?;
        let bytes: [u8; 20] = raw.try_into().ok()?;
        Some(Address(bytes))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_hex())
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Address::from_hex(&text).ok_or_else(|| serde::de::Error::custom(format!("invalid address: {text}")))
    }
}

/// Identifies a deployed contract inside one simulated world.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ContractId(pub u64);

impl ContractId {
    /// Deterministic address derived from the id.
    pub fn address(&self) -> Address {
        let mut bytes = [0u8; 20];
        bytes[0] = 0xc0;
        bytes[12..].copy_from_slice(&self.0.to_be_bytes());
        Address(bytes)
    }

    pub fn from_address(address: Address) -> Option<Self> {
        if address.0[0] != 0xc0 || address.0[1..12].iter().any(|b| *b != 0) {
            return None;
        }
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&address.0[12..]);
        Some(ContractId(u64::from_be_bytes(buf)))
    }
}

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "contract#{}", self.0)
    }
}
