//! The notarization application, as trace generators.
//!
//! Storage layout of the app contract (shared by every version so that
//! upgrades behind a proxy or diamond keep earlier data readable):
//!
//! | slot | contents                                  | versions |
//! |------|-------------------------------------------|----------|
//! | 0    | `mapping(string => string)` file names    | all      |
//! | 1    | `mapping(string => bytes32)` file hashes  | V1, V2 (read as fallback in V3) |
//! | 2    | `mapping(string => File)` records         | V3       |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gas::GasSchedule;
use crate::storage::{keccak256, ContractStorage};
use crate::trace::{OpTrace, Outcome, ReturnValue, Tx};
use crate::word::{Address, SlotKey, Word};

pub const NAMES_SLOT: u64 = 0;
pub const HASHES_SLOT: u64 = 1;
pub const RECORDS_SLOT: u64 = 2;

pub const NOT_OWNER: &str = "not-owner";
pub const UNKNOWN_FUNCTION: &str = "unknown-function";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppVersion {
    V1,
    V2,
    V3,
}

impl AppVersion {
    pub const ALL: [AppVersion; 3] = [AppVersion::V1, AppVersion::V2, AppVersion::V3];

    pub fn functions(self) -> &'static [Function] {
        use Function::*;
        match self {
            AppVersion::V1 => &[AddFile, GetFileName, GetFileHash, CompareHashes],
            AppVersion::V2 | AppVersion::V3 => &[AddFile, UpdateFile, GetFileName, GetFileHash, CompareHashes],
        }
    }

    pub fn supports(self, function: Function) -> bool {
        self.functions().contains(&function)
    }

    pub fn next(self) -> Option<AppVersion> {
        match self {
            AppVersion::V1 => Some(AppVersion::V2),
            AppVersion::V2 => Some(AppVersion::V3),
            AppVersion::V3 => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AppVersion::V1 => "v1",
            AppVersion::V2 => "v2",
            AppVersion::V3 => "v3",
        }
    }
}

impl fmt::Display for AppVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AppVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(AppVersion::V1),
            "v2" | "2" => Ok(AppVersion::V2),
            "v3" | "3" => Ok(AppVersion::V3),
            _ => Err(format!("unknown version `{s}` (expected v1, v2 or v3)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Function {
    #[serde(rename = "addFile")]
    AddFile,
    #[serde(rename = "updateFile")]
    UpdateFile,
    #[serde(rename = "getFileName")]
    GetFileName,
    #[serde(rename = "getFileHash")]
    GetFileHash,
    #[serde(rename = "compareHashes")]
    CompareHashes,
}

impl Function {
    pub const ALL: [Function; 5] = [
        Function::AddFile,
        Function::UpdateFile,
        Function::GetFileName,
        Function::GetFileHash,
        Function::CompareHashes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::AddFile => "addFile",
            Function::UpdateFile => "updateFile",
            Function::GetFileName => "getFileName",
            Function::GetFileHash => "getFileHash",
            Function::CompareHashes => "compareHashes",
        }
    }

    pub fn signature(self) -> &'static str {
        match self {
            Function::AddFile => "addFile(string,bytes32)",
            Function::UpdateFile => "updateFile(string,bytes32)",
            Function::GetFileName => "getFileName(string)",
            Function::GetFileHash => "getFileHash(string)",
            Function::CompareHashes => "compareHashes(bytes32,bytes32)",
        }
    }

    pub fn selector(self) -> Selector {
        function_selector(self.signature())
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Function {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Function::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s) || (s == "compareHash" && *f == Function::CompareHashes))
            .ok_or_else(|| format!("unknown function `{s}`"))
    }
}

/// A 4-byte function selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Selector(pub [u8; 4]);

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

/// First four bytes of the keccak digest of a canonical signature.
pub fn function_selector(signature: &str) -> Selector {
    let digest = keccak256(signature.as_bytes());
    Selector([digest[0], digest[1], digest[2], digest[3]])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub owner: Address,
    pub content_hash: Word,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallArgs {
    Name(String),
    NameHash(String, Word),
    Hashes(Word, Word),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRequest {
    pub function: Function,
    pub args: CallArgs,
    pub caller: Address,
    pub timestamp: u64,
}

/// Default sender and block timestamp of a local test chain.
pub const DEFAULT_CALLER: Address = Address([
    0x18, 0x04, 0xc8, 0xab, 0x1f, 0x12, 0xe6, 0xbb, 0xf3, 0x89, 0x4d, 0x40, 0x83, 0xf3, 0x3e, 0x07, 0x30, 0x9d, 0x1f,
    0x38,
]);
pub const DEFAULT_TIMESTAMP: u64 = 1;

impl CallRequest {
    fn new(function: Function, args: CallArgs) -> Self {
        CallRequest { function, args, caller: DEFAULT_CALLER, timestamp: DEFAULT_TIMESTAMP }
    }

    pub fn add_file(name: &str, hash: Word) -> Self {
        Self::new(Function::AddFile, CallArgs::NameHash(name.to_string(), hash))
    }

    pub fn update_file(name: &str, hash: Word) -> Self {
        Self::new(Function::UpdateFile, CallArgs::NameHash(name.to_string(), hash))
    }

    pub fn get_file_name(name: &str) -> Self {
        Self::new(Function::GetFileName, CallArgs::Name(name.to_string()))
    }

    pub fn get_file_hash(name: &str) -> Self {
        Self::new(Function::GetFileHash, CallArgs::Name(name.to_string()))
    }

    pub fn compare_hashes(a: Word, b: Word) -> Self {
        Self::new(Function::CompareHashes, CallArgs::Hashes(a, b))
    }

    pub fn from(mut self, caller: Address) -> Self {
        self.caller = caller;
        self
    }

    pub fn at(mut self, timestamp: u64) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn name(&self) -> Option<&str> {
        match &self.args {
            CallArgs::Name(n) | CallArgs::NameHash(n, _) => Some(n),
            CallArgs::Hashes(..) => None,
        }
    }

    /// Selector followed by the ABI-encoded arguments.
    pub fn calldata(&self) -> Vec<u8> {
        let mut out = self.function.selector().0.to_vec();
        match &self.args {
            CallArgs::Name(name) => {
                out.extend_from_slice(Word::from_u64(32).as_bytes());
                push_abi_string(&mut out, name.as_bytes());
            }
            CallArgs::NameHash(name, hash) => {
                out.extend_from_slice(Word::from_u64(64).as_bytes());
                out.extend_from_slice(hash.as_bytes());
                push_abi_string(&mut out, name.as_bytes());
            }
            CallArgs::Hashes(a, b) => {
                out.extend_from_slice(a.as_bytes());
                out.extend_from_slice(b.as_bytes());
            }
        }
        out
    }
}

fn push_abi_string(out: &mut Vec<u8>, data: &[u8]) {
    out.extend_from_slice(Word::from_u64(data.len() as u64).as_bytes());
    out.extend_from_slice(data);
    let pad = (32 - data.len() % 32) % 32;
    out.extend(std::iter::repeat_n(0u8, pad));
}

/// Compute budgets of the app logic, in compute units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppParams {
    /// Selector matching and argument decoding, charged on every call.
    pub call_entry_units: u64,
    /// Body of `compareHashes`.
    pub compare_units: u64,
}

impl Default for AppParams {
    fn default() -> Self {
        AppParams { call_entry_units: 16, compare_units: 8 }
    }
}

/// Runs `call` inside an open transaction. Storage is left mutated even on
/// revert; rolling back is the caller's job.
pub fn run(
    version: AppVersion,
    call: &CallRequest,
    storage: &mut ContractStorage,
    tx: &mut Tx<'_>,
    params: &AppParams,
) -> Outcome {
    tx.compute(params.call_entry_units);
    if !version.supports(call.function) {
        return Outcome::Reverted(UNKNOWN_FUNCTION.to_string());
    }
    match (&call.args, call.function) {
        (CallArgs::NameHash(name, hash), Function::AddFile) => match version {
            AppVersion::V1 | AppVersion::V2 => add_file_flat(storage, tx, name, *hash),
            AppVersion::V3 => add_file_record(storage, tx, call, name, *hash),
        },
        (CallArgs::NameHash(name, hash), Function::UpdateFile) => match version {
            AppVersion::V3 => update_file_record(storage, tx, call, name, *hash),
            _ => {
                let slot = tx.mapping_slot(SlotKey::new(HASHES_SLOT), name.as_bytes());
                tx.sstore(storage, slot, *hash);
                Outcome::Ok(ReturnValue::Unit)
            }
        },
        (CallArgs::Name(name), Function::GetFileName) => {
            let head = tx.mapping_slot(SlotKey::new(NAMES_SLOT), name.as_bytes());
            let stored = tx.load_string(storage, head);
            Outcome::Ok(ReturnValue::Text(String::from_utf8_lossy(&stored).into_owned()))
        }
        (CallArgs::Name(name), Function::GetFileHash) => {
            let hash = match version {
                AppVersion::V3 => {
                    let head = tx.mapping_slot(SlotKey::new(RECORDS_SLOT), name.as_bytes());
                    let hash = tx.sload(storage, head.offset(1));
                    if hash.is_zero() {
                        legacy_hash(storage, tx, name)
                    } else {
                        hash
                    }
                }
                _ => legacy_hash(storage, tx, name),
            };
            Outcome::Ok(ReturnValue::Word(hash))
        }
        (CallArgs::Hashes(a, b), Function::CompareHashes) => {
            tx.compute(params.compare_units);
            Outcome::Ok(ReturnValue::Bool(a == b))
        }
        _ => Outcome::Reverted("bad-arguments".to_string()),
    }
}

fn legacy_hash(storage: &mut ContractStorage, tx: &mut Tx<'_>, name: &str) -> Word {
    let slot = tx.mapping_slot(SlotKey::new(HASHES_SLOT), name.as_bytes());
    tx.sload(storage, slot)
}

fn store_name(storage: &mut ContractStorage, tx: &mut Tx<'_>, name: &str) {
    let head = tx.mapping_slot(SlotKey::new(NAMES_SLOT), name.as_bytes());
    tx.store_string(storage, head, name.as_bytes());
}

fn add_file_flat(storage: &mut ContractStorage, tx: &mut Tx<'_>, name: &str, hash: Word) -> Outcome {
    store_name(storage, tx, name);
    let slot = tx.mapping_slot(SlotKey::new(HASHES_SLOT), name.as_bytes());
    tx.sstore(storage, slot, hash);
    Outcome::Ok(ReturnValue::Unit)
}

fn add_file_record(
    storage: &mut ContractStorage,
    tx: &mut Tx<'_>,
    call: &CallRequest,
    name: &str,
    hash: Word,
) -> Outcome {
    let head = tx.mapping_slot(SlotKey::new(RECORDS_SLOT), name.as_bytes());
    let owner = tx.sload(storage, head).to_address();
    if owner != Address::ZERO && owner != call.caller {
        return Outcome::Reverted(NOT_OWNER.to_string());
    }
    store_name(storage, tx, name);
    let record =
        FileRecord { owner: call.caller, content_hash: hash, created_at: call.timestamp, updated_at: call.timestamp };
    for (slot, word) in crate::storage::struct_layout_file(&record, head) {
        tx.sstore(storage, slot, word);
    }
    Outcome::Ok(ReturnValue::Unit)
}

fn update_file_record(
    storage: &mut ContractStorage,
    tx: &mut Tx<'_>,
    call: &CallRequest,
    name: &str,
    hash: Word,
) -> Outcome {
    let head = tx.mapping_slot(SlotKey::new(RECORDS_SLOT), name.as_bytes());
    let owner = tx.sload(storage, head).to_address();
    if owner != call.caller {
        return Outcome::Reverted(NOT_OWNER.to_string());
    }
    tx.sstore(storage, head.offset(1), hash);
    tx.sstore(storage, head.offset(3), Word::from_u64(call.timestamp));
    Outcome::Ok(ReturnValue::Unit)
}

/// Executes `call` as its own transaction against `storage`, without any
/// transaction-level charges. Reverted calls leave storage untouched.
pub fn execute(
    version: AppVersion,
    call: &CallRequest,
    storage: &mut ContractStorage,
    schedule: &GasSchedule,
    params: &AppParams,
) -> OpTrace {
    storage.snapshot_tx();
    let mut tx = Tx::new(schedule);
    let outcome = run(version, call, storage, &mut tx, params);
    if !outcome.is_ok() {
        storage.revert_tx();
    }
    tx.finish(outcome)
}

/// Deterministic stand-in for a file content hash.
pub fn pseudo_hash(name: &str, iteration: u64) -> Word {
    let mut data = name.as_bytes().to_vec();
    data.extend_from_slice(&iteration.to_be_bytes());
    Word(keccak256(&data))
}
