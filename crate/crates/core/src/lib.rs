//! Gas-cost models for classic, proxy (UUPS) and diamond contract patterns.
//!
//! Everything is priced from first principles: a gas schedule, the storage
//! layout of a small notarization app, and the dispatch envelope each pattern
//! wraps around it. The [`harness`] replays the benchmark workloads and
//! aggregates per-function gas reports; [`calibration`] fits bytecode sizes to
//! measured deployment totals; [`advisor`] encodes the pattern decision model.

pub mod advisor;
pub mod app;
pub mod calibration;
pub mod dispatch;
pub mod emit;
pub mod error;
pub mod gas;
pub mod harness;
pub mod storage;
pub mod trace;
pub mod word;

pub use app::{AppParams, AppVersion, CallRequest, FileRecord, Function, Selector};
pub use dispatch::{CodeSizeTable, ContractRole, DeploymentPlan, Pattern, World};
pub use error::{CalibrationError, ConfigError, EmitError, PlanError};
pub use gas::{AccessSet, Gas, GasMeter, GasSchedule, StorageCell};

pub use harness::{CallRecord, GasReport, NameConfig, ScenarioConfig};
pub use storage::{ContractStorage, StorageOp};
pub use trace::{OpTrace, Outcome, TraceOp, Tx};
pub use word::{Address, ContractId, SlotKey, Word};
