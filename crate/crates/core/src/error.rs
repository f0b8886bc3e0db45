use thiserror::Error;

use crate::app::AppVersion;
use crate::dispatch::Pattern;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("cannot upgrade {pattern} from {from} to {to}")]
    InvalidTransition { pattern: Pattern, from: AppVersion, to: AppVersion },
    #[error("no code size entry for {pattern}/{version}/{role}")]
    MissingSize { pattern: Pattern, version: AppVersion, role: String },
    #[error("contract {role} has deployed size {deployed} above initcode size {initcode}")]
    InconsistentSize { role: String, deployed: u64, initcode: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CalibrationError {
    #[error("target {target} for {pattern} is below the fixed overhead floor of {floor} gas")]
    Infeasible { pattern: Pattern, target: u64, floor: u64 },
    #[error("target {target} for {pattern} is unreachable within the size search range")]
    Unreachable { pattern: Pattern, target: u64 },
    #[error("target for {0} must be positive")]
    NonPositive(Pattern),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed input: {0}")]
    Parse(String),
}
