use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("quaternion is not unit-norm (|q| = {0})")]
    NotUnit(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("non-finite state in body `{body}` at step {step}: {detail}")]
    NonFinite { body: String, step: u64, detail: String },
    #[error("unsupported collider pair: {0} vs {1}")]
    UnsupportedPair(&'static str, &'static str),
    #[error("unknown body `{0}`")]
    UnknownBody(String),
    #[error("duplicate body id `{0}`")]
    DuplicateBody(String),
    #[error("invalid parameter for `{body}`: {detail}")]
    InvalidParameter { body: String, detail: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {what}: {source}")]
    Parse { what: String, source: serde_json::Error },
    #[error("unsupported schema_version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid entry `{entry}`: {detail}")]
    Invalid { entry: String, detail: String },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

impl ConfigError {
    pub fn invalid(entry: impl Into<String>, detail: impl Into<String>) -> Self {
        ConfigError::Invalid { entry: entry.into(), detail: detail.into() }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("controller disconnected at step {step}")]
    ControllerDisconnected { step: u64 },
    #[error("controller error: {0}")]
    Controller(String),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("path length needs at least one sample")]
    EmptySamples,
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed metrics file: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("config fingerprint mismatch: recorded {recorded}, current {current}")]
    FingerprintMismatch { recorded: String, current: String },
    #[error("final state hash mismatch: recorded {recorded}, replayed {replayed}")]
    HashMismatch { recorded: String, replayed: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
