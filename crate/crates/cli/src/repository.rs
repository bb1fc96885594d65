//! Loading the component/service repository from JSON.

use std::sync::OnceLock;

use crala_core::matchmaker::{Repository, RepositoryEntry};
use jsonschema::Validator;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

/// The published schema, also shipped as `docs/repository-schema.json`.
pub const SCHEMA: &str = include_str!("../../../docs/repository-schema.json");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation {
    /// JSON pointer into the offending document.
    pub pointer: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("repository is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("repository does not match its schema:{}", list(.0))]
    Schema(Vec<SchemaViolation>),
    #[error("duplicate repository entry `{name}` at {pointer}")]
    Duplicate { name: String, pointer: String },
}

fn list(v: &[SchemaViolation]) -> String {
    v.iter().map(|e| format!("\n  at `{}`: {}", e.pointer, e.message)).collect()
}

#[derive(Deserialize)]
struct File {
    entries: Vec<RepositoryEntry>,
}

fn validator() -> &'static Validator {
    static V: OnceLock<Validator> = OnceLock::new();
    V.get_or_init(|| {
        let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

pub fn load_repository(text: &str) -> Result<Repository, RepositoryError> {
    let value: Value = serde_json::from_str(text)?;
    let violations: Vec<SchemaViolation> = validator()
        .iter_errors(&value)
        .map(|e| SchemaViolation { pointer: e.instance_path().to_string(), message: e.to_string() })
        .collect();
    if !violations.is_empty() {
        return Err(RepositoryError::Schema(violations));
    }
    let file: File = serde_json::from_value(value)?;
    Repository::new(file.entries).map_err(|d| RepositoryError::Duplicate {
        name: d.name.to_string(),
        pointer: format!("/entries/{}/name", d.index),
    })
}
