use serde::Serialize;
use serde_json::Value;

use crate::output::SCHEMA_VERSION;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value < threshold, value, threshold }
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Self { name: name.into(), passed, value: f64::from(u8::from(passed)), threshold: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: &'static str,
    pub seed: Option<u64>,
    pub config: Option<Value>,
    pub checks: Vec<Check>,
    pub error: Option<Value>,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: "lispray",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            status: "error",
            seed: None,
            config: None,
            checks: Vec::new(),
            error: None,
            wall_time_seconds: 0.0,
        }
    }
}
