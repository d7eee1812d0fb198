use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

/// Machine-readable result of one command. Floats appear only as decimal
/// strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandOutcome {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub status: Status,
    pub payload: Value,
    pub elapsed_ms: u64,
}

impl CommandOutcome {
    pub fn new(command: &str, params: BTreeMap<String, String>) -> Self {
        Self {
            command: command.to_string(),
            params,
            status: Status::Pass,
            payload: Value::Null,
            elapsed_ms: 0,
        }
    }
}

/// Collects `key = value` pairs into a parameter map.
#[macro_export]
macro_rules! params {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = std::collections::BTreeMap::new();
        $(m.insert($k.to_string(), $v.to_string());)*
        m
    }};
}
