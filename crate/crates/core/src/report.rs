//! Verification reports: one JSON object per command, written as NDJSON.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    /// Exact witness values (rationals, surds, binary words) when relevant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub command: String,
    pub checks: Vec<CheckRecord>,
    pub truncations: Vec<String>,
    pub data: Value,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report { command: command.into(), data: json!({}), ..Default::default() }
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) -> &mut Self {
        self.checks.push(CheckRecord {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            witness: None,
            detail: detail.into(),
        });
        self
    }

    pub fn fail_with(&mut self, name: impl Into<String>, witness: Option<String>, detail: impl Into<String>) -> &mut Self {
        self.checks.push(CheckRecord { name: name.into(), status: Status::Fail, witness, detail: detail.into() });
        self
    }

    /// Records an engine error as a failed check instead of aborting.
    pub fn error(&mut self, name: impl Into<String>, e: &Error) -> &mut Self {
        let witness = e.witness().map(|w| w.to_string());
        if let Error::Truncation { what, limit } = e {
            self.truncations.push(format!("{what} at {limit}"));
        }
        self.fail_with(name, witness, e.to_string())
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        if let Value::Object(m) = &mut self.data {
            m.insert(key.to_string(), value);
        }
        self
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Pass).count()
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "version": ENGINE_VERSION,
            "command": self.command,
            "checks": self.checks,
            "summary": { "total": self.checks.len(), "passed": self.passed(), "failed": self.checks.len() - self.passed() },
            "truncations": self.truncations,
            "data": self.data,
            "ok": self.ok(),
        })
    }

    /// One NDJSON line, without the trailing newline.
    pub fn to_line(&self) -> String {
        self.to_json().to_string()
    }

    /// Human-readable table.
    pub fn pretty(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
        let mut out = format!("== {} ==\n", self.command);
        for c in &self.checks {
            let mark = if c.status == Status::Pass { "pass" } else { "FAIL" };
            out.push_str(&format!("  {:<width$}  {mark}", c.name));
            if let Some(w) = &c.witness {
                out.push_str(&format!("  at {w}"));
            }
            if !c.detail.is_empty() {
                out.push_str(&format!("  {}", c.detail));
            }
            out.push('\n');
        }
        for t in &self.truncations {
            out.push_str(&format!("  truncated: {t}\n"));
        }
        out.push_str(&format!("  {}/{} passed\n", self.passed(), self.checks.len()));
        out
    }
}

/// Process exit status for a batch: 0 when every check passed, 1 otherwise.
pub fn exit_code(reports: &[Report]) -> i32 {
    if reports.iter().all(Report::ok) {
        0
    } else {
        1
    }
}
