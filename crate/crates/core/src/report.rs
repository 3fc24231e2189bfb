//! Structured verification results.

use std::fmt::Display;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub spec: String,
    pub checks: Vec<Check>,
    pub witnesses: Map<String, Value>,
    pub wall_time_ms: u128,
    /// Set when the report documents a known negative result that is itself the claim.
    #[serde(default)]
    pub expected_failure: bool,
    #[serde(skip)]
    started: Option<Instant>,
}

impl Report {
    pub fn new(spec: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            spec: spec.into(),
            checks: Vec::new(),
            witnesses: Map::new(),
            wall_time_ms: 0,
            expected_failure: false,
            started: Some(Instant::now()),
        }
    }

    /// Records `expected == computed`.
    pub fn check<T: PartialEq + Display>(&mut self, name: impl Into<String>, expected: T, computed: T) -> bool {
        let pass = expected == computed;
        self.checks.push(Check {
            name: name.into(),
            expected: expected.to_string(),
            computed: computed.to_string(),
            pass,
        });
        pass
    }

    pub fn check_true(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.check(name, true, ok)
    }

    pub fn witness(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.witnesses.insert(key.into(), v);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Appends another report's checks, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
        for (k, v) in other.witnesses {
            self.witnesses.insert(format!("{prefix}{k}"), v);
        }
    }

    pub fn finish(mut self) -> Self {
        if let Some(t) = self.started.take() {
            self.wall_time_ms = t.elapsed().as_millis();
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "== {} [{}] ({} ms)\n",
            self.spec,
            if self.passed() { "PASS" } else { "FAIL" },
            self.wall_time_ms
        );
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            s.push_str(&format!(
                "  {} {:<w$}  expected {}  computed {}\n",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.expected,
                c.computed,
                w = w
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_and_json() {
        let mut r = Report::new("demo");
        assert!(r.check("rank", 3usize, 3usize));
        assert!(!r.check("dim", 4usize, 5usize));
        r.witness("v", vec![1, 2]);
        let r = r.finish();
        assert!(!r.passed());
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.checks, r.checks);
        assert_eq!(back.schema, 1);
    }
}
