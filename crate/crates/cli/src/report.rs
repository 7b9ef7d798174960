//! Structured command output, rendered as `key: value` text or JSON.

use std::fmt::{self, Write as _};

use ksym_core::expr::Equality;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    /// Canonical simplification to zero, or an explicit symbolic witness.
    Symbolic,
    /// Seeded sampling or floating-point evaluation.
    Numeric,
}

impl Grade {
    pub fn label(self) -> &'static str {
        match self {
            Grade::Symbolic => "symbolic",
            Grade::Numeric => "numeric",
        }
    }

    /// Grade of the evidence behind an equality verdict; an inequality is
    /// found by sampling.
    pub fn of(e: Equality) -> Grade {
        match e {
            Equality::Symbolic => Grade::Symbolic,
            Equality::Numeric | Equality::Unequal => Grade::Numeric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub grade: Grade,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<Entry>,
    /// Derived objects, each printed in the expression grammar.
    pub objects: Vec<Entry>,
    pub verdicts: Vec<Verdict>,
    pub witnesses: Vec<String>,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.to_string(),
            inputs: Vec::new(),
            objects: Vec::new(),
            verdicts: Vec::new(),
            witnesses: Vec::new(),
            measurements: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl fmt::Display) {
        self.inputs.push(Entry { key: key.to_string(), value: value.to_string() });
    }

    pub fn object(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.objects.push(Entry { key: key.into(), value: value.to_string() });
    }

    pub fn verdict(&mut self, name: &str, pass: bool, grade: Grade, detail: Option<String>) {
        self.verdicts.push(Verdict { name: name.to_string(), pass, grade, detail });
    }

    /// A verdict that holds when `e` does.
    pub fn equality(&mut self, name: &str, e: Equality) {
        self.verdict(name, e.holds(), Grade::of(e), None);
    }

    pub fn witness(&mut self, w: impl fmt::Display) {
        self.witnesses.push(w.to_string());
    }

    pub fn measure(&mut self, key: impl Into<String>, value: f64) {
        self.measurements.push(Measurement { key: key.into(), value });
    }

    pub fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn find_object(&self, key: &str) -> Option<&str> {
        self.objects.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn find_verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn find_measurement(&self, key: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.key == key).map(|m| m.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "command: {}", self.command)?;
        for e in &self.inputs {
            writeln!(out, "input {}: {}", e.key, e.value)?;
        }
        for e in &self.objects {
            writeln!(out, "{} = {}", e.key, e.value)?;
        }
        for m in &self.measurements {
            writeln!(out, "measure {}: {:e}", m.key, m.value)?;
        }
        for v in &self.verdicts {
            write!(out, "verdict {}: {} [{}]", v.name, if v.pass { "pass" } else { "fail" }, v.grade.label())?;
            if let Some(d) = &v.detail {
                write!(out, " {d}")?;
            }
            out.push('\n');
        }
        for w in &self.witnesses {
            writeln!(out, "witness: {w}")?;
        }
        for n in &self.notes {
            writeln!(out, "note: {n}")?;
        }
        writeln!(out, "result: {}", if self.passed() { "pass" } else { "fail" })?;
        f.write_str(&out)
    }
}
