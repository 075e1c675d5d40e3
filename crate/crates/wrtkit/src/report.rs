//! Verification reports: one PASS/FAIL line per named check, plus free-form
//! notes, rendered both as text and as a stable JSON document.
//!
//! Check ids are short stable strings ("phase-match", "leading-degree") so
//! downstream tooling can key on them; the human-readable expected/actual
//! strings are for the person reading the run log.

use serde_json::json;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
        }
    }
}

/// A single named comparison with both sides recorded verbatim.
#[derive(Clone, Debug)]
pub struct Check {
    pub id: &'static str,
    pub status: CheckStatus,
    pub expected: String,
    pub actual: String,
    pub detail: String,
}

impl Check {
    pub fn new(
        id: &'static str,
        passed: bool,
        expected: impl Into<String>,
        actual: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Check {
            id,
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            expected: expected.into(),
            actual: actual.into(),
            detail: detail.into(),
        }
    }

    fn render(&self) -> String {
        let mut line = format!(
            "{} {}: expected {}, got {}",
            self.status.as_str(),
            self.id,
            self.expected,
            self.actual
        );
        if !self.detail.is_empty() {
            line.push_str(&format!(" ({})", self.detail));
        }
        line
    }
}

/// The outcome of one verification command over one scenario.
#[derive(Clone, Debug)]
pub struct Report {
    scenario: String,
    command: String,
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Report {
    pub fn new(scenario: impl Into<String>, command: impl Into<String>) -> Self {
        Report {
            scenario: scenario.into(),
            command: command.into(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// A report with no checks never passes: every verification command is
    /// required to record at least one comparison.
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&check.render());
            out.push('\n');
        }
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        let passed = self.checks.iter().filter(|c| c.status == CheckStatus::Pass).count();
        out.push_str(&format!(
            "verdict: {} ({passed}/{} checks passed)\n",
            self.verdict(),
            self.checks.len()
        ));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "scenario": self.scenario,
            "command": self.command,
            "verdict": self.verdict(),
            "checks": self.checks.iter().map(|c| json!({
                "id": c.id,
                "status": c.status.as_str(),
                "expected": c.expected,
                "actual": c.actual,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }
}
