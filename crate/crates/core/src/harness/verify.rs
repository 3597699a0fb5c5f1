//! Runs the criteria and writes their artifacts to an output directory.

use std::path::Path;

use serde_json::{json, Value};

use crate::error::Result;
use crate::harness::criteria::{run_all, Outcome};
use crate::harness::csv::{write_atomic, Table};

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, id: &str) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.id == id)
    }

    /// One `PASS`/`FAIL` line per criterion.
    pub fn lines(&self) -> Vec<String> {
        self.outcomes.iter().map(status_line).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let criteria: Vec<Value> = self
            .outcomes
            .iter()
            .map(|o| {
                json!({
                    "id": o.id,
                    "name": o.name,
                    "passed": o.passed,
                    "summary": o.summary,
                    "metrics": o.metrics,
                })
            })
            .collect();
        let doc = json!({"seed": self.seed, "passed": self.passed(), "criteria": criteria});
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

pub fn status_line(o: &Outcome) -> String {
    format!(
        "[{}] criterion {:>2} {}: {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.summary
    )
}

fn dir_name(o: &Outcome) -> String {
    match o.id.parse::<u32>() {
        Ok(n) => format!("c{n:02}-{}", o.name),
        Err(_) => o.name.clone(),
    }
}

/// Writes every table and text artifact of `o` under `out/<criterion>/`.
pub fn write_outcome(out: &Path, o: &Outcome) -> Result<()> {
    let dir = out.join(dir_name(o));
    for (name, table) in &o.tables {
        table.write(&dir.join(name))?;
    }
    for (name, text) in &o.texts {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

/// Runs all criteria and, if `out` is given, writes their artifacts plus
/// `summary.json` and `summary.csv`. Files contain no timings, so equal seeds
/// give byte-identical directories.
pub fn verify_all(seed: u64, out: Option<&Path>) -> Result<VerifyReport> {
    let mut outcomes = run_all(seed);
    outcomes.sort_by_key(|o| o.id.parse::<u32>().unwrap_or(u32::MAX));
    let report = VerifyReport { seed, outcomes };
    if let Some(out) = out {
        for o in &report.outcomes {
            write_outcome(out, o)?;
        }
        write_atomic(&out.join("summary.json"), report.to_json()?.as_bytes())?;
        let mut t = Table::new(&["criterion", "name", "passed", "summary"]);
        for o in &report.outcomes {
            t.push(vec![o.id.clone().into(), o.name.clone().into(), o.passed.into(), o.summary.clone().into()]);
        }
        t.write(&out.join("summary.csv"))?;
    }
    Ok(report)
}
