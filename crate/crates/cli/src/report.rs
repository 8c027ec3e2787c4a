//! Consolidated view of a finished run directory.

use std::path::Path;

use crate::config::{load_table, resolve, RunConfig};
use crate::run::{Check, Op, CHECKS, CHECKS_HEADER, MANIFEST, SUMMARY};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    pub summary: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass()).count()
    }

    /// The table printed by `ruinlab report`.
    pub fn render(&self, dir: &Path) -> String {
        let mut s = format!("run: {}\n", dir.display());
        for line in self.summary.lines().take_while(|l| *l != "checks:") {
            s.push_str(line);
            s.push('\n');
        }
        if !self.checks.is_empty() {
            s.push_str("checks:\n");
            for c in &self.checks {
                s.push_str("  ");
                s.push_str(&c.line());
                s.push('\n');
            }
        }
        let n = self.checks.len();
        match self.failures() {
            0 => s.push_str(&format!("result: PASS ({n} checks)\n")),
            k => s.push_str(&format!("result: FAIL ({k} of {n} checks)\n")),
        }
        s
    }
}

fn corrupt(what: &str, reason: impl Into<String>) -> CliError {
    CliError::validation(what, reason)
}

fn parse_checks(text: &str) -> Result<Vec<Check>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(CHECKS_HEADER.join(",").as_str()) {
        return Err(corrupt(CHECKS, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || corrupt(CHECKS, format!("malformed row {}", i + 2));
            if f.len() != CHECKS_HEADER.len() {
                return Err(bad());
            }
            Ok(Check::new(
                f[0],
                f[1].parse().map_err(|_| bad())?,
                Op::parse(f[2]).ok_or_else(bad)?,
                f[3].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

/// Loads a run directory. A missing or unreadable manifest is a validation error.
pub fn load(dir: &Path) -> Result<Report, CliError> {
    let manifest = dir.join(MANIFEST);
    if !manifest.is_file() {
        return Err(corrupt("manifest", format!("no {MANIFEST} in {}", dir.display())));
    }
    let config = resolve(load_table(&manifest)?).map_err(|e| corrupt("manifest", e.to_string()))?;
    let summary = std::fs::read_to_string(dir.join(SUMMARY)).unwrap_or_default();
    let checks = match std::fs::read_to_string(dir.join(CHECKS)) {
        Ok(t) => parse_checks(&t)?,
        Err(_) => Vec::new(),
    };
    Ok(Report {
        config,
        summary,
        checks,
    })
}
