//! Verdict output, human-readable or JSON.

use std::path::Path;

use serde::Serialize;
use twf_core::allen::RationalInterval;
use twf_core::oracle::Model;
use twf_core::qcn::Schedule;
use twf_core::workflow::quote_name;

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub lo: String,
    pub hi: String,
}

impl From<&RationalInterval> for Interval {
    fn from(iv: &RationalInterval) -> Self {
        Interval { lo: iv.lo().to_string(), hi: iv.hi().to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct Timed {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occurrence: Option<u32>,
    /// Iteration index of each enclosing loop, outermost first.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub iterations: Vec<u32>,
    pub interval: Interval,
}

impl Timed {
    fn line(&self) -> String {
        let mut s = quote_name(&self.name);
        if let Some(o) = self.occurrence {
            s.push_str(&format!("#{o}"));
        }
        if !self.iterations.is_empty() {
            let its: Vec<String> = self.iterations.iter().map(u32::to_string).collect();
            s.push_str(&format!(" (iteration {})", its.join(".")));
        }
        format!("{s} = [{}, {}]", self.interval.lo, self.interval.hi)
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Witness {
    /// Atom executions of the chosen resolution.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub executions: Vec<Timed>,
    /// Hull of each constrained node (or each variable of a schedule).
    pub variables: Vec<Timed>,
}

impl Witness {
    pub fn from_model(m: &Model, hulls: Vec<(String, Vec<u32>, Interval)>) -> Self {
        let executions = m
            .executions()
            .into_iter()
            .map(|(name, occ, iv)| Timed { name, occurrence: Some(occ.0), iterations: vec![], interval: (&iv).into() })
            .collect();
        let variables = hulls
            .into_iter()
            .map(|(name, iterations, interval)| Timed { name, occurrence: None, iterations, interval })
            .collect();
        Witness { executions, variables }
    }

    pub fn from_schedule(s: &Schedule) -> Self {
        let variables = s
            .entries
            .iter()
            .map(|(name, iv)| Timed { name: name.clone(), occurrence: None, iterations: vec![], interval: iv.into() })
            .collect();
        Witness { executions: vec![], variables }
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum VerdictValue {
    Bool(bool),
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub file: String,
    pub verdict: VerdictValue,
    /// Set when loops were only explored up to `unroll_bound` iterations.
    pub bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unroll_bound: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn new(command: &'static str, file: &Path) -> Self {
        Verdict {
            schema_version: SCHEMA_VERSION,
            tool: "twf",
            version: env!("CARGO_PKG_VERSION"),
            command,
            file: file.display().to_string(),
            verdict: VerdictValue::Bool(false),
            bounded: false,
            unroll_bound: None,
            witness: None,
        }
    }

    pub fn emit(&self, json: bool, summary: &str) {
        if json {
            println!("{}", serde_json::to_string_pretty(self).expect("verdicts serialize"));
            return;
        }
        let qualifier = match (self.bounded, self.unroll_bound) {
            (true, Some(k)) => format!(" (bounded: loops unrolled at most {k} times)"),
            _ => String::new(),
        };
        println!("{}: {summary}{qualifier}", self.file);
        let Some(w) = &self.witness else { return };
        if !w.executions.is_empty() {
            println!("executions:");
            w.executions.iter().for_each(|t| println!("  {}", t.line()));
        }
        if !w.variables.is_empty() {
            println!("{}:", if w.executions.is_empty() { "schedule" } else { "constrained nodes" });
            w.variables.iter().for_each(|t| println!("  {}", t.line()));
        }
    }
}
