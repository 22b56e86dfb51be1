//! Command outcomes, their exit codes and their text or JSON rendering.

use std::process::ExitCode;

use cfsm::decide::Stats;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Precondition,
}

impl Verdict {
    pub fn of(holds: bool) -> Self {
        if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Precondition => 3,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StatsJson {
    pub states: usize,
    pub edges: usize,
    pub k: usize,
    pub semantics: &'static str,
}

impl From<Stats> for StatsJson {
    fn from(s: Stats) -> Self {
        StatsJson { states: s.states, edges: s.edges, k: s.k, semantics: s.semantics.as_str() }
    }
}

/// The outcome of one analysis command.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// `null` for commands that explore no state space.
    pub stats: Option<StatsJson>,
    /// Human-readable detail, text mode only.
    #[serde(skip)]
    pub lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str, verdict: Verdict) -> Self {
        Report { command: command.to_string(), verdict, witness: None, stats: None, lines: Vec::new() }
    }

    pub fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn stats(mut self, s: Stats) -> Self {
        self.stats = Some(s.into());
        self
    }

    pub fn line(mut self, l: impl Into<String>) -> Self {
        self.lines.push(l.into());
        self
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            return serde_json::to_string_pretty(self).expect("report serializes");
        }
        let verdict = match self.verdict {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Precondition => "precondition violated",
        };
        let mut out = format!("{}: {verdict}", self.command);
        for l in &self.lines {
            out.push_str("\n  ");
            out.push_str(l);
        }
        if let Some(w) = &self.witness {
            out.push_str("\n  witness: ");
            out.push_str(w);
        }
        if let Some(s) = &self.stats {
            out.push_str(&format!(
                "\n  states: {}, edges: {}, k: {}, semantics: {}",
                s.states, s.edges, s.k, s.semantics
            ));
        }
        out
    }
}
