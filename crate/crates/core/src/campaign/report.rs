use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::CampaignConfig;
use crate::dsl::UnusualInput;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptRecord {
    /// 1-based attempt number within the target.
    pub attempt: usize,
    pub assignment: BTreeMap<String, String>,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crash_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub mutation_rule: String,
    pub program: String,
    pub examples_used: usize,
    pub batch: Vec<UnusualInput>,
    pub outcomes: Vec<AttemptRecord>,
    pub skipped_duplicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidInputTry {
    pub assignment: BTreeMap<String, String>,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub app_name: String,
    pub activity_name: String,
    pub detected: bool,
    pub crash_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crash_input: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store_record_id: Option<u64>,
    pub attempts_used: usize,
    pub elapsed_seconds: f64,
    pub llm_calls: usize,
    pub valid_input: Option<BTreeMap<String, String>>,
    pub inferred_constraints: String,
    pub valid_input_tries: Vec<ValidInputTry>,
    pub rounds: Vec<RoundLog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undetected_reason: Option<String>,
}

impl TargetReport {
    pub fn new(app_name: &str, activity_name: &str) -> Self {
        Self {
            app_name: app_name.to_string(),
            activity_name: activity_name.to_string(),
            detected: false,
            crash_id: None,
            crash_input: None,
            store_record_id: None,
            attempts_used: 0,
            elapsed_seconds: 0.0,
            llm_calls: 0,
            valid_input: None,
            inferred_constraints: String::new(),
            valid_input_tries: Vec::new(),
            rounds: Vec::new(),
            undetected_reason: None,
        }
    }

    /// Every unusual-input submission in order.
    pub fn attempts(&self) -> impl Iterator<Item = &AttemptRecord> {
        self.rounds.iter().flat_map(|r| r.outcomes.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub targets: usize,
    pub detected: usize,
    pub bug_rate: f64,
    pub mean_attempts: f64,
    pub mean_minutes: f64,
}

impl Aggregates {
    /// Undetected targets count with the full attempt and time budget.
    pub fn compute(targets: &[TargetReport], config: &CampaignConfig) -> Self {
        let n = targets.len();
        let detected = targets.iter().filter(|t| t.detected).count();
        let (attempts, minutes) = targets.iter().fold((0.0, 0.0), |(a, m), t| {
            if t.detected {
                (a + t.attempts_used as f64, m + t.elapsed_seconds / 60.0)
            } else {
                (a + config.attempt_budget as f64, m + config.time_budget_seconds as f64 / 60.0)
            }
        });
        let mean = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        Self {
            targets: n,
            detected,
            bug_rate: mean(detected as f64),
            mean_attempts: mean(attempts),
            mean_minutes: mean(minutes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub targets: Vec<TargetReport>,
    pub aggregates: Aggregates,
}

impl CampaignReport {
    pub fn new(config: CampaignConfig, targets: Vec<TargetReport>) -> Self {
        let aggregates = Aggregates::compute(&targets, &config);
        Self {
            config,
            targets,
            aggregates,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-target lines followed by the Bug(%) / Attempt(#) / Min(#) summary.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:<26} {:<5} {:<20} {:>10} {:>7}",
            "App", "Activity", "Bug", "Crash", "Attempt(#)", "Min(#)"
        );
        for t in &self.targets {
            let _ = writeln!(
                out,
                "{:<14} {:<26} {:<5} {:<20} {:>10} {:>7.1}",
                t.app_name,
                t.activity_name,
                if t.detected { "yes" } else { "no" },
                t.crash_id.as_deref().unwrap_or("-"),
                t.attempts_used,
                t.elapsed_seconds / 60.0
            );
        }
        let a = &self.aggregates;
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>8} {:>11} {:>7}", "Bug(%)", "Attempt(#)", "Min(#)");
        let _ = writeln!(
            out,
            "{:>8.1} {:>11.1} {:>7.1}",
            a.bug_rate * 100.0,
            a.mean_attempts,
            a.mean_minutes
        );
        out
    }
}
