use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::CampaignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Wall,
    /// Each submission and LLM call advances time by a fixed cost.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Unusual-input submissions allowed per target.
    pub attempt_budget: usize,
    pub time_budget_seconds: u64,
    pub k_examples: usize,
    pub batch_size: usize,
    pub valid_input_retry_cap: usize,
    pub feedback_window: usize,
    /// LLM calls allowed per target.
    pub llm_call_cap: usize,
    pub clock: ClockMode,
    pub simulated_submit_seconds: f64,
    pub simulated_llm_seconds: f64,
    pub temperature: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            attempt_budget: 30,
            time_budget_seconds: 1800,
            k_examples: 5,
            batch_size: 10,
            valid_input_retry_cap: 5,
            feedback_window: 10,
            llm_call_cap: 60,
            clock: ClockMode::Wall,
            simulated_submit_seconds: 3.0,
            simulated_llm_seconds: 8.0,
            temperature: 0.7,
        }
    }
}

impl CampaignConfig {
    pub fn simulated() -> Self {
        Self {
            clock: ClockMode::Simulated,
            temperature: 0.0,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A zero attempt budget is allowed and yields an immediate stop.
    pub fn validate(&self) -> Result<(), CampaignError> {
        let positive = [
            ("time_budget_seconds", self.time_budget_seconds as usize),
            ("batch_size", self.batch_size),
            ("valid_input_retry_cap", self.valid_input_retry_cap),
            ("feedback_window", self.feedback_window),
            ("llm_call_cap", self.llm_call_cap),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(CampaignError::Config(format!("{name} must be positive")));
        }
        for (name, v) in [
            ("simulated_submit_seconds", self.simulated_submit_seconds),
            ("simulated_llm_seconds", self.simulated_llm_seconds),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(CampaignError::Config(format!("{name} must be a non-negative number")));
            }
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(CampaignError::Config("temperature must be in [0, 2]".into()));
        }
        Ok(())
    }
}

/// Elapsed time of one target.
#[derive(Debug, Clone)]
pub enum CampaignClock {
    Wall(Instant),
    Simulated { elapsed: f64, submit: f64, llm: f64 },
}

impl CampaignClock {
    pub fn start(cfg: &CampaignConfig) -> Self {
        match cfg.clock {
            ClockMode::Wall => CampaignClock::Wall(Instant::now()),
            ClockMode::Simulated => CampaignClock::Simulated {
                elapsed: 0.0,
                submit: cfg.simulated_submit_seconds,
                llm: cfg.simulated_llm_seconds,
            },
        }
    }

    pub fn elapsed_seconds(&self) -> f64 {
        match self {
            CampaignClock::Wall(start) => start.elapsed().as_secs_f64(),
            CampaignClock::Simulated { elapsed, .. } => *elapsed,
        }
    }

    pub fn on_submit(&mut self) {
        if let CampaignClock::Simulated { elapsed, submit, .. } = self {
            *elapsed += *submit;
        }
    }

    pub fn on_llm_call(&mut self) {
        if let CampaignClock::Simulated { elapsed, llm, .. } = self {
            *elapsed += *llm;
        }
    }
}
