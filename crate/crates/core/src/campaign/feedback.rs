use serde::Serialize;

use crate::dsl::UnusualInput;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeedbackEntry {
    pub input: UnusualInput,
    pub mutation_rule: String,
}

/// Execution feedback shown to the generator prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FeedbackBundle {
    pub crash_inputs: Vec<FeedbackEntry>,
    pub non_trigger_inputs: Vec<FeedbackEntry>,
}

impl FeedbackBundle {
    /// All crash inputs plus the `window` most recent non-triggering ones.
    pub fn from_history(crashes: &[FeedbackEntry], quiet: &[FeedbackEntry], window: usize) -> Self {
        Self {
            crash_inputs: crashes.to_vec(),
            non_trigger_inputs: quiet[quiet.len().saturating_sub(window)..].to_vec(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.crash_inputs.is_empty() && self.non_trigger_inputs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.crash_inputs.len() + self.non_trigger_inputs.len()
    }

    /// Drop the oldest non-triggering entry, or the oldest crash entry once
    /// those are gone. False when nothing is left.
    pub fn drop_oldest(&mut self) -> bool {
        if !self.non_trigger_inputs.is_empty() {
            self.non_trigger_inputs.remove(0);
            true
        } else if !self.crash_inputs.is_empty() {
            self.crash_inputs.remove(0);
            true
        } else {
            false
        }
    }
}
