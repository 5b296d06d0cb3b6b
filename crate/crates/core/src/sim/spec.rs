//! Declarative app description: pages, widgets, validation rules, crash
//! predicates.

use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::condition::Condition;
use super::SimError;
use crate::dsl::parse_decimal;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppSpec {
    pub app_name: String,
    pub pages: Vec<PageSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    pub activity_name: String,
    pub widgets: Vec<WidgetSpec>,
    #[serde(default)]
    pub rules: Vec<ConstraintRule>,
    #[serde(default)]
    pub crashes: Vec<CrashPredicate>,
    /// Next activity on a successful submit; `None` ends the flow.
    #[serde(default)]
    pub success_transition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidgetSpec {
    pub id: String,
    pub descriptor: String,
    #[serde(default)]
    pub neighbors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequiredClass {
    Upper,
    Digit,
    Special,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleKind {
    MustParseInt,
    MustParseDecimal,
    PureText,
    PureDigits,
    MinValue { value: f64 },
    MaxValue { value: f64 },
    MinLen { n: usize },
    MaxLen { n: usize },
    RequiresClass { class: RequiredClass },
    ForbidsChars { chars: String },
    UniqueIn { values: Vec<String> },
    LessThan { other: String },
    /// The subject widget holds the total of `widgets`.
    SumEquals { widgets: Vec<String> },
    DateBefore { other: String },
    Equals { other: String },
    NonEqual { other: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRule {
    pub widget: String,
    pub check: RuleKind,
    pub hint_text: String,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashPredicate {
    pub crash_id: String,
    pub condition: Condition,
    #[serde(default)]
    pub message: String,
}

pub(crate) fn value<'a>(assignment: &'a BTreeMap<String, String>, widget: &str) -> &'a str {
    assignment.get(widget).map_or("", String::as_str)
}

fn num(assignment: &BTreeMap<String, String>, widget: &str) -> Option<f64> {
    parse_decimal(value(assignment, widget))
}

fn date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

impl RuleKind {
    /// Widgets other than the subject that the rule reads.
    pub fn references(&self) -> Vec<&str> {
        match self {
            RuleKind::LessThan { other }
            | RuleKind::DateBefore { other }
            | RuleKind::Equals { other }
            | RuleKind::NonEqual { other } => vec![other.as_str()],
            RuleKind::SumEquals { widgets } => widgets.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }

    /// Whether the subject's value satisfies the rule under `assignment`.
    pub fn holds(&self, subject: &str, assignment: &BTreeMap<String, String>) -> bool {
        let v = value(assignment, subject);
        let n = || parse_decimal(v);
        match self {
            RuleKind::MustParseInt => v.trim().parse::<i64>().is_ok(),
            RuleKind::MustParseDecimal => n().is_some(),
            RuleKind::PureText => !v.is_empty() && v.chars().all(|c| c.is_alphanumeric() || c == ' '),
            RuleKind::PureDigits => !v.is_empty() && v.bytes().all(|b| b.is_ascii_digit()),
            RuleKind::MinValue { value } => n().is_some_and(|x| x >= *value),
            RuleKind::MaxValue { value } => n().is_some_and(|x| x <= *value),
            RuleKind::MinLen { n } => v.chars().count() >= *n,
            RuleKind::MaxLen { n } => v.chars().count() <= *n,
            RuleKind::RequiresClass { class } => match class {
                RequiredClass::Upper => v.chars().any(char::is_uppercase),
                RequiredClass::Digit => v.chars().any(|c| c.is_ascii_digit()),
                RequiredClass::Special => v.chars().any(|c| !c.is_alphanumeric() && !c.is_whitespace()),
            },
            RuleKind::ForbidsChars { chars } => !v.chars().any(|c| chars.contains(c)),
            RuleKind::UniqueIn { values } => !values.iter().any(|taken| taken == v),
            RuleKind::LessThan { other } => match (n(), num(assignment, other)) {
                (Some(a), Some(b)) => a < b,
                _ => false,
            },
            RuleKind::SumEquals { widgets } => {
                let parts: Option<Vec<f64>> = widgets.iter().map(|w| num(assignment, w)).collect();
                match (n(), parts) {
                    (Some(total), Some(parts)) => (parts.iter().sum::<f64>() - total).abs() <= 1e-9 * total.abs().max(1.0),
                    _ => false,
                }
            }
            RuleKind::DateBefore { other } => match (date(v), date(value(assignment, other))) {
                (Some(a), Some(b)) => a < b,
                _ => false,
            },
            RuleKind::Equals { other } => v == value(assignment, other),
            RuleKind::NonEqual { other } => v != value(assignment, other),
        }
    }
}

impl AppSpec {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let spec: AppSpec = serde_json::from_str(text).map_err(|e| SimError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidSpec(format!("{}: {msg}", self.app_name)));
        if self.app_name.trim().is_empty() {
            return Err(SimError::InvalidSpec("app_name is empty".into()));
        }
        if self.pages.is_empty() {
            return bad("no pages".into());
        }
        let activities: HashSet<&str> = self.pages.iter().map(|p| p.activity_name.as_str()).collect();
        if activities.len() != self.pages.len() {
            return bad("duplicate activity names".into());
        }
        for page in &self.pages {
            let act = &page.activity_name;
            if act.trim().is_empty() {
                return bad("empty activity name".into());
            }
            if page.widgets.is_empty() {
                return bad(format!("{act} has no widgets"));
            }
            let mut ids = HashSet::new();
            for w in &page.widgets {
                if !crate::dsl::is_widget_id(&w.id) || w.id.contains('/') {
                    return bad(format!("{act}: bad widget id {:?}", w.id));
                }
                if !ids.insert(w.id.as_str()) {
                    return bad(format!("{act}: duplicate widget id {}", w.id));
                }
            }
            for (i, rule) in page.rules.iter().enumerate() {
                if rule.hint_text.trim().is_empty() {
                    return bad(format!("{act}: rule {i} has no hint text"));
                }
                for w in std::iter::once(rule.widget.as_str()).chain(rule.check.references()) {
                    if !ids.contains(w) {
                        return bad(format!("{act}: rule {i} references unknown widget {w}"));
                    }
                }
            }
            for crash in &page.crashes {
                for w in crash.condition.widgets() {
                    if !ids.contains(w) {
                        return bad(format!("{act}: crash {} references unknown widget {w}", crash.crash_id));
                    }
                }
            }
            if let Some(next) = &page.success_transition {
                if !activities.contains(next.as_str()) {
                    return bad(format!("{act}: transition to unknown activity {next}"));
                }
            }
        }
        Ok(())
    }
}
