//! Simulated app under test: renders pages as view hierarchies, validates
//! submissions, surfaces hints on rejection and fires crash predicates.

mod condition;
mod spec;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Bounds, GuiPage, ViewNode};

pub use condition::{CmpOp, Condition, Operand, ParseKind};
pub use spec::{AppSpec, ConstraintRule, CrashPredicate, PageSpec, RequiredClass, RuleKind, Visibility, WidgetSpec};

pub const CRASH_ACTIVITY: &str = "CrashState";
pub const CRASH_TEXT: &str = "app has stopped";
pub const FINISHED_ACTIVITY: &str = "Finished";

const SCREEN_W: i32 = 1080;
const SCREEN_H: i32 = 1920;
const LABEL_H: i32 = 40;
const TOP: i32 = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid app spec: {0}")]
    InvalidSpec(String),
    #[error("unknown widget `{0}`")]
    UnknownWidget(String),
    #[error("the app has crashed; reset it first")]
    AppCrashed,
    #[error("no input page is showing")]
    NoInputPage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubmissionOutcome {
    PageTransition { next_activity: Option<String> },
    Rejected { after_page: GuiPage, rule_index: usize, hint_text: String },
    Crash { crash_id: String, message: String },
}

impl SubmissionOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            SubmissionOutcome::PageTransition { .. } => "transition",
            SubmissionOutcome::Rejected { .. } => "rejected",
            SubmissionOutcome::Crash { .. } => "crash",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubmissionLog {
    pub activity: String,
    pub assignment: BTreeMap<String, String>,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Page(usize),
    Finished,
    Crashed,
}

#[derive(Debug, Clone)]
pub struct AppSimulator {
    spec: AppSpec,
    state: State,
    /// Index of the rule whose hint is showing.
    hint: Option<usize>,
    log: Vec<SubmissionLog>,
}

impl AppSimulator {
    pub fn new(spec: AppSpec) -> Result<Self, SimError> {
        spec.validate()?;
        Ok(Self {
            spec,
            state: State::Page(0),
            hint: None,
            log: Vec::new(),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::InvalidSpec(format!("{}: {e}", path.display())))?;
        Self::new(AppSpec::from_json(&text)?)
    }

    pub fn spec(&self) -> &AppSpec {
        &self.spec
    }

    /// Every submission so far, across resets.
    pub fn log(&self) -> &[SubmissionLog] {
        &self.log
    }

    pub fn current_page_spec(&self) -> Option<&PageSpec> {
        match self.state {
            State::Page(i) => Some(&self.spec.pages[i]),
            _ => None,
        }
    }

    /// Back to the first page with no hint showing. The log is kept.
    pub fn reset(&mut self) {
        self.state = State::Page(0);
        self.hint = None;
    }

    pub fn observe(&self) -> GuiPage {
        match self.state {
            State::Page(i) => render_page(&self.spec.app_name, &self.spec.pages[i], self.hint),
            State::Finished => sentinel(&self.spec.app_name, FINISHED_ACTIVITY, "done"),
            State::Crashed => sentinel(&self.spec.app_name, CRASH_ACTIVITY, CRASH_TEXT),
        }
    }

    pub fn submit(&mut self, assignment: &BTreeMap<String, String>) -> Result<SubmissionOutcome, SimError> {
        let index = match self.state {
            State::Page(i) => i,
            State::Crashed => return Err(SimError::AppCrashed),
            State::Finished => return Err(SimError::NoInputPage),
        };
        let page = &self.spec.pages[index];
        if let Some(unknown) = assignment.keys().find(|k| !page.widgets.iter().any(|w| &w.id == *k)) {
            return Err(SimError::UnknownWidget(unknown.clone()));
        }
        let full: BTreeMap<String, String> = page
            .widgets
            .iter()
            .map(|w| (w.id.clone(), assignment.get(&w.id).cloned().unwrap_or_default()))
            .collect();
        self.hint = None;

        let outcome = if let Some(crash) = page.crashes.iter().find(|c| c.condition.eval(&full)) {
            self.state = State::Crashed;
            SubmissionOutcome::Crash {
                crash_id: crash.crash_id.clone(),
                message: crash.message.clone(),
            }
        } else if let Some((i, rule)) = page
            .rules
            .iter()
            .enumerate()
            .find(|(_, r)| !r.check.holds(&r.widget, &full))
        {
            self.hint = Some(i);
            SubmissionOutcome::Rejected {
                after_page: self.observe(),
                rule_index: i,
                hint_text: rule.hint_text.clone(),
            }
        } else {
            let next = page.success_transition.clone();
            self.state = match &next {
                Some(name) => State::Page(
                    self.spec
                        .pages
                        .iter()
                        .position(|p| &p.activity_name == name)
                        .expect("transition target validated"),
                ),
                None => State::Finished,
            };
            SubmissionOutcome::PageTransition { next_activity: next }
        };

        self.log.push(SubmissionLog {
            activity: page.activity_name.clone(),
            assignment: full,
            outcome: outcome.kind().to_string(),
            detail: match &outcome {
                SubmissionOutcome::Crash { crash_id, .. } => Some(crash_id.clone()),
                SubmissionOutcome::Rejected { hint_text, .. } => Some(hint_text.clone()),
                SubmissionOutcome::PageTransition { next_activity } => next_activity.clone(),
            },
        });
        Ok(outcome)
    }
}

fn sentinel(app: &str, activity: &str, text: &str) -> GuiPage {
    let root = ViewNode::new("android.widget.TextView", Bounds::new(0, 0, SCREEN_W, SCREEN_H)).with_text(text);
    GuiPage::new(app, activity, root)
}

fn text_view(bounds: Bounds, text: &str) -> ViewNode {
    ViewNode::new("android.widget.TextView", bounds).with_text(text)
}

/// Lay out one row per widget: a label column, the text field, and a slot
/// under the field where a rejection hint appears.
fn render_page(app: &str, page: &PageSpec, hint: Option<usize>) -> GuiPage {
    let mut rows = Vec::with_capacity(page.widgets.len());
    let mut top = TOP;
    for w in &page.widgets {
        let mut labels: Vec<&str> = w.neighbors.iter().map(String::as_str).collect();
        labels.extend(
            page.rules
                .iter()
                .filter(|r| r.widget == w.id && r.visibility == Visibility::Explicit)
                .map(|r| r.hint_text.as_str()),
        );
        let height = (LABEL_H * labels.len() as i32).max(160) + LABEL_H;
        let label_nodes: Vec<ViewNode> = labels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let y = top + LABEL_H * k as i32;
                text_view(Bounds::new(0, y, 400, y + LABEL_H), l)
            })
            .collect();
        let column = ViewNode::new("android.widget.LinearLayout", Bounds::new(0, top, 400, top + height))
            .with_children(label_nodes);
        let field = ViewNode::new("android.widget.EditText", Bounds::new(420, top + 20, 1060, top + 120))
            .with_id(w.id.clone())
            .with_hint(w.descriptor.clone());
        let mut children = vec![column, field];
        if let Some(i) = hint.filter(|i| page.rules[*i].widget == w.id) {
            let slot = Bounds::new(420, top + height - LABEL_H, 1060, top + height);
            children.push(text_view(slot, &page.rules[i].hint_text).with_id(format!("hint_{i}")));
        }
        rows.push(
            ViewNode::new("android.widget.LinearLayout", Bounds::new(0, top, SCREEN_W, top + height))
                .with_children(children),
        );
        top += height + 20;
    }
    let submit_top = top.min(SCREEN_H - 120);
    rows.push(
        ViewNode::new("android.widget.Button", Bounds::new(0, submit_top, SCREEN_W, submit_top + 120))
            .with_id("submit")
            .with_text("Submit"),
    );
    let bottom = SCREEN_H.max(submit_top + 120);
    let root = ViewNode::new("android.widget.FrameLayout", Bounds::new(0, 0, SCREEN_W, bottom)).with_children(rows);
    GuiPage::new(app, page.activity_name.clone(), root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{diff_pages, extract_widget_context, identify_input_widgets, parse_hierarchy, write_hierarchy};

    fn spec(json: &str) -> AppSpec {
        AppSpec::from_json(json).unwrap()
    }

    fn asg(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    const FONT: &str = r#"{"app_name":"FontSizer","pages":[
        {"activity_name":"SettingsActivity",
         "widgets":[{"id":"w_size","descriptor":"font size","neighbors":["Font size","Preview"]}],
         "rules":[{"widget":"w_size","check":"must_parse_int_placeholder","hint_text":"x","visibility":"explicit"}],
         "crashes":[{"crash_id":"negative_font","condition":["<",["num","w_size"],0],"message":"negative font size"}],
         "success_transition":"PreviewActivity"},
        {"activity_name":"PreviewActivity","widgets":[{"id":"w_note","descriptor":"note"}]}]}"#;

    fn font() -> AppSpec {
        spec(&FONT.replace(
            r#""check":"must_parse_int_placeholder","hint_text":"x""#,
            r#""check":{"kind":"must_parse_int"},"hint_text":"Enter a whole number""#,
        ))
    }

    const PASSWORD: &str = r#"{"app_name":"Wallet","pages":[{"activity_name":"RegisterActivity",
        "widgets":[{"id":"w_user","descriptor":"Username"},{"id":"w_pass","descriptor":"Password"}],
        "rules":[
          {"widget":"w_pass","check":{"kind":"requires_class","class":"upper"},
           "hint_text":"at least one upper case character (A-Z) is required","visibility":"implicit"},
          {"widget":"w_user","check":{"kind":"unique_in","values":["admin"]},
           "hint_text":"Username already in use","visibility":"implicit"}]}]}"#;

    const PRESSURE: &str = r#"{"app_name":"HealthLog","pages":[{"activity_name":"BloodPressureActivity",
        "widgets":[{"id":"dia","descriptor":"diastolic"},{"id":"sys","descriptor":"systolic"}],
        "rules":[{"widget":"dia","check":{"kind":"less_than","other":"sys"},
           "hint_text":"diastolic pressure should be less than systolic pressure","visibility":"implicit"}],
        "crashes":[{"crash_id":"equal_pressure","condition":["==",["num","dia"],["num","sys"]]}]}]}"#;

    #[test]
    fn negative_font_size_crashes() {
        let mut sim = AppSimulator::new(font()).unwrap();
        let out = sim.submit(&asg(&[("w_size", "-18")])).unwrap();
        assert_eq!(
            out,
            SubmissionOutcome::Crash {
                crash_id: "negative_font".into(),
                message: "negative font size".into()
            }
        );
        let page = sim.observe();
        assert_eq!(page.activity_name, CRASH_ACTIVITY);
        assert_eq!(page.root.text, CRASH_TEXT);
        assert!(page.root.children.is_empty());
        assert_eq!(sim.submit(&asg(&[])), Err(SimError::AppCrashed));
        sim.reset();
        assert_eq!(sim.observe(), AppSimulator::new(font()).unwrap().observe());
        assert_eq!(sim.log().len(), 1);
    }

    #[test]
    fn password_hint_is_recovered_by_diff() {
        let mut sim = AppSimulator::new(spec(PASSWORD)).unwrap();
        let before = sim.observe();
        let out = sim.submit(&asg(&[("w_user", "bob"), ("w_pass", "abc123")])).unwrap();
        let SubmissionOutcome::Rejected { after_page, rule_index, hint_text } = out else {
            panic!("{out:?}")
        };
        assert_eq!(rule_index, 0);
        assert_eq!(hint_text, "at least one upper case character (A-Z) is required");
        let d = diff_pages(&before, &after_page, "abc123").unwrap();
        assert_eq!(d.hint, hint_text);
        assert_eq!(d.node_paths.len(), 1);
        assert_eq!(sim.observe(), after_page);
        let out = sim.submit(&asg(&[("w_user", "admin"), ("w_pass", "Abc123")])).unwrap();
        assert!(matches!(out, SubmissionOutcome::Rejected { rule_index: 1, .. }));
        assert_eq!(diff_pages(&before, &sim.observe(), "admin").unwrap().hint, "Username already in use");
    }

    #[test]
    fn blood_pressure_transitions_and_crash_wins() {
        let mut sim = AppSimulator::new(spec(PRESSURE)).unwrap();
        let out = sim.submit(&asg(&[("dia", "80"), ("sys", "120")])).unwrap();
        assert_eq!(out, SubmissionOutcome::PageTransition { next_activity: None });
        assert_eq!(sim.observe().activity_name, FINISHED_ACTIVITY);
        assert_eq!(sim.submit(&asg(&[])), Err(SimError::NoInputPage));
        sim.reset();
        // Equal values violate less_than too; the crash takes precedence.
        let out = sim.submit(&asg(&[("dia", "120"), ("sys", "120")])).unwrap();
        assert_eq!(out.kind(), "crash");
    }

    #[test]
    fn transition_reset_walk() {
        let mut sim = AppSimulator::new(font()).unwrap();
        let initial = sim.observe();
        let out = sim.submit(&asg(&[("w_size", "18")])).unwrap();
        assert_eq!(out, SubmissionOutcome::PageTransition { next_activity: Some("PreviewActivity".into()) });
        assert_eq!(sim.observe().activity_name, "PreviewActivity");
        sim.reset();
        sim.reset();
        assert_eq!(sim.observe(), initial);
    }

    #[test]
    fn unknown_widgets_and_defaults() {
        let mut sim = AppSimulator::new(font()).unwrap();
        assert_eq!(sim.submit(&asg(&[("nope", "1")])), Err(SimError::UnknownWidget("nope".into())));
        let out = sim.submit(&asg(&[])).unwrap();
        assert!(matches!(out, SubmissionOutcome::Rejected { .. }));
        assert_eq!(sim.log()[0].assignment["w_size"], "");
    }

    #[test]
    fn rendered_page_round_trips_and_exposes_context() {
        let sim = AppSimulator::new(font()).unwrap();
        let page = sim.observe();
        assert_eq!(parse_hierarchy(&write_hierarchy(&page)).unwrap(), page);
        let widgets = identify_input_widgets(&page);
        assert_eq!(widgets.len(), 1);
        assert_eq!(widgets[0].local_key(), "w_size");
        let ctx = extract_widget_context(&page, &widgets[0]).unwrap();
        assert_eq!(ctx.input_widget, "font size");
        assert_eq!(ctx.nearby_widgets, "Font size;Preview;Enter a whole number");
    }

    #[test]
    fn hints_clear_on_next_submission() {
        let mut sim = AppSimulator::new(spec(PASSWORD)).unwrap();
        let fresh = sim.observe();
        sim.submit(&asg(&[("w_user", "bob"), ("w_pass", "abc")])).unwrap();
        assert_ne!(sim.observe(), fresh);
        sim.submit(&asg(&[("w_user", "bob"), ("w_pass", "Abc")])).unwrap();
        assert_eq!(sim.observe().activity_name, FINISHED_ACTIVITY);
    }
}
