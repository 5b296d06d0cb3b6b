//! Deterministic prompt rendering.
//!
//! Wording lives in `templates.v1.txt`, a plain-text file with `[section]`
//! headers and `{placeholder}` slots, so prompts can be audited without
//! reading code.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::campaign::FeedbackBundle;
use crate::model::{ConstraintCatalogEntry, ConstraintCategory, WidgetContext};
use crate::store::ExampleRecord;

pub const DEFAULT_TEMPLATES: &str = include_str!("templates.v1.txt");
pub const DEFAULT_CHAR_BUDGET: usize = 12_000;
pub const DEFAULT_BATCH_SIZE: usize = 10;

const REQUIRED_SECTIONS: [&str; 16] = [
    "context_header",
    "context_widget",
    "context_clause",
    "hint_clause",
    "constraints",
    "valid_input_question",
    "examples_header",
    "example",
    "inferred_constraints",
    "valid_input",
    "feedback_header",
    "feedback_crash_header",
    "feedback_quiet_header",
    "feedback_item",
    "generator_question",
    "next_round",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("no widget contexts given")]
    EmptyContexts,
    #[error("widget contexts span several pages")]
    MixedPages,
    #[error("missing {0}")]
    MissingValidInput(&'static str),
    #[error("prompt needs {needed} characters but the budget is {budget}")]
    OverBudget { needed: usize, budget: usize },
    #[error("template file: {0}")]
    Template(String),
}

/// Named template sections.
#[derive(Debug, Clone)]
pub struct Templates {
    sections: HashMap<String, String>,
}

impl Templates {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut sections: HashMap<String, String> = HashMap::new();
        let mut current: Option<(String, Vec<&str>)> = None;
        let close = |cur: Option<(String, Vec<&str>)>, sections: &mut HashMap<String, String>| {
            if let Some((name, mut lines)) = cur {
                while lines.last().is_some_and(|l| l.trim().is_empty()) {
                    lines.pop();
                }
                sections.insert(name, lines.join("\n"));
            }
        };
        for line in text.lines() {
            let trimmed = line.trim_end();
            if let Some(name) = trimmed.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    close(current.take(), &mut sections);
                    current = Some((name.to_string(), Vec::new()));
                    continue;
                }
            }
            match current.as_mut() {
                Some((_, lines)) => lines.push(trimmed),
                None if trimmed.is_empty() || trimmed.starts_with('#') => {}
                None => return Err(PromptError::Template(format!("text outside a section: {trimmed:?}"))),
            }
        }
        close(current.take(), &mut sections);
        for name in REQUIRED_SECTIONS {
            if !sections.contains_key(name) {
                return Err(PromptError::Template(format!("missing section [{name}]")));
            }
        }
        Ok(Self { sections })
    }

    /// Fill a section. Substitution is single pass: placeholder-looking text
    /// inside values is left alone.
    fn fill(&self, section: &str, vars: &[(&str, &str)]) -> String {
        let template = &self.sections[section];
        let mut out = String::with_capacity(template.len());
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            match after.find('}').map(|close| (&after[..close], close)) {
                Some((key, close)) if vars.iter().any(|(k, _)| *k == key) => {
                    let value = vars.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or_default();
                    out.push_str(value);
                    rest = &after[close + 1..];
                }
                _ => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out
    }
}

impl Default for Templates {
    fn default() -> Self {
        Templates::parse(DEFAULT_TEMPLATES).expect("built-in templates are well formed")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidInputSections {
    pub context: String,
    pub candidate_constraints: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidInputPrompt {
    pub rendered: String,
    pub sections: ValidInputSections,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneratorSections {
    pub examples: String,
    pub inferred_constraints: String,
    pub valid_input: String,
    pub feedback: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorPrompt {
    pub rendered: String,
    pub sections: GeneratorSections,
    /// Examples that survived the character budget.
    pub examples_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuestionVariant {
    FirstRound,
    NextRound,
}

pub fn ordinal(n: usize) -> String {
    const WORDS: [&str; 10] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    ];
    match n {
        1..=10 => WORDS[n - 1].to_string(),
        _ => {
            let suffix = match (n % 10, n % 100) {
                (_, 11..=13) => "th",
                (1, _) => "st",
                (2, _) => "nd",
                (3, _) => "rd",
                _ => "th",
            };
            format!("{n}{suffix}")
        }
    }
}

/// Render an assignment as `id = "value"; ...` with JSON string escaping.
pub fn render_assignment(assignment: &BTreeMap<String, String>) -> String {
    assignment
        .iter()
        .map(|(k, v)| format!("{k} = {}", quote(v)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

#[derive(Debug, Clone)]
pub struct PromptEngine {
    templates: Templates,
    pub char_budget: usize,
    pub batch_size: usize,
}

impl Default for PromptEngine {
    fn default() -> Self {
        Self::new(Templates::default())
    }
}

impl PromptEngine {
    pub fn new(templates: Templates) -> Self {
        Self {
            templates,
            char_budget: DEFAULT_CHAR_BUDGET,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn with_budget(mut self, char_budget: usize) -> Self {
        self.char_budget = char_budget;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    fn check_budget(&self, rendered: &str) -> Result<(), PromptError> {
        let needed = rendered.chars().count();
        if needed > self.char_budget {
            return Err(PromptError::OverBudget {
                needed,
                budget: self.char_budget,
            });
        }
        Ok(())
    }

    fn context_section(&self, contexts: &[WidgetContext]) -> String {
        let first = &contexts[0];
        let count = contexts.len().to_string();
        let mut lines = vec![self.templates.fill(
            "context_header",
            &[
                ("page_name", &first.page_name),
                ("app_name", &first.app_name),
                ("widget_count", &count),
            ],
        )];
        for (i, ctx) in contexts.iter().enumerate() {
            let context_clause = if ctx.nearby_widgets.is_empty() {
                String::new()
            } else {
                self.templates.fill("context_clause", &[("nearby", &ctx.nearby_widgets)])
            };
            let hint_clause = if ctx.dynamic_hint.is_empty() {
                String::new()
            } else {
                self.templates.fill(
                    "hint_clause",
                    &[("hint", &ctx.dynamic_hint), ("provoking_input", &ctx.hint_provoking_input)],
                )
            };
            lines.push(self.templates.fill(
                "context_widget",
                &[
                    ("ordinal", &ordinal(i + 1)),
                    ("descriptor", &ctx.input_widget),
                    ("context_clause", &context_clause),
                    ("hint_clause", &hint_clause),
                ],
            ));
        }
        lines.join(" ")
    }

    fn constraints_section(&self, catalog: &[ConstraintCatalogEntry]) -> String {
        let list = |category| {
            let items: Vec<_> = catalog.iter().filter(|e| e.category == category).collect();
            let text = items
                .iter()
                .enumerate()
                .map(|(i, e)| format!("({}) {}", i + 1, e.description))
                .collect::<Vec<_>>()
                .join(" ");
            (items.len().to_string(), text)
        };
        let (ec, e) = list(ConstraintCategory::IntraExplicit);
        let (ic, i) = list(ConstraintCategory::IntraImplicit);
        let (nc, n) = list(ConstraintCategory::Inter);
        self.templates.fill(
            "constraints",
            &[
                ("explicit_count", &ec),
                ("explicit", &e),
                ("implicit_count", &ic),
                ("implicit", &i),
                ("inter_count", &nc),
                ("inter", &n),
            ],
        )
    }

    /// Prompt asking for a valid input of every widget on one page.
    pub fn build_valid_input_prompt(
        &self,
        contexts: &[WidgetContext],
        catalog: &[ConstraintCatalogEntry],
    ) -> Result<ValidInputPrompt, PromptError> {
        let first = contexts.first().ok_or(PromptError::EmptyContexts)?;
        if contexts
            .iter()
            .any(|c| c.app_name != first.app_name || c.page_name != first.page_name)
        {
            return Err(PromptError::MixedPages);
        }
        let sections = ValidInputSections {
            context: self.context_section(contexts),
            candidate_constraints: self.constraints_section(catalog),
            question: self.templates.fill("valid_input_question", &[]),
        };
        let rendered = format!(
            "{}\n{}\n{}",
            sections.context, sections.candidate_constraints, sections.question
        );
        self.check_budget(&rendered)?;
        Ok(ValidInputPrompt { rendered, sections })
    }

    fn examples_section(&self, examples: &[ExampleRecord]) -> String {
        if examples.is_empty() {
            return String::new();
        }
        let mut parts = vec![self.templates.fill("examples_header", &[])];
        for (i, ex) in examples.iter().enumerate() {
            let index = (i + 1).to_string();
            parts.push(self.templates.fill(
                "example",
                &[
                    ("index", &index),
                    ("app_name", &ex.context.app_name),
                    ("page_name", &ex.context.page_name),
                    ("input_widget", &ex.context.input_widget),
                    ("nearby", &ex.context.nearby_widgets),
                    ("mutation_rule", ex.mutation_rule.as_deref().unwrap_or("unknown")),
                    ("buggy_input", &ex.buggy_input),
                ],
            ));
        }
        parts.join("\n")
    }

    fn feedback_section(&self, feedback: &FeedbackBundle) -> String {
        if feedback.is_empty() {
            return String::new();
        }
        let mut parts = vec![self.templates.fill("feedback_header", &[])];
        let mut list = |header: &str, entries: &[crate::campaign::FeedbackEntry]| {
            if entries.is_empty() {
                return;
            }
            parts.push(self.templates.fill(header, &[]));
            for e in entries {
                parts.push(self.templates.fill(
                    "feedback_item",
                    &[
                        ("assignment", &render_assignment(&e.input.assignment)),
                        ("mutation_rule", &e.mutation_rule),
                    ],
                ));
            }
        };
        list("feedback_crash_header", &feedback.crash_inputs);
        list("feedback_quiet_header", &feedback.non_trigger_inputs);
        parts.join("\n")
    }

    fn assemble(&self, s: &GeneratorSections) -> String {
        [
            &s.examples,
            &s.inferred_constraints,
            &s.valid_input,
            &s.feedback,
            &s.question,
        ]
        .into_iter()
        .filter(|part| !part.is_empty())
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join("\n\n")
    }

    /// Prompt asking for a mutation rule and a test generator.
    ///
    /// When the rendering exceeds the character budget, examples are dropped
    /// from the end first, then feedback entries oldest first.
    pub fn build_generator_prompt(
        &self,
        inferred_constraints: &str,
        valid_input: &BTreeMap<String, String>,
        feedback: &FeedbackBundle,
        examples: &[ExampleRecord],
        variant: QuestionVariant,
    ) -> Result<GeneratorPrompt, PromptError> {
        if inferred_constraints.trim().is_empty() {
            return Err(PromptError::MissingValidInput("inferred constraints"));
        }
        if valid_input.is_empty() {
            return Err(PromptError::MissingValidInput("valid input"));
        }
        let batch = self.batch_size.to_string();
        let mut question = self.templates.fill("generator_question", &[("batch_size", &batch)]);
        if variant == QuestionVariant::NextRound {
            question.push('\n');
            question.push_str(&self.templates.fill("next_round", &[]));
        }
        let mut sections = GeneratorSections {
            examples: String::new(),
            inferred_constraints: self
                .templates
                .fill("inferred_constraints", &[("constraints", inferred_constraints.trim())]),
            valid_input: self
                .templates
                .fill("valid_input", &[("assignments", &render_assignment(valid_input))]),
            feedback: String::new(),
            question,
        };

        let mut kept_examples = examples.len();
        let mut feedback = feedback.clone();
        loop {
            sections.examples = self.examples_section(&examples[..kept_examples]);
            sections.feedback = self.feedback_section(&feedback);
            let rendered = self.assemble(&sections);
            if rendered.chars().count() <= self.char_budget {
                return Ok(GeneratorPrompt {
                    rendered,
                    sections,
                    examples_used: kept_examples,
                });
            }
            if kept_examples > 0 {
                kept_examples -= 1;
            } else if !feedback.drop_oldest() {
                return Err(PromptError::OverBudget {
                    needed: rendered.chars().count(),
                    budget: self.char_budget,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::FeedbackEntry;
    use crate::dsl::{Provenance, UnusualInput};
    use crate::model::default_catalog;
    use crate::store::RecordSource;

    fn ctx(descriptor: &str, nearby: &str) -> WidgetContext {
        WidgetContext {
            app_name: "Wallet".into(),
            page_name: "User".into(),
            input_widget: descriptor.into(),
            nearby_widgets: nearby.into(),
            ..Default::default()
        }
    }

    fn example(i: u64, rule: Option<&str>) -> ExampleRecord {
        ExampleRecord {
            record_id: i,
            context: ctx(&format!("field {i}"), "label"),
            mutation_rule: rule.map(str::to_string),
            buggy_input: format!("-{i}"),
            source: RecordSource::Seed,
        }
    }

    fn entry(value: &str, rule: &str) -> FeedbackEntry {
        FeedbackEntry {
            input: UnusualInput {
                assignment: BTreeMap::from([("w".to_string(), value.to_string())]),
                provenance: Provenance::default(),
            },
            mutation_rule: rule.into(),
        }
    }

    fn valid() -> BTreeMap<String, String> {
        BTreeMap::from([("w_user".to_string(), "john".to_string())])
    }

    #[test]
    fn valid_input_prompt_follows_context_pattern() {
        let contexts = vec![
            ctx("username", "Welcome to Wallet").with_dynamic_hint("Username already in use", "john"),
            ctx("password", ""),
            ctx("email", ""),
        ];
        let p = PromptEngine::default()
            .build_valid_input_prompt(&contexts, &default_catalog())
            .unwrap();
        assert!(p.rendered.starts_with(
            "We want to test the text input widgets on User page of Wallet app which has 3 text inputs."
        ));
        assert!(p.sections.context.contains(
            "The first input widget is 'username', its context is 'Welcome to Wallet', \
             and its dynamic hint is 'Username already in use'"
        ));
        assert!(p.sections.context.contains("The second input widget is 'password'."));
        assert_eq!(
            p.rendered,
            format!("{}\n{}\n{}", p.sections.context, p.sections.candidate_constraints, p.sections.question)
        );
        assert!(p.sections.question.starts_with(
            "Please generate a valid input based on the above information and provide the inferred constraints of each input."
        ));
    }

    #[test]
    fn single_widget_without_hint_has_no_hint_clause() {
        let p = PromptEngine::default()
            .build_valid_input_prompt(&[ctx("amount", "")], &default_catalog())
            .unwrap();
        assert!(p.sections.context.ends_with("The first input widget is 'amount'."));
        assert!(!p.sections.context.contains("dynamic hint"));
    }

    #[test]
    fn constraint_section_numbers_all_entries() {
        let p = PromptEngine::default()
            .build_valid_input_prompt(&[ctx("a", "")], &default_catalog())
            .unwrap();
        let text = &p.sections.candidate_constraints;
        assert!(text.starts_with("There are 5 explicit intra-constraints: (1) Pure text (without special characters)"));
        assert!(text.contains("; 5 implicit intra-constraints: (1) Limited string length"));
        assert!(text.contains("; 7 inter-constraints: (1) "));
        let numbered = text
            .match_indices('(')
            .filter(|(i, _)| {
                let rest = &text[i + 1..];
                let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
                !digits.is_empty() && rest[digits.len()..].starts_with(')')
            })
            .count();
        assert_eq!(numbered, 17);
    }

    #[test]
    fn valid_input_prompt_errors() {
        let engine = PromptEngine::default();
        assert_eq!(
            engine.build_valid_input_prompt(&[], &default_catalog()),
            Err(PromptError::EmptyContexts)
        );
        let mut other = ctx("b", "");
        other.page_name = "Other".into();
        assert_eq!(
            engine.build_valid_input_prompt(&[ctx("a", ""), other], &default_catalog()),
            Err(PromptError::MixedPages)
        );
    }

    #[test]
    fn generator_prompt_without_feedback() {
        let examples: Vec<_> = (1..=5).map(|i| example(i, None)).collect();
        let p = PromptEngine::default()
            .build_generator_prompt(
                "username is pure text",
                &valid(),
                &FeedbackBundle::default(),
                &examples,
                QuestionVariant::FirstRound,
            )
            .unwrap();
        assert!(p.sections.feedback.is_empty());
        assert_eq!(p.examples_used, 5);
        assert!(p.sections.examples.contains("Example 5:"));
        assert!(p.sections.examples.contains("Mutation rule: unknown"));
        assert!(!p.rendered.contains("different mutation rule"));
        let order: Vec<_> = [
            &p.sections.examples,
            &p.sections.inferred_constraints,
            &p.sections.valid_input,
            &p.sections.question,
        ]
        .iter()
        .map(|s| p.rendered.find(s.as_str()).unwrap())
        .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(p.sections.valid_input.contains(r#"w_user = "john""#));
        assert!(p.sections.question.contains("yields 10 unusual inputs"));
    }

    #[test]
    fn generator_prompt_with_feedback() {
        let feedback = FeedbackBundle {
            crash_inputs: vec![entry("-18", "negate the number")],
            non_trigger_inputs: vec![entry("18.5", "add decimals"), entry("", "empty it")],
        };
        let p = PromptEngine::default()
            .build_generator_prompt("digits", &valid(), &feedback, &[], QuestionVariant::NextRound)
            .unwrap();
        assert!(p.sections.feedback.contains("already triggered a crash, so do not repeat"));
        assert!(p.sections.feedback.contains(r#"- w = "-18" (mutation rule: negate the number)"#));
        assert!(p.sections.feedback.contains("did not trigger a crash"));
        assert!(p.sections.examples.is_empty());
        assert!(p.rendered.ends_with("Please produce a different mutation rule than those above."));
        let fb = p.rendered.find(&p.sections.feedback).unwrap();
        let q = p.rendered.find(&p.sections.question).unwrap();
        assert!(fb < q);
    }

    #[test]
    fn generator_prompt_requires_inputs() {
        let engine = PromptEngine::default();
        let fb = FeedbackBundle::default();
        assert!(matches!(
            engine.build_generator_prompt("c", &BTreeMap::new(), &fb, &[], QuestionVariant::FirstRound),
            Err(PromptError::MissingValidInput(_))
        ));
        assert!(matches!(
            engine.build_generator_prompt(" ", &valid(), &fb, &[], QuestionVariant::FirstRound),
            Err(PromptError::MissingValidInput(_))
        ));
    }

    #[test]
    fn budget_drops_examples_then_oldest_feedback() {
        let examples: Vec<_> = (1..=5).map(|i| example(i, Some("negate"))).collect();
        let feedback = FeedbackBundle {
            crash_inputs: vec![],
            non_trigger_inputs: vec![entry("oldest", "r1"), entry("newest", "r2")],
        };
        let engine = PromptEngine::default();
        let full = engine
            .build_generator_prompt("c", &valid(), &feedback, &examples, QuestionVariant::FirstRound)
            .unwrap();
        let full_len = full.rendered.chars().count();

        let tight = engine.clone().with_budget(full_len - 1);
        let p = tight
            .build_generator_prompt("c", &valid(), &feedback, &examples, QuestionVariant::FirstRound)
            .unwrap();
        assert_eq!(p.examples_used, 4);
        assert!(p.sections.examples.contains("Example 4:"));
        assert!(!p.sections.examples.contains("Example 5:"));

        let no_examples = engine
            .build_generator_prompt("c", &valid(), &feedback, &[], QuestionVariant::FirstRound)
            .unwrap();
        let tighter = engine.clone().with_budget(no_examples.rendered.chars().count() - 1);
        let p = tighter
            .build_generator_prompt("c", &valid(), &feedback, &examples, QuestionVariant::FirstRound)
            .unwrap();
        assert_eq!(p.examples_used, 0);
        assert!(!p.sections.feedback.contains("oldest"));
        assert!(p.sections.feedback.contains("newest"));
        assert!(p.rendered.chars().count() <= tighter.char_budget);

        let impossible = engine.with_budget(10);
        assert!(matches!(
            impossible.build_generator_prompt("c", &valid(), &feedback, &examples, QuestionVariant::FirstRound),
            Err(PromptError::OverBudget { .. })
        ));
    }

    #[test]
    fn rendering_is_deterministic() {
        let engine = PromptEngine::default();
        let examples: Vec<_> = (1..=3).map(|i| example(i, Some("r"))).collect();
        let a = engine
            .build_generator_prompt("c", &valid(), &FeedbackBundle::default(), &examples, QuestionVariant::FirstRound)
            .unwrap();
        let b = engine
            .build_generator_prompt("c", &valid(), &FeedbackBundle::default(), &examples, QuestionVariant::FirstRound)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn placeholders_in_values_are_not_expanded() {
        let p = PromptEngine::default()
            .build_valid_input_prompt(&[ctx("{app_name}", "{0}")], &default_catalog())
            .unwrap();
        assert!(p.sections.context.contains("'{app_name}', its context is '{0}'"));
    }

    #[test]
    fn template_file_errors() {
        assert!(matches!(Templates::parse("[context_header]\nx\n"), Err(PromptError::Template(_))));
        assert!(matches!(Templates::parse("stray\n"), Err(PromptError::Template(_))));
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal(1), "first");
        assert_eq!(ordinal(10), "tenth");
        assert_eq!(ordinal(11), "11th");
        assert_eq!(ordinal(22), "22nd");
        assert_eq!(ordinal(103), "103rd");
    }
}
