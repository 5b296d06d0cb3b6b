//! The testing loop for one input page: obtain a valid input, ask for
//! mutation rules and generators, run the generated inputs, feed results
//! back, and stop on the first crash or when a budget runs out.

mod config;
mod feedback;
mod report;

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::dsl::{execute_program, parse_program, UnusualInput};
use crate::hierarchy::{diff_pages, extract_widget_context, identify_input_widgets, HierarchyError};
use crate::llm::{CappedProvider, CompletionRequest, LlmError, LlmProvider, ResponseMarkers};
use crate::model::{default_catalog, ConstraintCatalogEntry, GuiPage, InputWidget, WidgetContext};
use crate::prompt::{render_assignment, PromptEngine, PromptError, QuestionVariant};
use crate::sim::{AppSimulator, AppSpec, SimError, SubmissionOutcome};
use crate::store::{ExampleStore, StoreError};

pub use config::{CampaignClock, CampaignConfig, ClockMode};
pub use feedback::{FeedbackBundle, FeedbackEntry};
pub use report::{Aggregates, AttemptRecord, CampaignReport, RoundLog, TargetReport, ValidInputTry};

/// Re-queries allowed when a response cannot be parsed.
pub const PARSE_RETRIES: usize = 3;
/// Consecutive generator responses yielding nothing new before giving up.
pub const MAX_UNUSABLE_ROUNDS: usize = 3;

const NO_CONSTRAINTS: &str = "no constraints were stated";

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no valid input after {0} tries")]
    ValidInputUnobtainable(usize),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("unparseable responses: {0}")]
    ParseMiss(String),
    #[error("{0}")]
    Provider(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Storage(#[from] StoreError),
    #[error(transparent)]
    Simulator(#[from] SimError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

impl CampaignError {
    /// Errors that end the whole suite instead of one target.
    pub fn is_fatal(&self) -> bool {
        matches!(self, CampaignError::Config(_) | CampaignError::Provider(_) | CampaignError::Storage(_))
    }
}

impl From<LlmError> for CampaignError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::BudgetExhausted(n) => CampaignError::BudgetExhausted(format!("LLM call cap of {n} reached")),
            LlmError::ParseMiss(m) => CampaignError::ParseMiss(m),
            LlmError::ProviderUnavailable(_) => CampaignError::Provider(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidInput {
    pub assignment: BTreeMap<String, String>,
    pub inferred_constraints: String,
    /// Widget contexts, including any dynamic hints collected on the way.
    pub contexts: Vec<WidgetContext>,
}

/// Per-target budget bookkeeping.
struct TargetRun<'a> {
    llm: CappedProvider<&'a dyn LlmProvider>,
    clock: CampaignClock,
    temperature: f64,
    time_budget: f64,
}

impl TargetRun<'_> {
    fn call(&mut self, prompt: &str, tag: &str) -> Result<String, CampaignError> {
        self.clock.on_llm_call();
        let req = CompletionRequest::new(prompt, tag).with_temperature(self.temperature);
        Ok(self.llm.complete(&req)?)
    }

    fn out_of_time(&self) -> bool {
        self.clock.elapsed_seconds() >= self.time_budget
    }
}

/// The stored example for a crashing assignment: the changed widget's
/// context and value when one widget changed, else the page context and the
/// changed widgets rendered together.
pub fn crash_example(
    valid: &BTreeMap<String, String>,
    submitted: &BTreeMap<String, String>,
    keys: &[String],
    contexts: &[WidgetContext],
) -> (WidgetContext, String) {
    let changed: BTreeMap<String, String> = submitted
        .iter()
        .filter(|(k, v)| valid.get(*k) != Some(*v))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if changed.len() == 1 {
        let (key, value) = changed.iter().next().expect("one entry");
        if let Some(i) = keys.iter().position(|k| k == key) {
            if !value.is_empty() {
                return (contexts[i].clone(), value.clone());
            }
        }
    }
    (page_query(contexts), render_assignment(&changed))
}

/// One retrieval query for the whole page.
pub fn page_query(contexts: &[WidgetContext]) -> WidgetContext {
    if let [only] = contexts {
        return only.clone();
    }
    let join = |f: fn(&WidgetContext) -> &str| {
        contexts
            .iter()
            .map(f)
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("; ")
    };
    WidgetContext {
        app_name: contexts.first().map(|c| c.app_name.clone()).unwrap_or_default(),
        page_name: contexts.first().map(|c| c.page_name.clone()).unwrap_or_default(),
        input_widget: join(|c| &c.input_widget),
        nearby_widgets: join(|c| &c.nearby_widgets),
        dynamic_hint: join(|c| &c.dynamic_hint),
        hint_provoking_input: String::new(),
    }
}

pub struct Campaign<'a> {
    pub config: CampaignConfig,
    pub engine: PromptEngine,
    pub catalog: Vec<ConstraintCatalogEntry>,
    pub markers: ResponseMarkers,
    llm: &'a dyn LlmProvider,
}

impl<'a> Campaign<'a> {
    pub fn new(config: CampaignConfig, llm: &'a dyn LlmProvider) -> Result<Self, CampaignError> {
        config.validate()?;
        let engine = PromptEngine::default().with_batch_size(config.batch_size);
        Ok(Self {
            config,
            engine,
            catalog: default_catalog(),
            markers: ResponseMarkers::default(),
            llm,
        })
    }

    fn start(&self) -> TargetRun<'a> {
        TargetRun {
            llm: CappedProvider::new(self.llm, self.config.llm_call_cap),
            clock: CampaignClock::start(&self.config),
            temperature: self.config.temperature,
            time_budget: self.config.time_budget_seconds as f64,
        }
    }

    /// Obtain an input the page accepts, leaving the simulator reset.
    pub fn acquire_valid_input(
        &self,
        sim: &mut AppSimulator,
        page: &GuiPage,
        widgets: &[InputWidget],
    ) -> (Result<ValidInput, CampaignError>, Vec<ValidInputTry>) {
        let mut run = self.start();
        let mut tries = Vec::new();
        let result = self.acquire(&mut run, sim, page, widgets, &mut tries);
        (result, tries)
    }

    fn acquire(
        &self,
        run: &mut TargetRun<'_>,
        sim: &mut AppSimulator,
        page: &GuiPage,
        widgets: &[InputWidget],
        tries: &mut Vec<ValidInputTry>,
    ) -> Result<ValidInput, CampaignError> {
        let keys: Vec<String> = widgets.iter().map(|w| w.local_key().to_string()).collect();
        let mut contexts = widgets
            .iter()
            .map(|w| extract_widget_context(page, w))
            .collect::<Result<Vec<_>, _>>()?;
        let tag = format!("{}/{}:valid", page.app_name, page.activity_name);

        for _ in 0..self.config.valid_input_retry_cap {
            if run.out_of_time() {
                return Err(CampaignError::BudgetExhausted("time budget".into()));
            }
            let prompt = self.engine.build_valid_input_prompt(&contexts, &self.catalog)?;
            let mut parsed = None;
            let mut last_miss = String::new();
            for _ in 0..PARSE_RETRIES {
                let raw = run.call(&prompt.rendered, &tag)?;
                match self.markers.parse_valid_input(&raw, &keys) {
                    Ok(p) => {
                        parsed = Some(p);
                        break;
                    }
                    Err(e) => last_miss = e.to_string(),
                }
            }
            let parsed = parsed.ok_or(CampaignError::ParseMiss(last_miss))?;

            run.clock.on_submit();
            let outcome = sim.submit(&parsed.valid_input)?;
            let mut attempt = ValidInputTry {
                assignment: parsed.valid_input.clone(),
                outcome: outcome.kind().to_string(),
                hint: None,
            };
            match outcome {
                SubmissionOutcome::PageTransition { .. } => {
                    sim.reset();
                    tries.push(attempt);
                    let inferred = parsed.inferred_constraints.trim();
                    return Ok(ValidInput {
                        assignment: parsed.valid_input,
                        inferred_constraints: if inferred.is_empty() { NO_CONSTRAINTS } else { inferred }.to_string(),
                        contexts,
                    });
                }
                SubmissionOutcome::Rejected { after_page, .. } => {
                    if let Some(hint) = diff_pages(page, &after_page, "") {
                        let owners: Vec<usize> = widgets
                            .iter()
                            .enumerate()
                            .filter(|(_, w)| {
                                let row = &w.node_path[..w.node_path.len().saturating_sub(1)];
                                hint.node_paths.iter().any(|p| p.len() > row.len() && p.starts_with(row))
                            })
                            .map(|(i, _)| i)
                            .collect();
                        let owners = if owners.is_empty() { (0..widgets.len()).collect() } else { owners };
                        for i in owners {
                            let provoking = &parsed.valid_input[&keys[i]];
                            contexts[i] = contexts[i].clone().with_dynamic_hint(hint.hint.clone(), provoking.clone());
                        }
                        attempt.hint = Some(hint.hint);
                    }
                    sim.reset();
                }
                SubmissionOutcome::Crash { crash_id, .. } => {
                    attempt.hint = Some(crash_id);
                    sim.reset();
                }
            }
            tries.push(attempt);
        }
        Err(CampaignError::ValidInputUnobtainable(self.config.valid_input_retry_cap))
    }

    /// Test the simulator's first page until a crash or a budget runs out.
    pub fn run_target(&self, sim: &mut AppSimulator, store: &mut ExampleStore) -> Result<TargetReport, CampaignError> {
        sim.reset();
        let page = sim.observe();
        let mut report = TargetReport::new(&page.app_name, &page.activity_name);
        let mut run = self.start();
        let result = self.run_loop(&mut run, sim, store, &page, &mut report);
        report.llm_calls = run.llm.calls();
        report.elapsed_seconds = run.clock.elapsed_seconds();
        match result {
            Ok(()) => Ok(report),
            Err(e) if e.is_fatal() => Err(e),
            Err(e) => {
                report.undetected_reason = Some(e.to_string());
                Ok(report)
            }
        }
    }

    fn run_loop(
        &self,
        run: &mut TargetRun<'_>,
        sim: &mut AppSimulator,
        store: &mut ExampleStore,
        page: &GuiPage,
        report: &mut TargetReport,
    ) -> Result<(), CampaignError> {
        let cfg = &self.config;
        if cfg.attempt_budget == 0 {
            return Err(CampaignError::BudgetExhausted("attempt budget is zero".into()));
        }
        let widgets = identify_input_widgets(page);
        if widgets.is_empty() {
            return Err(CampaignError::Config(format!("{} has no input widgets", page.activity_name)));
        }
        let keys: Vec<String> = widgets.iter().map(|w| w.local_key().to_string()).collect();

        let valid = self.acquire(run, sim, page, &widgets, &mut report.valid_input_tries)?;
        report.valid_input = Some(valid.assignment.clone());
        report.inferred_constraints = valid.inferred_constraints.clone();

        let mut seen: HashSet<BTreeMap<String, String>> =
            report.valid_input_tries.iter().map(|t| t.assignment.clone()).collect();
        let query = page_query(&valid.contexts);
        let tag = format!("{}/{}:gen:k{}", page.app_name, page.activity_name, cfg.k_examples);
        let crashes: Vec<FeedbackEntry> = Vec::new();
        let mut quiet: Vec<FeedbackEntry> = Vec::new();
        let mut unusable = 0;

        for round in 0.. {
            if report.attempts_used >= cfg.attempt_budget {
                return Err(CampaignError::BudgetExhausted("attempt budget".into()));
            }
            if run.out_of_time() {
                return Err(CampaignError::BudgetExhausted("time budget".into()));
            }
            let examples = if cfg.k_examples == 0 {
                Vec::new()
            } else {
                store.retrieve_top_k(&query, cfg.k_examples)
            };
            let bundle = FeedbackBundle::from_history(&crashes, &quiet, cfg.feedback_window);
            let variant = if round == 0 { QuestionVariant::FirstRound } else { QuestionVariant::NextRound };
            let prompt = self.engine.build_generator_prompt(
                &valid.inferred_constraints,
                &valid.assignment,
                &bundle,
                &examples,
                variant,
            )?;
            let raw = run.call(&prompt.rendered, &tag)?;

            let mut log = RoundLog {
                round,
                mutation_rule: String::new(),
                program: String::new(),
                examples_used: prompt.examples_used,
                batch: Vec::new(),
                outcomes: Vec::new(),
                skipped_duplicates: 0,
                error: None,
            };
            let program = self
                .markers
                .parse_generator(&raw)
                .map_err(|e| e.to_string())
                .and_then(|resp| {
                    log.mutation_rule = resp.mutation_rule.clone();
                    log.program = resp.program_source.clone();
                    parse_program(&resp.program_source).map_err(|e| format!("generator program: {e}"))
                });
            let program = match program {
                Ok(p) => p,
                Err(e) => {
                    log.error = Some(e);
                    report.rounds.push(log);
                    unusable += 1;
                    if unusable >= MAX_UNUSABLE_ROUNDS {
                        return Err(CampaignError::ParseMiss(format!("{unusable} unusable generator responses in a row")));
                    }
                    continue;
                }
            };
            let rule = log.mutation_rule.clone();
            log.batch = execute_program(&program);

            let mut fresh = 0;
            let mut round_quiet = Vec::new();
            let mut stop = None;
            for input in log.batch.clone() {
                let mut full = valid.assignment.clone();
                full.extend(input.assignment.clone());
                if let Some(bad) = full.keys().find(|k| !keys.contains(k)) {
                    log.error = Some(format!("generator targets unknown widget `{bad}`"));
                    continue;
                }
                if seen.contains(&full) {
                    log.skipped_duplicates += 1;
                    continue;
                }
                if report.attempts_used >= cfg.attempt_budget {
                    stop = Some("attempt budget");
                    break;
                }
                if run.out_of_time() {
                    stop = Some("time budget");
                    break;
                }
                seen.insert(full.clone());
                fresh += 1;
                report.attempts_used += 1;
                run.clock.on_submit();
                let outcome = sim.submit(&full)?;
                let mut record = AttemptRecord {
                    attempt: report.attempts_used,
                    assignment: full.clone(),
                    outcome: outcome.kind().to_string(),
                    crash_id: None,
                    hint: None,
                };
                match outcome {
                    SubmissionOutcome::Crash { crash_id, .. } => {
                        record.crash_id = Some(crash_id.clone());
                        log.outcomes.push(record);
                        report.rounds.push(log);
                        let (context, buggy) = crash_example(&valid.assignment, &full, &keys, &valid.contexts);
                        report.store_record_id = Some(store.add_record(context, &rule, &buggy)?);
                        report.detected = true;
                        report.crash_id = Some(crash_id);
                        report.crash_input = Some(full);
                        sim.reset();
                        return Ok(());
                    }
                    SubmissionOutcome::Rejected { hint_text, .. } => record.hint = Some(hint_text),
                    SubmissionOutcome::PageTransition { .. } => {}
                }
                sim.reset();
                log.outcomes.push(record);
                round_quiet.push(FeedbackEntry {
                    input: UnusualInput {
                        assignment: full,
                        provenance: input.provenance,
                    },
                    mutation_rule: rule.clone(),
                });
            }
            report.rounds.push(log);
            quiet.extend(round_quiet);
            if let Some(what) = stop {
                return Err(CampaignError::BudgetExhausted(what.into()));
            }
            unusable = if fresh == 0 { unusable + 1 } else { 0 };
            if unusable >= MAX_UNUSABLE_ROUNDS {
                return Err(CampaignError::ParseMiss(format!("{unusable} generator rounds in a row produced nothing new")));
            }
        }
        unreachable!("the round loop only exits by returning")
    }

    /// Run every spec's first page in order; later targets see the examples
    /// earlier ones added to the store.
    pub fn run_suite(&self, specs: &[AppSpec], store: &mut ExampleStore) -> Result<CampaignReport, CampaignError> {
        let mut targets = Vec::with_capacity(specs.len());
        for spec in specs {
            match AppSimulator::new(spec.clone()) {
                Ok(mut sim) => targets.push(self.run_target(&mut sim, store)?),
                Err(e) => {
                    let activity = spec.pages.first().map_or("", |p| p.activity_name.as_str());
                    let mut t = TargetReport::new(&spec.app_name, activity);
                    t.undetected_reason = Some(e.to_string());
                    targets.push(t);
                }
            }
        }
        Ok(CampaignReport::new(self.config.clone(), targets))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::MockProvider;

    const FONT: &str = r#"{"app_name":"FontSizer","pages":[{"activity_name":"SettingsActivity",
        "widgets":[{"id":"w_size","descriptor":"font size","neighbors":["Font size"]}],
        "rules":[{"widget":"w_size","check":{"kind":"must_parse_int"},"hint_text":"Enter a whole number","visibility":"explicit"}],
        "crashes":[{"crash_id":"negative_font","condition":["<",["num","w_size"],0]}]}]}"#;

    const PASSWORD: &str = r#"{"app_name":"Wallet","pages":[{"activity_name":"RegisterActivity",
        "widgets":[{"id":"w_pass","descriptor":"Password"}],
        "rules":[{"widget":"w_pass","check":{"kind":"requires_class","class":"upper"},
           "hint_text":"password should contain letters","visibility":"implicit"}]}]}"#;

    fn script(pairs: &[(&str, &[&str])]) -> MockProvider {
        MockProvider::new(
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
                .collect(),
        )
    }

    fn sim(json: &str) -> AppSimulator {
        AppSimulator::new(AppSpec::from_json(json).unwrap()).unwrap()
    }

    const VALID_18: &str = "Constraints: a whole number. The valid input is \"18\".";
    const NEGATE: &str = "Mutation rule: negate the number\nTest generator:\nrule: negate the number\ntarget: w_size\nbase: w_size = \"18\"\nop: number_negate()\nEnd generator.";
    const NOOP: &str = "Mutation rule: append a digit\nTest generator:\nrule: append a digit\ntarget: w_size\nbase: w_size = \"18\"\nop: append(\"$D\")\nop: set(v=$D)\naxis: $D in [1, 2, 3]\nEnd generator.";

    #[test]
    fn happy_path_valid_input() {
        let llm = script(&[("FontSizer/SettingsActivity:valid", &[VALID_18])]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let mut s = sim(FONT);
        let page = s.observe();
        let widgets = identify_input_widgets(&page);
        let (v, tries) = c.acquire_valid_input(&mut s, &page, &widgets);
        let v = v.unwrap();
        assert_eq!(v.assignment["w_size"], "18");
        assert_eq!(v.inferred_constraints, "a whole number");
        assert_eq!(tries.len(), 1);
        assert_eq!(llm.transcript().len(), 1);
        assert_eq!(s.log().len(), 1);
    }

    #[test]
    fn hint_reaches_the_second_prompt() {
        let llm = script(&[(
            "Wallet/RegisterActivity:valid",
            &["Constraints: none. The valid input is \"abc\".", "Constraints: letters. The valid input is \"Abc\"."],
        )]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let mut s = sim(PASSWORD);
        let page = s.observe();
        let widgets = identify_input_widgets(&page);
        let (v, tries) = c.acquire_valid_input(&mut s, &page, &widgets);
        assert_eq!(v.unwrap().contexts[0].dynamic_hint, "password should contain letters");
        assert_eq!(tries.len(), 2);
        assert_eq!(tries[0].hint.as_deref(), Some("password should contain letters"));
    }

    #[test]
    fn retry_cap_exhaustion() {
        let llm = script(&[("Wallet/RegisterActivity:valid", &["Constraints: none. The valid input is \"abc\"."])]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let mut s = sim(PASSWORD);
        let page = s.observe();
        let (v, tries) = c.acquire_valid_input(&mut s, &page, &identify_input_widgets(&page));
        assert!(matches!(v, Err(CampaignError::ValidInputUnobtainable(5))));
        assert_eq!(tries.len(), 5);
    }

    #[test]
    fn parse_misses_escalate_after_three() {
        let llm = script(&[("Wallet/RegisterActivity:valid", &["I do not know."])]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let mut s = sim(PASSWORD);
        let page = s.observe();
        let (v, _) = c.acquire_valid_input(&mut s, &page, &identify_input_widgets(&page));
        assert!(matches!(v, Err(CampaignError::ParseMiss(_))));
        assert_eq!(llm.transcript().len(), PARSE_RETRIES);
        assert!(s.log().is_empty());
    }

    #[test]
    fn negation_generator_finds_the_crash() {
        let llm = script(&[("FontSizer/SettingsActivity:valid", &[VALID_18]), ("FontSizer/SettingsActivity:gen", &[NEGATE])]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let mut store = ExampleStore::builtin_seeds();
        let r = c.run_target(&mut sim(FONT), &mut store).unwrap();
        assert!(r.detected);
        assert_eq!(r.crash_id.as_deref(), Some("negative_font"));
        assert_eq!(r.attempts_used, 1);
        assert_eq!(store.len(), 51);
        let rec = store.records().last().unwrap();
        assert_eq!(rec.buggy_input, "-18");
        assert_eq!(rec.mutation_rule.as_deref(), Some("negate the number"));
        assert_eq!(rec.context.input_widget, "font size");
        assert_eq!(r.attempts().last().unwrap().outcome, "crash");
    }

    #[test]
    fn zero_budget_means_no_work() {
        let llm = script(&[]);
        let cfg = CampaignConfig {
            attempt_budget: 0,
            ..CampaignConfig::simulated()
        };
        let c = Campaign::new(cfg, &llm).unwrap();
        let r = c.run_target(&mut sim(FONT), &mut ExampleStore::in_memory()).unwrap();
        assert!(!r.detected);
        assert_eq!(r.attempts_used, 0);
        assert!(llm.transcript().is_empty());
    }

    #[test]
    fn duplicates_are_free_and_useless_rounds_stop() {
        let llm = script(&[("FontSizer/SettingsActivity:valid", &[VALID_18]), ("FontSizer/SettingsActivity:gen", &[NOOP])]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let mut s = sim(FONT);
        let r = c.run_target(&mut s, &mut ExampleStore::in_memory()).unwrap();
        assert!(!r.detected);
        assert_eq!(r.attempts_used, 3);
        assert_eq!(r.rounds.len(), 1 + MAX_UNUSABLE_ROUNDS);
        assert_eq!(r.rounds[1].skipped_duplicates, 3);
        assert_eq!(s.log().len(), 1 + 3);
        assert!(r.undetected_reason.unwrap().contains("nothing new"));
    }

    #[test]
    fn feedback_window_tracks_previous_rounds() {
        let llm = script(&[("FontSizer/SettingsActivity:valid", &[VALID_18]), ("FontSizer/SettingsActivity:gen", &[NOOP, NEGATE])]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let r = c.run_target(&mut sim(FONT), &mut ExampleStore::in_memory()).unwrap();
        assert!(r.detected);
        assert_eq!(r.attempts_used, 4);
        let prompts = llm.transcript();
        assert_eq!(prompts.len(), 3);
    }

    #[test]
    fn missing_script_is_fatal() {
        let llm = script(&[]);
        let c = Campaign::new(CampaignConfig::simulated(), &llm).unwrap();
        let err = c.run_target(&mut sim(FONT), &mut ExampleStore::in_memory()).unwrap_err();
        assert!(err.is_fatal());
    }

    #[test]
    fn crash_example_selection() {
        let valid: BTreeMap<_, _> = [("a".to_string(), "1".to_string()), ("b".to_string(), "2".to_string())].into();
        let ctxs = vec![
            WidgetContext {
                input_widget: "A".into(),
                ..Default::default()
            },
            WidgetContext {
                input_widget: "B".into(),
                ..Default::default()
            },
        ];
        let keys = vec!["a".to_string(), "b".to_string()];
        let mut sub = valid.clone();
        sub.insert("b".into(), "-2".into());
        let (ctx, buggy) = crash_example(&valid, &sub, &keys, &ctxs);
        assert_eq!((ctx.input_widget.as_str(), buggy.as_str()), ("B", "-2"));
        sub.insert("a".into(), "3".into());
        let (ctx, buggy) = crash_example(&valid, &sub, &keys, &ctxs);
        assert_eq!(ctx.input_widget, "A; B");
        assert_eq!(buggy, "a = \"3\"; b = \"-2\"");
    }
}
