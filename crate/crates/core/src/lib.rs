//! Generate unusual text inputs for GUI input widgets with an LLM in the
//! loop.
//!
//! The pipeline reads a page's view hierarchy, asks the model for a valid
//! input, then for mutation rules written as small generator programs. The
//! programs run in a closed mutation language; each resulting input is
//! submitted to an app (here, a declarative simulator) until one crashes it.
//! Crashing inputs are kept in an example store and retrieved as few-shot
//! examples for later targets.

pub mod campaign;
pub mod dsl;
pub mod hierarchy;
pub mod llm;
pub mod model;
pub mod prompt;
pub mod sim;
pub mod store;

pub use campaign::{Campaign, CampaignConfig, CampaignError, CampaignReport, ClockMode, FeedbackBundle, TargetReport};
pub use dsl::{execute_program, parse_program, DslError, GeneratorProgram, UnusualInput};
pub use hierarchy::{diff_pages, extract_widget_context, identify_input_widgets, parse_hierarchy, write_hierarchy};
pub use llm::{CompletionRequest, LiveProvider, LlmError, LlmProvider, MockProvider};
pub use model::{Bounds, GuiPage, InputWidget, ViewNode, WidgetContext};
pub use prompt::PromptEngine;
pub use sim::{AppSimulator, AppSpec, SubmissionOutcome};
pub use store::{ExampleRecord, ExampleStore};
