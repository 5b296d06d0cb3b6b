use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use textfuzz_core::campaign::{Campaign, CampaignConfig, CampaignError, ClockMode};
use textfuzz_core::dsl::{execute_program, parse_program};
use textfuzz_core::llm::{LiveProvider, LlmProvider, MockProvider};
use textfuzz_core::model::WidgetContext;
use textfuzz_core::sim::AppSpec;
use textfuzz_core::store::ExampleStore;

const EXIT_CONFIG: u8 = 2;
const EXIT_PROVIDER: u8 = 3;
const EXIT_DSL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "textfuzz",
    version,
    about = "Generate unusual text inputs for GUI input widgets with an LLM in the loop",
    after_help = "Exit codes: 0 success, 2 usage or configuration error, 3 LLM provider failure, 4 mutation program error.\n\
                  Live provider environment: TEXTFUZZ_LLM_ENDPOINT, TEXTFUZZ_LLM_API_KEY, TEXTFUZZ_LLM_MODEL."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign over every app spec in a directory.
    Run(RunArgs),
    /// Parse and execute a mutation program, printing one input per line.
    Dsl {
        #[arg(long)]
        program: PathBuf,
    },
    /// Inspect an example store.
    Store {
        #[arg(long)]
        store: PathBuf,
        #[command(subcommand)]
        action: StoreAction,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Directory of app spec JSON files.
    #[arg(long)]
    specs: PathBuf,
    /// Campaign config JSON; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `mock:<script.json>` or `live`.
    #[arg(long)]
    provider: String,
    /// Example store (JSON lines). Created from the built-in seeds if absent.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// 0 runs specs in file-name order; other values shuffle deterministically.
    #[arg(long, default_value_t = 0)]
    seed_order: u64,
    /// Override the config's clock.
    #[arg(long, value_enum)]
    clock: Option<ClockArg>,
    /// Override the config's number of retrieved examples.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Wall,
    Simulated,
}

#[derive(Subcommand)]
enum StoreAction {
    /// Print every record as a JSON line.
    List,
    /// Print the top-k records most similar to a context text.
    Query {
        #[arg(long)]
        context: String,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Dsl { program } => cmd_dsl(&program),
        Command::Store { store, action } => cmd_store(&store, action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("textfuzz: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn load_specs(dir: &Path, seed: u64) -> Result<Vec<AppSpec>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(fail(EXIT_CONFIG, format!("{}: no app specs (*.json)", dir.display())));
    }
    if seed != 0 {
        paths.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    paths
        .iter()
        .map(|p| AppSpec::from_json(&read(p)?).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", p.display()))))
        .collect()
}

fn provider(spec: &str) -> Result<Box<dyn LlmProvider>, Failure> {
    let unavailable = |e: textfuzz_core::llm::LlmError| fail(EXIT_PROVIDER, e.to_string());
    match spec.split_once(':') {
        Some(("mock", path)) => Ok(Box::new(MockProvider::from_file(path).map_err(unavailable)?)),
        None if spec == "live" => Ok(Box::new(LiveProvider::from_env().map_err(unavailable)?)),
        _ => Err(fail(EXIT_CONFIG, format!("unknown provider `{spec}`; use mock:<file> or live"))),
    }
}

fn open_store(path: Option<&Path>) -> Result<ExampleStore, Failure> {
    let Some(path) = path else {
        return Ok(ExampleStore::builtin_seeds());
    };
    if path.exists() {
        return ExampleStore::load_seed_dataset(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())));
    }
    let mut store = ExampleStore::builtin_seeds();
    store
        .persist_to(path)
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    Ok(store)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(p) => CampaignConfig::from_json(&read(p)?).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?,
        None => CampaignConfig::default(),
    };
    match args.clock {
        Some(ClockArg::Wall) => config.clock = ClockMode::Wall,
        Some(ClockArg::Simulated) => config.clock = ClockMode::Simulated,
        None => {}
    }
    if let Some(k) = args.k {
        config.k_examples = k;
    }
    let specs = load_specs(&args.specs, args.seed_order)?;
    let llm = provider(&args.provider)?;
    let mut store = open_store(args.store.as_deref())?;
    let campaign = Campaign::new(config, llm.as_ref()).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let report = campaign.run_suite(&specs, &mut store).map_err(|e| match e {
        CampaignError::Provider(_) => fail(EXIT_PROVIDER, e.to_string()),
        other => fail(EXIT_CONFIG, other.to_string()),
    })?;
    if let Some(path) = &args.report {
        fs::write(path, report.to_json() + "\n").map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    }
    print!("{}", report.table());
    Ok(())
}

fn cmd_dsl(path: &Path) -> Result<(), Failure> {
    let source = read(path)?;
    let program = parse_program(&source).map_err(|e| fail(EXIT_DSL, format!("{}: {e}", path.display())))?;
    for input in execute_program(&program) {
        println!("{}", serde_json::to_string(&input.assignment).expect("assignment serializes"));
    }
    Ok(())
}

fn cmd_store(path: &Path, action: StoreAction) -> Result<(), Failure> {
    let store = ExampleStore::from_jsonl(&read(path)?).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    match action {
        StoreAction::List => {
            for r in store.records() {
                println!("{}", serde_json::to_string(r).expect("record serializes"));
            }
        }
        StoreAction::Query { context, k } => {
            let query = WidgetContext {
                input_widget: context,
                ..Default::default()
            };
            for (r, score) in store.retrieve_scored(&query, k as usize) {
                println!(
                    "{score:.4}\t{}\t{}/{}\t{}\t{}",
                    r.record_id,
                    r.context.app_name,
                    r.context.page_name,
                    r.context.input_widget,
                    serde_json::to_string(&r.buggy_input).expect("string serializes")
                );
            }
        }
    }
    Ok(())
}
