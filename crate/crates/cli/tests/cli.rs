use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use textfuzz_core::model::WidgetContext;
use textfuzz_core::store::{cosine, embed, ExampleStore};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).to_string_lossy().into_owned()
}

fn textfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textfuzz"))
        .args(args)
        .env_remove("TEXTFUZZ_LLM_API_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn sim_config(dir: &Path) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, r#"{"clock": "simulated"}"#).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_with_mock_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let store = dir.path().join("store.jsonl");
    let cfg = sim_config(dir.path());
    let o = textfuzz(&[
        "run",
        "--specs",
        &fixture("apps"),
        "--provider",
        &format!("mock:{}", fixture("mock/happy.json")),
        "--config",
        &cfg,
        "--store",
        store.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Bug(%)"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["aggregates"]["targets"], 12);
    let stored = ExampleStore::load_seed_dataset(&store).unwrap();
    assert_eq!(stored.len(), 50 + json["aggregates"]["detected"].as_u64().unwrap() as usize);
}

#[test]
fn missing_specs_is_a_usage_error() {
    let o = textfuzz(&["run", "--provider", "live"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--specs"));
}

#[test]
fn live_without_key_is_a_provider_failure() {
    let o = textfuzz(&["run", "--specs", &fixture("apps"), "--provider", "live"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn missing_mock_script_is_a_provider_failure() {
    let o = textfuzz(&["run", "--specs", &fixture("apps"), "--provider", "mock:/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"batch_size": 0}"#).unwrap();
    let o = textfuzz(&[
        "run",
        "--specs",
        &fixture("apps"),
        "--provider",
        &format!("mock:{}", fixture("mock/happy.json")),
        "--config",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_order_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path());
    let run = |seed: &str, name: &str| {
        let report = dir.path().join(name);
        let o = textfuzz(&[
            "run",
            "--specs",
            &fixture("apps"),
            "--provider",
            &format!("mock:{}", fixture("mock/happy.json")),
            "--config",
            &cfg,
            "--seed-order",
            seed,
            "--report",
            report.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (stdout(&o), std::fs::read(report).unwrap())
    };
    let a = run("7", "a.json");
    let b = run("7", "b.json");
    assert_eq!(a, b);
    let c = run("0", "c.json");
    assert_ne!(a.0, c.0);
}

#[test]
fn dsl_prints_one_line_per_input() {
    let o = textfuzz(&["dsl", "--program", &fixture("programs/font_negate.dsl")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "{\"w_size\":\"-18\"}\n");
    let again = textfuzz(&["dsl", "--program", &fixture("programs/font_negate.dsl")]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn dsl_axis_is_capped_by_batch() {
    let o = textfuzz(&["dsl", "--program", &fixture("programs/inject_axis.dsl")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn dsl_syntax_error_cites_the_line() {
    let o = textfuzz(&["dsl", "--program", &fixture("programs/syntax_error.dsl")]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

fn seed_store(dir: &Path) -> PathBuf {
    let p = dir.join("seeds.jsonl");
    ExampleStore::builtin_seeds().persist_to(&p).unwrap();
    p
}

#[test]
fn store_query_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let p = seed_store(dir.path());
    let text = "Wallet RegisterActivity password";
    let o = textfuzz(&["store", "--store", p.to_str().unwrap(), "query", "--context", text, "--k", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 5);
    let scores: Vec<f64> = lines.iter().map(|l| l.split('\t').next().unwrap().parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert!(lines.iter().all(|l| l.split('\t').next().unwrap().split('.').nth(1).unwrap().len() == 4));

    let q = embed(
        &WidgetContext {
            input_widget: text.into(),
            ..Default::default()
        }
        .retrieval_text(),
    );
    let store = ExampleStore::builtin_seeds();
    let mut all: Vec<(f64, u64)> = store
        .records()
        .iter()
        .map(|r| (cosine(&q, &embed(&r.context.retrieval_text())), r.record_id))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let expected: Vec<String> = all[..5].iter().map(|(_, id)| id.to_string()).collect();
    let got: Vec<String> = lines.iter().map(|l| l.split('\t').nth(1).unwrap().to_string()).collect();
    assert_eq!(got, expected);
}

#[test]
fn store_list() {
    let dir = tempfile::tempdir().unwrap();
    let p = seed_store(dir.path());
    let o = textfuzz(&["store", "--store", p.to_str().unwrap(), "list"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 50);

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = textfuzz(&["store", "--store", empty.to_str().unwrap(), "list"]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
}

#[test]
fn malformed_store_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.jsonl");
    std::fs::write(&p, "{not json}\n").unwrap();
    let o = textfuzz(&["store", "--store", p.to_str().unwrap(), "list"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("record 1"));
}

#[test]
fn help_documents_exit_codes() {
    let o = textfuzz(&["--help"]);
    assert!(stdout(&o).contains("Exit codes"));
}
