use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use np_alarm::fixtures::{evaluation, strictum};
use np_alarm::kg::KnowledgeGraph;
use np_alarm::lock::LOCK_FILE;
use np_alarm::pipeline::{load_manifest, RunStatus, KG_FILE};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_np-alarm"));
    c.env_remove("NP_ALARM_TOKEN").env("NP_ALARM_LOG", "error");
    c
}

fn np(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_strictum(tmp: &Path, run: &str) -> Output {
    np(
        &["run", "-c", "fx/config.toml", "--run-dir", run, strictum::ACCEPTED],
        tmp,
    )
}

#[test]
fn run_writes_manifest_and_graph() {
    let tmp = TempDir::new().unwrap();
    let o = np(&["fixture", "strictum", "fx"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run_strictum(tmp.path(), "run");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("Completed"));
    let m = load_manifest(&tmp.path().join("run")).unwrap();
    assert_eq!(m.status, RunStatus::Completed);
    let g = KnowledgeGraph::load(&tmp.path().join("run").join(KG_FILE)).unwrap();
    assert!(g.integrity_violations().is_empty());
    assert!(!tmp.path().join("run").join(LOCK_FILE).exists());

    // Same inputs, same export.
    assert_eq!(code(&run_strictum(tmp.path(), "again")), 0);
    let a = np(&["kg", "export", "run"], tmp.path());
    let b = np(&["kg", "export", "again"], tmp.path());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn kg_export_import_round_trip() {
    let tmp = TempDir::new().unwrap();
    strictum::write(&tmp.path().join("fx")).unwrap();
    assert_eq!(code(&run_strictum(tmp.path(), "run")), 0);
    assert_eq!(code(&np(&["kg", "export", "run", "--out", "a.jsonl"], tmp.path())), 0);
    let o = np(&["kg", "import", "a.jsonl", "--out", "copy/kg.jsonl"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&np(&["kg", "export", "copy", "--out", "b.jsonl"], tmp.path())), 0);
    assert_eq!(
        fs::read(tmp.path().join("a.jsonl")).unwrap(),
        fs::read(tmp.path().join("b.jsonl")).unwrap()
    );

    fs::write(tmp.path().join("bad.jsonl"), "not a graph\n").unwrap();
    let o = np(&["kg", "import", "bad.jsonl", "--out", "x.jsonl"], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(!tmp.path().join("x.jsonl").exists());
}

#[test]
fn usage_and_config_errors() {
    let tmp = TempDir::new().unwrap();
    let o = np(&["run", "--bogus"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--bogus"));

    strictum::write(&tmp.path().join("fx")).unwrap();
    let cfg = fs::read_to_string(tmp.path().join("fx/config.toml")).unwrap();
    fs::write(
        tmp.path().join("fx/broken.toml"),
        cfg.replace("chunk_size = 1500", "chunk_size = 1500\nchunk_sise = 3"),
    )
    .unwrap();
    let o = np(
        &["run", "-c", "fx/broken.toml", "--run-dir", "run", strictum::ACCEPTED],
        tmp.path(),
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("chunk_sise"), "{}", stderr(&o));

    let o = np(&["run", "-c", "fx/config.toml", "--run-dir", "run"], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no identifications"));
}

#[test]
fn existing_runs_and_locks_are_respected() {
    let tmp = TempDir::new().unwrap();
    strictum::write(&tmp.path().join("fx")).unwrap();
    assert_eq!(code(&run_strictum(tmp.path(), "run")), 0);
    let before = fs::read(tmp.path().join("run/manifest.json")).unwrap();
    let o = run_strictum(tmp.path(), "run");
    assert_eq!(code(&o), 5);
    assert_eq!(fs::read(tmp.path().join("run/manifest.json")).unwrap(), before);

    fs::create_dir_all(tmp.path().join("busy")).unwrap();
    fs::write(tmp.path().join("busy").join(LOCK_FILE), format!("{}\n", std::process::id())).unwrap();
    let o = run_strictum(tmp.path(), "busy");
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    assert!(stderr(&o).contains("locked"));
    assert!(!tmp.path().join("busy/manifest.json").exists());
}

#[test]
fn halt_resume_and_config_drift() {
    let tmp = TempDir::new().unwrap();
    strictum::write(&tmp.path().join("fx")).unwrap();
    let o = np(
        &["run", "-c", "fx/config.toml", "--run-dir", "r", "--halt-after", "relation-extraction", strictum::ACCEPTED],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("Halted"));
    let o = np(&["resume", "r", "-c", "fx/config.toml", "--log", "error"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("Completed"));

    assert_eq!(code(&run_strictum(tmp.path(), "whole")), 0);
    let a = np(&["kg", "export", "r"], tmp.path());
    let b = np(&["kg", "export", "whole"], tmp.path());
    assert_eq!(a.stdout, b.stdout);

    let o = np(
        &["run", "-c", "fx/config.toml", "--run-dir", "d", "--halt-after", "2", strictum::ACCEPTED],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let cfg = fs::read_to_string(tmp.path().join("fx/config.toml")).unwrap();
    fs::write(tmp.path().join("fx/other.toml"), cfg.replace("chunk_size = 1500", "chunk_size = 900")).unwrap();
    let o = np(&["resume", "d", "-c", "fx/other.toml"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("digest"));
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    strictum::write(&tmp.path().join("fx")).unwrap();
    let o = np(
        &["run", "-c", "fx/config.toml", "--run-dir", "r", "--mode", "lotus-only", strictum::ACCEPTED],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let snapshot = fs::read_to_string(tmp.path().join("r/config.toml")).unwrap();
    assert!(snapshot.contains("mode = \"lotus-only\""), "{snapshot}");
    assert!(snapshot.contains("parallelism = 2"));
    assert_eq!(load_manifest(&tmp.path().join("r")).unwrap().counters.relations_total(), 3);
}

#[test]
fn reports_write_tables_and_charts() {
    let tmp = TempDir::new().unwrap();
    let o = np(&["fixture", "evaluation", "fx"], tmp.path());
    assert_eq!(code(&o), 0);
    let o = np(
        &["run", "-c", "fx/config.toml", "--run-dir", "run", "--ids-file", "fx/identifications.txt"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let triples = format!("fx/{}", evaluation::TRIPLES_FILE);
    let aliases = format!("fx/{}", evaluation::ALIASES_FILE);
    let o = np(
        &["report", "compare", "--kg", "run", "--triples", &triples, "--aliases", &aliases],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("total 27 retrieved 26 (re 22"), "{}", stdout(&o));
    assert_eq!(code(&np(&["report", "alerts", "--kg", "run"], tmp.path())), 0);
    assert_eq!(code(&np(&["report", "biblio", "--kg", "run"], tmp.path())), 0);
    let reports = tmp.path().join("run/reports");
    for f in ["comparison.tsv", "comparison.summary.json", "alerts.tsv", "alerts.charts.json", "biblio.tsv", "biblio.chart.json"] {
        assert!(reports.join(f).is_file(), "{f}");
    }
    let alerts = fs::read_to_string(reports.join("alerts.tsv")).unwrap();
    assert_eq!(alerts.lines().count(), 13);
    let charts: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(reports.join("alerts.charts.json")).unwrap()).unwrap();
    assert!(!charts.as_array().unwrap().is_empty());

    let o = np(&["report", "alerts", "--kg", "run/kg.jsonl"], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--out-dir"));
}

#[test]
fn corpus_building_and_filter_training() {
    let tmp = TempDir::new().unwrap();
    let o = np(&["build-corpus", "synthetic", "--n", "400", "--out", "c.tsv"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("400 examples, "), "{}", stdout(&o));
    let o = np(
        &["train-filter", "--corpus", "c.tsv", "--out", "m.txt", "--metrics", "m.json"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("m.json")).unwrap()).unwrap();
    assert!(m["f1"].as_f64().unwrap() >= 0.85, "{m}");
    np_alarm::filtering::LexicalModel::load(&tmp.path().join("m.txt")).unwrap();

    strictum::write(&tmp.path().join("fx")).unwrap();
    fs::write(tmp.path().join("pmids.txt"), "10397815\n6684424\n").unwrap();
    let o = np(
        &["build-corpus", "pseudo", "-c", "fx/config.toml", "--pmids", "pmids.txt", "--out", "p.tsv"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("p.tsv").is_file());
}

#[test]
fn serve_answers_and_holds_the_lock() {
    let tmp = TempDir::new().unwrap();
    strictum::write(&tmp.path().join("fx")).unwrap();
    assert_eq!(code(&run_strictum(tmp.path(), "run")), 0);
    let o = np(&["serve", "--kg", "run"], tmp.path());
    assert_eq!(code(&o), 2, "token is required");

    let mut child = bin()
        .args(["serve", "--kg", "run", "--addr", "127.0.0.1:0", "--token", "t"])
        .current_dir(tmp.path())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let v: serde_json::Value = reqwest::blocking::get(format!("{base}/api/organisms"))
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(v["items"][0]["name"], strictum::ACCEPTED);

    let o = np(&["resume", "run"], tmp.path());
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    child.kill().unwrap();
    child.wait().unwrap();
}
