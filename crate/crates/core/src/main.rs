//! `np-alarm` command line.
//!
//! Settings come from one TOML config file; flags given on the command line
//! override the file, and the file overrides built-in defaults.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success, including a run halted on request |
//! | 1 | fatal error |
//! | 2 | usage error |
//! | 3 | config error, or a resume whose config changed |
//! | 4 | run finished but some units failed |
//! | 5 | run directory or graph file in use or already holding a run |

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use np_alarm::api::{self, ApiConfig, ApiState};
use np_alarm::extraction::Extractor;
use np_alarm::filtering::{
    build_mesh_activity_corpus, build_pseudo_label_corpus, evaluate, read_corpus, stratified_split,
    synthetic_separable_corpus, train, write_corpus, Label, LabeledExample, MeshTree, Resample,
    ANTIBACTERIAL_DESCRIPTOR,
};
use np_alarm::fixtures::{evaluation, strictum};
use np_alarm::kg::KnowledgeGraph;
use np_alarm::literature::{FetchOptions, SearchQuery, SearchScope};
use np_alarm::lock::{DirLock, LockError};
use np_alarm::lotus::LotusDump;
use np_alarm::pipeline::{
    literature_client, AblationMode, Pipeline, PipelineConfig, PipelineError, RunOutcome, RunStatus,
    Step, CONFIG_SNAPSHOT, KG_FILE,
};
use np_alarm::report::{
    alert_distribution_report, bibliometrics, compare_with_reference, lotus_relations_in_graph,
    read_triples, ChemicalAliases,
};

#[derive(Parser)]
#[command(name = "np-alarm", version, about = "Rediscovery alarm for natural-product antibiotics")]
struct Cli {
    /// Log filter, e.g. `info` or `np_alarm=debug`.
    #[arg(long, global = true, default_value = "warn", env = "NP_ALARM_LOG")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a run over organism identifications.
    Run(RunArgs),
    /// Continue an interrupted or halted run.
    Resume(ResumeArgs),
    /// Train a lexical filter from a labeled corpus.
    TrainFilter(TrainArgs),
    /// Build a labeled corpus.
    #[command(subcommand)]
    BuildCorpus(CorpusCommand),
    /// Export or import a knowledge graph.
    #[command(subcommand)]
    Kg(KgCommand),
    /// Tables and chart series from a graph.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Serve the review API.
    Serve(ServeArgs),
    /// Write a self-contained offline fixture (backbone, canned literature,
    /// LOTUS dump, stub scripts and config).
    Fixture {
        #[arg(value_parser = ["strictum", "evaluation"])]
        name: String,
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    /// Relation sources: full, lotus-only or re-only.
    #[arg(long)]
    mode: Option<AblationMode>,
    /// Units processed concurrently within a step.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Maximum passage size in tokens.
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Response cache directory for literature requests.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, config: &mut PipelineConfig) {
        if let Some(m) = self.mode {
            config.run.mode = m;
        }
        if let Some(p) = self.parallelism {
            config.run.parallelism = p;
        }
        if let Some(c) = self.chunk_size {
            config.run.chunk_size = c;
        }
        if let Some(d) = &self.cache_dir {
            config.literature.cache_dir = Some(absolute(d));
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// New directory for the run's manifest, checkpoints and graph.
    #[arg(long)]
    run_dir: PathBuf,
    /// File with one identification per line.
    #[arg(long)]
    ids_file: Option<PathBuf>,
    /// Stop after this step (number or name).
    #[arg(long, value_parser = parse_step)]
    halt_after: Option<Step>,
    #[command(flatten)]
    overrides: Overrides,
    /// Organism identifications, e.g. "Sarocladium strictum" or "Penicillium sp.".
    identifications: Vec<String>,
}

#[derive(Args)]
struct ResumeArgs {
    run_dir: PathBuf,
    /// Config to resume with; defaults to the run's own snapshot.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_step)]
    halt_after: Option<Step>,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: label, origin and text per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Laplace smoothing.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Fraction of each class held out for scoring.
    #[arg(long, default_value_t = 0.2)]
    heldout: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Decision threshold on the positive posterior.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Also write held-out metrics as JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Label by MeSH indexing under a descriptor.
    Mesh {
        #[arg(long, short)]
        config: PathBuf,
        /// Descriptor tree file: descriptor, tree numbers, name.
        #[arg(long)]
        mesh_tree: PathBuf,
        /// Search names; their PubMed records form the pool.
        #[arg(long = "name", required = true)]
        names: Vec<String>,
        #[arg(long, default_value = ANTIBACTERIAL_DESCRIPTOR)]
        target: String,
        /// Sample this many documents per class.
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label abstracts with the relation backend's yes/no answer.
    Pseudo {
        #[arg(long, short)]
        config: PathBuf,
        /// File with one pmid per line.
        #[arg(long)]
        pmids: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two planted-keyword classes with label noise.
    Synthetic {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 40)]
        doc_len: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum KgCommand {
    /// Write the canonical export of a graph.
    Export {
        /// Graph file or run directory.
        source: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an export and store it as a graph file.
    Import {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file or run directory.
    #[arg(long)]
    kg: PathBuf,
    /// Output directory; defaults to `reports/` inside the run directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Compare the graph with expert triples.
    Compare {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        triples: PathBuf,
        /// Chemical alias table: alias, name.
        #[arg(long)]
        aliases: Option<PathBuf>,
    },
    /// Alert counts per organism, kind and level.
    Alerts {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Publication years of LOTUS references.
    Biblio {
        #[command(flatten)]
        graph: GraphArgs,
        /// Use a LOTUS dump instead of the graph's LOTUS relations.
        #[arg(long)]
        lotus_dump: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ServeArgs {
    /// Graph file or run directory.
    #[arg(long)]
    kg: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Shared secret reviewers exchange for a session.
    #[arg(long, env = "NP_ALARM_TOKEN", hide_env_values = true)]
    token: String,
    /// Directory holding run directories, for run status.
    #[arg(long)]
    runs_root: Option<PathBuf>,
    /// Keep triage in memory instead of saving it to the graph file.
    #[arg(long)]
    read_only: bool,
}

fn parse_step(s: &str) -> Result<Step, String> {
    if let Ok(n) = s.parse::<u8>() {
        return Step::from_number(n).ok_or_else(|| format!("no step {n} (1 to 9)"));
    }
    Step::ALL
        .into_iter()
        .find(|step| step.name() == s)
        .ok_or_else(|| format!("unknown step {s:?}"))
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Error with an exit code attached.
#[derive(Debug)]
struct Exit(u8, anyhow::Error);

fn code_for(e: &anyhow::Error) -> u8 {
    if let Some(p) = e.downcast_ref::<PipelineError>() {
        return match p {
            PipelineError::Config { .. } | PipelineError::ConfigDrift { .. } => 3,
            PipelineError::RunExists(_) => 5,
            _ => 1,
        };
    }
    if e.downcast_ref::<LockError>().is_some_and(|l| matches!(l, LockError::Held { .. })) {
        return 5;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::new(&cli.log))
        .with_writer(io::stderr)
        .init();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Exit> {
    let wrap = |e: anyhow::Error| Exit(code_for(&e), e);
    match command {
        Command::Run(a) => cmd_run(a).map_err(wrap),
        Command::Resume(a) => cmd_resume(a).map_err(wrap),
        Command::TrainFilter(a) => cmd_train(a).map(|_| 0).map_err(wrap),
        Command::BuildCorpus(c) => cmd_corpus(c).map(|_| 0).map_err(wrap),
        Command::Kg(c) => cmd_kg(c).map(|_| 0).map_err(wrap),
        Command::Report(c) => cmd_report(c).map(|_| 0).map_err(wrap),
        Command::Serve(a) => cmd_serve(a).map(|_| 0).map_err(wrap),
        Command::Fixture { name, dir } => cmd_fixture(&name, &dir).map(|_| 0).map_err(wrap),
    }
}

fn load_config(path: &Path) -> Result<PipelineConfig> {
    Ok(PipelineConfig::load(path)?)
}

fn report_outcome(out: &RunOutcome) -> u8 {
    let m = &out.manifest;
    println!("run {} {:?}", m.run_id, m.status);
    println!("directory {}", out.run_dir.display());
    if let Some(step) = m.completed_step {
        println!("completed step {step}");
    }
    let c = &m.counters;
    println!(
        "organisms {} names {} relations {} chemicals {}",
        c.organisms,
        c.expanded_names,
        c.relations_total(),
        c.chemicals
    );
    for f in &m.failures {
        eprintln!("failed {} {}: {}", f.step, f.unit, f.reason);
    }
    if m.status == RunStatus::Completed && !m.failures.is_empty() {
        4
    } else {
        0
    }
}

fn cmd_run(a: RunArgs) -> Result<u8> {
    let mut config = load_config(&a.config)?;
    a.overrides.apply(&mut config);
    let mut ids = a.identifications.clone();
    if let Some(f) = &a.ids_file {
        let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        ids.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    if ids.is_empty() {
        bail!("no identifications given");
    }
    let pipeline = Pipeline::new(config)?.halt_after(a.halt_after);
    let _lock = DirLock::acquire(&a.run_dir)?;
    let out = pipeline.run(&ids, &a.run_dir)?;
    Ok(report_outcome(&out))
}

fn cmd_resume(a: ResumeArgs) -> Result<u8> {
    let path = a.config.clone().unwrap_or_else(|| a.run_dir.join(CONFIG_SNAPSHOT));
    let pipeline = Pipeline::new(load_config(&path)?)?.halt_after(a.halt_after);
    let _lock = DirLock::acquire(&a.run_dir)?;
    let out = pipeline.resume(&a.run_dir)?;
    Ok(report_outcome(&out))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let corpus = read_corpus(BufReader::new(File::open(&a.corpus)?))?;
    let (train_set, heldout) = stratified_split(&corpus, a.heldout, a.seed);
    let model = train(&train_set, a.alpha)?.with_threshold(a.threshold);
    model.save(&a.out)?;
    println!("trained on {} examples, {} held out", train_set.len(), heldout.len());
    if !heldout.is_empty() {
        let m = evaluate(&model, &heldout);
        println!(
            "recall {:.4} precision {:.4} f1 {:.4} f2 {:.4}",
            m.recall, m.precision, m.f1, m.f2
        );
        if let Some(p) = &a.metrics {
            fs::write(p, serde_json::to_string_pretty(&m)?)?;
        }
    }
    Ok(())
}

fn write_corpus_file(path: &Path, corpus: &[LabeledExample]) -> Result<()> {
    let mut out = io::BufWriter::new(File::create(path)?);
    write_corpus(corpus, &mut out)?;
    out.flush()?;
    let pos = corpus
        .iter()
        .filter(|e| e.label == Label::Positive)
        .count();
    println!("{} examples, {} positive", corpus.len(), pos);
    Ok(())
}

fn cmd_corpus(c: CorpusCommand) -> Result<()> {
    match c {
        CorpusCommand::Mesh {
            config,
            mesh_tree,
            names,
            target,
            per_class,
            seed,
            out,
        } => {
            let config = load_config(&config)?;
            let tree = MeshTree::read_from(BufReader::new(File::open(&mesh_tree)?))?;
            let client = literature_client(&config, None)?;
            let pmids = client.search(&SearchQuery::new(&names, SearchScope::AllFields)?)?;
            let docs = if pmids.is_empty() {
                Vec::new()
            } else {
                client.fetch(&pmids, FetchOptions::default())?.documents
            };
            let resample = per_class.map(|per_class| Resample { per_class, seed });
            let corpus = build_mesh_activity_corpus(&docs, &tree, &target, resample)?;
            write_corpus_file(&out, &corpus)
        }
        CorpusCommand::Pseudo { config, pmids, out } => {
            let config = load_config(&config)?;
            let text = fs::read_to_string(&pmids)?;
            let ids = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| l.parse::<u64>().map_err(|_| anyhow!("not a pmid: {l:?}")))
                .collect::<Result<Vec<_>>>()?;
            if ids.is_empty() {
                bail!("{} lists no pmids", pmids.display());
            }
            let client = literature_client(&config, None)?;
            let docs = client.fetch(&ids, FetchOptions::default())?.documents;
            let backend = config.backends.relation.build(Path::new("/"))?;
            let outcome = build_pseudo_label_corpus(&docs, &Extractor::new(backend))?;
            if outcome.skipped > 0 {
                println!("{} documents skipped", outcome.skipped);
            }
            write_corpus_file(&out, &outcome.examples)
        }
        CorpusCommand::Synthetic {
            n,
            doc_len,
            noise,
            seed,
            out,
        } => {
            if !(0.0..=1.0).contains(&noise) {
                bail!("--noise must be between 0 and 1");
            }
            write_corpus_file(&out, &synthetic_separable_corpus(n, doc_len, noise, seed).examples)
        }
    }
}

/// A graph file, or the graph inside a run directory.
fn graph_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(KG_FILE)
    } else {
        p.to_path_buf()
    }
}

fn load_graph(p: &Path) -> Result<KnowledgeGraph> {
    let path = graph_path(p);
    KnowledgeGraph::load(&path).with_context(|| format!("loading {}", path.display()))
}

fn cmd_kg(c: KgCommand) -> Result<()> {
    match c {
        KgCommand::Export { source, out } => {
            let g = load_graph(&source)?;
            match out {
                Some(p) => fs::write(p, g.export_string())?,
                None => io::stdout().lock().write_all(g.export_string().as_bytes())?,
            }
        }
        KgCommand::Import { input, out } => {
            let g = KnowledgeGraph::import(BufReader::new(File::open(&input)?))?;
            let bad = g.integrity_violations();
            if !bad.is_empty() {
                bail!("{} integrity violations, first: {}", bad.len(), bad[0]);
            }
            g.save(&out)?;
            println!("imported {} nodes", g.node_count());
        }
    }
    Ok(())
}

fn out_dir(g: &GraphArgs) -> Result<PathBuf> {
    let dir = match &g.out_dir {
        Some(d) => d.clone(),
        None if g.kg.is_dir() => g.kg.join("reports"),
        None => bail!("--out-dir is required when --kg is a file"),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_report(c: ReportCommand) -> Result<()> {
    match c {
        ReportCommand::Compare {
            graph,
            triples,
            aliases,
        } => {
            let g = load_graph(&graph.kg)?;
            let dir = out_dir(&graph)?;
            let triples = read_triples(File::open(&triples)?)?;
            let aliases = match aliases {
                Some(p) => ChemicalAliases::read(File::open(p)?)?,
                None => ChemicalAliases::default(),
            };
            let c = compare_with_reference(&g, &triples, &aliases)?;
            fs::write(dir.join("comparison.tsv"), c.to_tsv(&g))?;
            fs::write(dir.join("comparison.summary.json"), serde_json::to_string_pretty(&c.summary)?)?;
            let s = &c.summary;
            println!(
                "total {} retrieved {} (re {}, lotus {}) strong {} medium {} missed {}",
                s.total, s.retrieved, s.retrieved_re, s.retrieved_lotus, s.strong, s.medium, s.missed
            );
        }
        ReportCommand::Alerts { graph } => {
            let g = load_graph(&graph.kg)?;
            let dir = out_dir(&graph)?;
            let d = alert_distribution_report(&g, None)?;
            fs::write(dir.join("alerts.tsv"), d.to_tsv())?;
            fs::write(dir.join("alerts.charts.json"), serde_json::to_string_pretty(&d.charts())?)?;
            println!("{} organisms", d.rows.len());
        }
        ReportCommand::Biblio { graph, lotus_dump } => {
            let relations = match &lotus_dump {
                Some(p) => LotusDump::load(p)?.all(),
                None => lotus_relations_in_graph(&load_graph(&graph.kg)?),
            };
            let dir = out_dir(&graph)?;
            let b = bibliometrics(&relations);
            fs::write(dir.join("biblio.tsv"), b.to_tsv())?;
            fs::write(dir.join("biblio.chart.json"), serde_json::to_string_pretty(&b.chart())?)?;
            println!("{}", b.summary_line());
        }
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let path = absolute(&graph_path(&a.kg));
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let _lock = DirLock::acquire(&dir)?;
    let graph = load_graph(&path)?;
    let mut config = ApiConfig::new(&a.token);
    config.runs_root = a.runs_root.clone();
    if !a.read_only {
        config.kg_path = Some(path.clone());
    }
    let state = ApiState::new(graph, config);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.addr).await?;
        println!("listening on http://{}", listener.local_addr()?);
        api::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}

fn cmd_fixture(name: &str, dir: &Path) -> Result<()> {
    let set = match name {
        "strictum" => strictum::write(dir)?,
        _ => evaluation::write(dir)?,
    };
    let ids = dir.join("identifications.txt");
    fs::write(&ids, set.identifications.join("\n") + "\n")?;
    println!("config {}", set.config.display());
    println!("identifications {}", ids.display());
    for p in [&set.triples, &set.aliases].into_iter().flatten() {
        println!("{}", p.display());
    }
    Ok(())
}
