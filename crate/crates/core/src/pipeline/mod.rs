//! Batch orchestration of the nine steps, from identifications to graded
//! evidence, with per-unit checkpoints so an interrupted run can resume.
//!
//! Steps run one after another over all units (organisms for steps 1 to 6,
//! chemicals for 7 to 9). Units within a step run concurrently; their graph
//! operations are applied in unit order, so results do not depend on timing.

mod config;
mod manifest;
mod ops;
mod steps;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use config::{
    AblationMode, BackendsConfig, FiltersConfig, LiteratureConfig, LiteratureSourceConfig,
    PipelineConfig, RunConfig, TaxonomyConfig,
};
pub use manifest::{
    Checkpoint, Counters, Failure, RunManifest, RunStatus, Step, CHECKPOINT_FORMAT,
    MANIFEST_FORMAT, RUN_FORMAT_VERSION,
};
pub use ops::{apply, KgOp};

use crate::extraction::{BackendError, CallLog, ChemicalName, EvidenceSubject};
use crate::filtering::FilterError;
use crate::kg::{KgError, KnowledgeGraph};
use crate::literature::{Document, LiteratureError, Transport, TransportError};
use crate::lotus::LotusError;
use crate::taxonomy::{TaxonExpansion, TaxonomyError};
use manifest::Checkpoint as Cp;
pub use steps::literature_client;
use steps::{organism_subject, Services, UnitOutput};

pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const KG_FILE: &str = "kg.jsonl";
pub const CALL_LOG_FILE: &str = "logs/extraction.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("config digest {found} differs from the run's {expected}")]
    ConfigDrift { expected: String, found: String },
    #[error("checkpoint {0} is recorded in the manifest but missing on disk")]
    MissingCheckpoint(String),
    #[error("{0} already holds a run")]
    RunExists(PathBuf),
    #[error("unsupported run file format: {0}")]
    Format(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Lotus(#[from] LotusError),
    #[error(transparent)]
    Literature(#[from] LiteratureError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub graph: KnowledgeGraph,
    pub manifest: RunManifest,
    pub run_dir: PathBuf,
}

/// A configured pipeline. `run` starts a run directory, `resume` continues one.
pub struct Pipeline {
    config: PipelineConfig,
    literature: Option<Arc<dyn Transport>>,
    halt_after: Option<Step>,
}

struct RunState<'a> {
    run_dir: &'a Path,
    manifest: Mutex<RunManifest>,
}

impl RunState<'_> {
    fn save_manifest(&self) -> Result<(), PipelineError> {
        let m = self.manifest.lock().unwrap();
        m.save(&self.run_dir.join(MANIFEST_FILE))
    }
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            config,
            literature: None,
            halt_after: None,
        })
    }

    /// Replaces the configured literature source, e.g. with a counting wrapper.
    pub fn with_literature_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.literature = Some(transport);
        self
    }

    /// Stops cleanly once `step` has completed for every unit.
    pub fn halt_after(mut self, step: Option<Step>) -> Self {
        self.halt_after = step;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn run(&self, identifications: &[String], run_dir: &Path) -> Result<RunOutcome, PipelineError> {
        if run_dir.join(MANIFEST_FILE).exists() {
            return Err(PipelineError::RunExists(run_dir.to_path_buf()));
        }
        std::fs::create_dir_all(run_dir)?;
        std::fs::write(run_dir.join(CONFIG_SNAPSHOT), self.config.to_toml())?;
        let run_id = uuid::Uuid::new_v4().simple().to_string();
        let manifest = RunManifest::new(
            &run_id,
            &self.config.digest(),
            self.config.run.mode,
            identifications,
        );
        manifest.save(&run_dir.join(MANIFEST_FILE))?;
        tracing::info!(run_id, dir = %run_dir.display(), "run started");
        self.execute(run_dir, manifest)
    }

    pub fn resume(&self, run_dir: &Path) -> Result<RunOutcome, PipelineError> {
        let manifest = RunManifest::load(&run_dir.join(MANIFEST_FILE))?;
        let found = self.config.digest();
        if manifest.config_digest != found {
            return Err(PipelineError::ConfigDrift {
                expected: manifest.config_digest,
                found,
            });
        }
        tracing::info!(run_id = %manifest.run_id, "resuming run");
        self.execute(run_dir, manifest)
    }

    fn execute(&self, run_dir: &Path, mut manifest: RunManifest) -> Result<RunOutcome, PipelineError> {
        let log = Arc::new(CallLog::open(&run_dir.join(CALL_LOG_FILE))?);
        let services = Services::build(&self.config, self.literature.clone(), Some(log))?;
        manifest.status = RunStatus::Running;
        let identifications = manifest.identifications.clone();
        let state = RunState {
            run_dir,
            manifest: Mutex::new(manifest),
        };
        state.save_manifest()?;
        let mut graph = KnowledgeGraph::new();

        // Step 1, one unit per distinct identification.
        let mut seen = BTreeSet::new();
        let idents: Vec<(String, String)> = identifications
            .iter()
            .map(|raw| raw.trim().to_string())
            .filter(|raw| seen.insert(raw.clone()))
            .map(|raw| (format!("ident:{raw}"), raw))
            .collect();
        let expanded = self.step(&state, Step::ExpandTaxa, &idents, &mut graph, |unit, raw| {
            services.expand(unit, raw)
        })?;
        if self.stop(&state, Step::ExpandTaxa, &graph)? {
            return self.finish(state, graph);
        }

        let mut organisms: BTreeMap<String, TaxonExpansion> = BTreeMap::new();
        for x in expanded.into_iter().flatten() {
            let key = format!("taxon:{}", x.matched[0].taxon_id);
            organisms.entry(key).or_insert(x);
        }
        let org_units: Vec<(String, &TaxonExpansion)> =
            organisms.iter().map(|(k, x)| (k.clone(), x)).collect();

        let org_docs = self.step(&state, Step::OrganismLiterature, &org_units, &mut graph, |unit, x| {
            let names: Vec<String> = x.names.keys().cloned().collect();
            services.literature(Step::OrganismLiterature, unit, &names, true)
        })?;
        let docs_by_org: BTreeMap<&str, Vec<Document>> = org_units
            .iter()
            .map(|(k, _)| k.as_str())
            .zip(org_docs)
            .collect();
        if self.stop(&state, Step::OrganismLiterature, &graph)? {
            return self.finish(state, graph);
        }

        let active = self.step(&state, Step::OrganismActivityFilter, &org_units, &mut graph, |unit, _| {
            services.filter(Step::OrganismActivityFilter, &docs_by_org[unit])
        })?;
        if self.stop(&state, Step::OrganismActivityFilter, &graph)? {
            return self.finish(state, graph);
        }

        let pick = |unit: &str, keys: &[String]| -> Vec<&Document> {
            let keys: BTreeSet<&String> = keys.iter().collect();
            docs_by_org[unit]
                .iter()
                .filter(|d| keys.contains(&d.doc_ref.key()))
                .collect()
        };
        let active_by_org: BTreeMap<&str, &Vec<String>> = org_units
            .iter()
            .map(|(k, _)| k.as_str())
            .zip(active.iter())
            .collect();
        self.step(&state, Step::OrganismEvidence, &org_units, &mut graph, |unit, x| {
            let docs = pick(unit, active_by_org[unit]);
            services.evidence(Step::OrganismEvidence, unit, &docs, |d| organism_subject(x, d))
        })?;
        if self.stop(&state, Step::OrganismEvidence, &graph)? {
            return self.finish(state, graph);
        }

        let npr = self.step(&state, Step::NprFilter, &org_units, &mut graph, |unit, _| {
            services.filter(Step::NprFilter, &docs_by_org[unit])
        })?;
        if self.stop(&state, Step::NprFilter, &graph)? {
            return self.finish(state, graph);
        }

        let npr_by_org: BTreeMap<&str, &Vec<String>> = org_units
            .iter()
            .map(|(k, _)| k.as_str())
            .zip(npr.iter())
            .collect();
        let related = self.step(&state, Step::RelationExtraction, &org_units, &mut graph, |unit, x| {
            let docs = pick(unit, npr_by_org[unit]);
            services.relations(unit, x, &docs)
        })?;
        if self.stop(&state, Step::RelationExtraction, &graph)? {
            return self.finish(state, graph);
        }

        // Steps 7 to 9, one unit per distinct chemical across all organisms.
        let chemicals: BTreeMap<String, ChemicalName> = related
            .into_iter()
            .flatten()
            .map(|c| (format!("chem:{}", c.key), c))
            .collect();
        let chem_units: Vec<(String, &ChemicalName)> =
            chemicals.iter().map(|(k, c)| (k.clone(), c)).collect();
        let full_text = self.config.literature.chemical_full_text;
        let chem_docs = self.step(&state, Step::ChemicalLiterature, &chem_units, &mut graph, |unit, c| {
            let mut out = services.literature(
                Step::ChemicalLiterature,
                unit,
                &Services::chemical_names(c),
                full_text,
            );
            out.counters.chemicals = 1;
            out
        })?;
        let docs_by_chem: BTreeMap<&str, Vec<Document>> = chem_units
            .iter()
            .map(|(k, _)| k.as_str())
            .zip(chem_docs)
            .collect();
        if self.stop(&state, Step::ChemicalLiterature, &graph)? {
            return self.finish(state, graph);
        }

        let chem_active = self.step(&state, Step::ChemicalActivityFilter, &chem_units, &mut graph, |unit, _| {
            services.filter(Step::ChemicalActivityFilter, &docs_by_chem[unit])
        })?;
        if self.stop(&state, Step::ChemicalActivityFilter, &graph)? {
            return self.finish(state, graph);
        }

        let chem_active_by: BTreeMap<&str, &Vec<String>> = chem_units
            .iter()
            .map(|(k, _)| k.as_str())
            .zip(chem_active.iter())
            .collect();
        self.step(&state, Step::ChemicalEvidence, &chem_units, &mut graph, |unit, c| {
            let keys: BTreeSet<&String> = chem_active_by[unit].iter().collect();
            let docs: Vec<&Document> = docs_by_chem[unit]
                .iter()
                .filter(|d| keys.contains(&d.doc_ref.key()))
                .collect();
            let subject = EvidenceSubject::Chemical {
                key: c.key.clone(),
                display: c.display.clone(),
            };
            services.evidence(Step::ChemicalEvidence, unit, &docs, |_| subject.clone())
        })?;
        self.stop(&state, Step::ChemicalEvidence, &graph)?;
        {
            let mut m = state.manifest.lock().unwrap();
            m.status = RunStatus::Completed;
        }
        self.finish(state, graph)
    }

    /// Marks `step` complete and reports whether to halt here.
    fn stop(&self, state: &RunState<'_>, step: Step, graph: &KnowledgeGraph) -> Result<bool, PipelineError> {
        let halt = self.halt_after == Some(step);
        {
            let mut m = state.manifest.lock().unwrap();
            if m.completed_step.is_none_or(|s| s < step) {
                m.completed_step = Some(step);
            }
            if halt {
                m.status = RunStatus::Halted;
            }
        }
        state.save_manifest()?;
        if halt {
            tracing::info!(%step, "halting as requested");
            graph.save(&state.run_dir.join(KG_FILE))?;
        }
        Ok(halt)
    }

    fn finish(&self, state: RunState<'_>, graph: KnowledgeGraph) -> Result<RunOutcome, PipelineError> {
        graph.save(&state.run_dir.join(KG_FILE))?;
        state.save_manifest()?;
        let manifest = state.manifest.into_inner().unwrap();
        Ok(RunOutcome {
            graph,
            manifest,
            run_dir: state.run_dir.to_path_buf(),
        })
    }

    /// Runs every unit of one step, reusing recorded checkpoints, then applies
    /// the graph operations in unit order. Returns payloads in unit order.
    fn step<I, T, F>(
        &self,
        state: &RunState<'_>,
        step: Step,
        units: &[(String, I)],
        graph: &mut KnowledgeGraph,
        work: F,
    ) -> Result<Vec<T>, PipelineError>
    where
        I: Sync,
        T: Serialize + DeserializeOwned,
        F: Fn(&str, &I) -> UnitOutput<T> + Sync,
    {
        let results: Vec<Mutex<Option<Result<Cp, PipelineError>>>> =
            units.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.run.parallelism.min(units.len()).max(1);
        let run_one = |i: usize| -> Result<Cp, PipelineError> {
            let (unit, input) = &units[i];
            let recorded = state.manifest.lock().unwrap().has_checkpoint(step, unit);
            if recorded {
                return Cp::load(state.run_dir, step, unit);
            }
            let out = work(unit, input);
            let cp = Cp {
                format: CHECKPOINT_FORMAT.into(),
                version: RUN_FORMAT_VERSION,
                step,
                unit: unit.clone(),
                ops: out.ops,
                counters: out.counters,
                failures: out.failures,
                payload: serde_json::to_value(out.payload)?,
            };
            cp.save(state.run_dir)?;
            let mut m = state.manifest.lock().unwrap();
            m.record(&cp);
            m.save(&state.run_dir.join(MANIFEST_FILE))?;
            Ok(cp)
        };
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= units.len() {
                        break;
                    }
                    let r = run_one(i);
                    *results[i].lock().unwrap() = Some(r);
                });
            }
        });
        let mut payloads = Vec::with_capacity(units.len());
        for slot in results {
            let cp = slot.into_inner().unwrap().expect("every unit ran")?;
            for op in &cp.ops {
                apply(graph, op)?;
            }
            payloads.push(serde_json::from_value(cp.payload)?);
        }
        tracing::debug!(%step, units = units.len(), "step complete");
        Ok(payloads)
    }
}

/// Reads the manifest of a run directory.
pub fn load_manifest(run_dir: &Path) -> Result<RunManifest, PipelineError> {
    RunManifest::load(&run_dir.join(MANIFEST_FILE))
}
