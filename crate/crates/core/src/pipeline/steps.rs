use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use super::config::{LiteratureSourceConfig, PipelineConfig};
use super::manifest::{Counters, Failure, Step};
use super::ops::KgOp;
use super::{AblationMode, PipelineError};
use crate::extraction::{
    query_variants, CallLog, ChemicalName, ChemicalStopList, EvidenceSubject, Extractor, Passage,
};
use crate::filtering::{Gate, LexicalModel};
use crate::literature::{
    chunk_fulltext, CachedTransport, CannedEutils, Document, EUtilsClient, FetchOptions,
    HttpTransport, RateLimiter, RetryPolicy, SearchQuery, SearchScope, SystemClock, Transport,
};
use crate::lotus::{LotusDump, LotusSource, LotusSourceConfig, SparqlLotus};
use crate::model::RelationSource;
use crate::taxonomy::{
    expand_identification, load_backbone, normalize_name, parse_identification_with,
    ExpansionOptions, GenusAbbreviations, NameProvenance, TaxonExpansion, TaxonomyIndex,
};

/// What one unit of work produced.
pub(super) struct UnitOutput<T> {
    pub ops: Vec<KgOp>,
    pub counters: Counters,
    pub failures: Vec<Failure>,
    pub payload: T,
}

impl<T: Default> UnitOutput<T> {
    fn empty() -> Self {
        Self {
            ops: Vec::new(),
            counters: Counters::default(),
            failures: Vec::new(),
            payload: T::default(),
        }
    }

    fn fail(&mut self, step: Step, unit: &str, reason: impl Into<String>) {
        self.counters.failures += 1;
        self.failures.push(Failure {
            step,
            unit: unit.to_string(),
            reason: reason.into(),
        });
    }
}

/// Everything the steps call out to, built once per run.
pub(super) struct Services {
    pub index: TaxonomyIndex,
    pub abbreviations: GenusAbbreviations,
    pub expansion: ExpansionOptions,
    pub eutils: EUtilsClient,
    pub activity: Gate,
    pub npr: Gate,
    pub relation: Extractor,
    pub evidence: Extractor,
    pub lotus: LotusSource,
    pub stoplist: ChemicalStopList,
    pub mode: AblationMode,
    pub chunk_size: usize,
    pub chunk_overlap: usize,
    pub chemical_full_text: bool,
}

fn gate(model: &Option<std::path::PathBuf>, threshold: f64) -> Result<Gate, PipelineError> {
    Ok(match model {
        Some(p) => Gate::new(Some(Arc::new(LexicalModel::load(p)?)), threshold),
        None => Gate::new(None, threshold),
    })
}

/// The EUtils client a config describes; `literature_override` replaces the
/// configured source.
pub fn literature_client(
    config: &PipelineConfig,
    literature_override: Option<Arc<dyn Transport>>,
) -> Result<EUtilsClient, PipelineError> {
    let lit = &config.literature;
    let mut eutils_config = lit.eutils.clone();
    Ok(match (literature_override, &lit.source) {
        (Some(t), _) => EUtilsClient::new(eutils_config, t),
        (None, LiteratureSourceConfig::Canned { dir }) => {
            let canned: Arc<dyn Transport> = Arc::new(CannedEutils::load(dir)?);
            let transport: Arc<dyn Transport> = match &lit.cache_dir {
                Some(cache) => Arc::new(CachedTransport::new(canned, cache)?),
                None => canned,
            };
            EUtilsClient::new(eutils_config, transport)
        }
        (None, LiteratureSourceConfig::Live { api_key_env }) => {
            if let Some(var) = api_key_env {
                eutils_config.api_key = Some(std::env::var(var).map_err(|_| {
                    PipelineError::Config {
                        key: "literature.source.api_key_env".into(),
                        reason: format!("environment variable {var} is not set"),
                    }
                })?);
            }
            let clock = Arc::new(SystemClock::default());
            let http: Arc<dyn Transport> = Arc::new(HttpTransport::new(Duration::from_secs(60))?);
            EUtilsClient::with_stack(
                eutils_config,
                http,
                Arc::new(RateLimiter::new(lit.rate_per_second, clock.clone())),
                RetryPolicy {
                    retries: lit.retries,
                    ..RetryPolicy::default()
                },
                clock,
                lit.cache_dir.clone(),
            )?
        }
    })
}

impl Services {
    pub fn build(
        config: &PipelineConfig,
        literature_override: Option<Arc<dyn Transport>>,
        log: Option<Arc<CallLog>>,
    ) -> Result<Self, PipelineError> {
        let (index, report) = load_backbone(File::open(&config.taxonomy.backbone)?)?;
        if !report.quarantined.is_empty() {
            tracing::warn!(rows = report.quarantined.len(), "backbone rows quarantined");
        }
        let mut abbreviations = GenusAbbreviations::new();
        for (abbr, genus) in &config.taxonomy.abbreviations {
            abbreviations.insert(abbr, genus);
        }

        let eutils = literature_client(config, literature_override)?;

        let with_log = |e: Extractor| match &log {
            Some(l) => e.with_log(l.clone()),
            None => e,
        };
        let root = Path::new("/");
        let relation = with_log(Extractor::new(config.backends.relation.build(root)?));
        let evidence = with_log(Extractor::new(config.backends.evidence.build(root)?));

        let lotus = match &config.lotus {
            LotusSourceConfig::Dump { path } => LotusSource::Dump(LotusDump::load(path)?),
            LotusSourceConfig::Endpoint { url } => LotusSource::Endpoint(SparqlLotus::new(
                url,
                Arc::new(HttpTransport::new(Duration::from_secs(120))?),
            )),
            LotusSourceConfig::None => LotusSource::None,
        };

        Ok(Self {
            index,
            abbreviations,
            expansion: ExpansionOptions {
                genus_cap: config.taxonomy.genus_cap,
            },
            eutils,
            activity: gate(&config.filters.activity_model, config.filters.activity_threshold)?,
            npr: gate(&config.filters.npr_model, config.filters.npr_threshold)?,
            relation,
            evidence,
            lotus,
            stoplist: ChemicalStopList::new(&config.run.chemical_stoplist),
            mode: config.run.mode,
            chunk_size: config.run.chunk_size,
            chunk_overlap: config.run.chunk_overlap,
            chemical_full_text: config.literature.chemical_full_text,
        })
    }

    /// Step 1.
    pub fn expand(&self, unit: &str, raw: &str) -> UnitOutput<Vec<TaxonExpansion>> {
        let step = Step::ExpandTaxa;
        let mut out = UnitOutput::empty();
        out.counters.identifications = 1;
        let ident = match parse_identification_with(raw, &self.abbreviations) {
            Ok(i) => i,
            Err(e) => {
                out.fail(step, unit, e.to_string());
                return out;
            }
        };
        let expansions = match expand_identification(&ident, &self.index, self.expansion) {
            Ok(x) => x,
            Err(e) => {
                out.fail(step, unit, e.to_string());
                return out;
            }
        };
        if expansions.is_empty() {
            out.counters.no_taxon_match = 1;
            out.fail(step, unit, format!("NoTaxonMatch: {ident}"));
            return out;
        }
        for x in &expansions {
            out.counters.organisms += 1;
            out.counters.expanded_names += x.names.len() as u64;
            let matched: BTreeSet<&str> = x.matched.iter().map(|m| m.taxon_id.0.as_str()).collect();
            let ids: BTreeSet<&str> = x.members.iter().map(|m| m.record.taxon_id.0.as_str()).collect();
            let root = x.root().map(|r| r.taxon_id.0.clone());
            for m in &x.members {
                let r = &m.record;
                out.ops.push(KgOp::Organism {
                    taxon_id: r.taxon_id.0.clone(),
                    name: r.canonical_name.clone(),
                    scientific_name: r.scientific_name.clone(),
                    status: r.status.label().to_string(),
                    rank: r.rank.label().to_string(),
                    input: matched.contains(r.taxon_id.0.as_str()).then(|| raw.trim().to_string()),
                });
            }
            for m in &x.members {
                let r = &m.record;
                if let Some(acc) = &r.accepted_id {
                    if acc != &r.taxon_id && ids.contains(acc.0.as_str()) {
                        out.ops.push(KgOp::Synonym {
                            synonym: r.taxon_id.0.clone(),
                            accepted: acc.0.clone(),
                        });
                    }
                }
                if m.provenance == NameProvenance::GenusMember {
                    if let Some(root) = &root {
                        out.ops.push(KgOp::Parent {
                            child: r.taxon_id.0.clone(),
                            parent: root.clone(),
                        });
                    }
                }
            }
        }
        out.payload = expansions;
        out
    }

    fn fetch_documents(
        &self,
        names: &[String],
        full_text: bool,
    ) -> Result<(Vec<Document>, Vec<String>), PipelineError> {
        let query = SearchQuery::new(names, SearchScope::TitleAbstract)?;
        let pmids = self.eutils.search(&query)?;
        if pmids.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let fetched = self.eutils.fetch(&pmids, FetchOptions { full_text })?;
        Ok((fetched.documents, fetched.record_errors))
    }

    /// Steps 2 and 7.
    pub fn literature(&self, step: Step, unit: &str, names: &[String], full_text: bool) -> UnitOutput<Vec<Document>> {
        let mut out = UnitOutput::empty();
        match self.fetch_documents(names, full_text) {
            Ok((docs, errors)) => {
                for e in errors {
                    out.fail(step, unit, e);
                }
                match step {
                    Step::ChemicalLiterature => out.counters.chemical_documents = docs.len() as u64,
                    _ => out.counters.organism_documents = docs.len() as u64,
                }
                out.payload = docs;
            }
            Err(e) => out.fail(step, unit, e.to_string()),
        }
        out
    }

    /// Steps 3, 5 and 8: keys of the documents the gate admits.
    pub fn filter(&self, step: Step, docs: &[Document]) -> UnitOutput<Vec<String>> {
        let mut out = UnitOutput::empty();
        let gate = match step {
            Step::NprFilter => &self.npr,
            _ => &self.activity,
        };
        let passed: Vec<String> = docs
            .iter()
            .filter(|d| gate.admits(&d.title_abstract()))
            .map(|d| d.doc_ref.key())
            .collect();
        let (n_in, n_out) = (docs.len() as u64, passed.len() as u64);
        match step {
            Step::NprFilter => (out.counters.npr_in, out.counters.npr_out) = (n_in, n_out),
            Step::ChemicalActivityFilter => {
                (out.counters.chemical_activity_in, out.counters.chemical_activity_out) = (n_in, n_out)
            }
            _ => {
                (out.counters.organism_activity_in, out.counters.organism_activity_out) = (n_in, n_out)
            }
        }
        out.payload = passed;
        out
    }

    /// Steps 4 and 9: two-stage evidence over each admitted document.
    pub fn evidence(
        &self,
        step: Step,
        unit: &str,
        docs: &[&Document],
        subject_for: impl Fn(&Document) -> EvidenceSubject,
    ) -> UnitOutput<()> {
        let mut out = UnitOutput::empty();
        for doc in docs {
            let subject = subject_for(doc);
            let mut texts = vec![doc.title_abstract()];
            if step == Step::ChemicalEvidence && self.chemical_full_text && !doc.paragraphs.is_empty() {
                texts.extend(
                    chunk_fulltext(&doc.full_text(), self.chunk_size, self.chunk_overlap)
                        .iter()
                        .map(|c| c.passage().to_string())
                        .filter(|p| !p.is_empty()),
                );
            }
            for text in texts.iter().filter(|t| !t.trim().is_empty()) {
                match self.evidence.assess(text, subject.clone(), &doc.doc_ref) {
                    Ok(ev) => {
                        out.counters.evidence.add(ev.kind(), ev.level);
                        out.ops.push(KgOp::Evidence {
                            subject: ev.subject,
                            level: ev.level,
                            rationale: ev.rationale,
                            doc: ev.doc,
                            year: doc.pub_year,
                            found: ev.evidence_found,
                            backend: ev.provenance.backend.to_string(),
                            prompts: ev.provenance.prompts.iter().map(|p| p.template.clone()).collect(),
                        });
                    }
                    Err(e) => out.fail(step, unit, format!("{}: {e}", doc.doc_ref.key())),
                }
            }
        }
        out
    }

    /// Step 6: relation extraction over abstracts and full-text chunks, then
    /// the LOTUS merge. The payload lists the chemicals related to the organism.
    pub fn relations(
        &self,
        unit: &str,
        expansion: &TaxonExpansion,
        docs: &[&Document],
    ) -> UnitOutput<Vec<ChemicalName>> {
        let step = Step::RelationExtraction;
        let mut out = UnitOutput::empty();
        let by_name: BTreeMap<String, String> = expansion
            .members
            .iter()
            .map(|m| (normalize_name(&m.record.canonical_name), m.record.taxon_id.0.clone()))
            .collect();
        let names: BTreeSet<String> = expansion.names.keys().cloned().collect();
        let mut seen = BTreeSet::new();
        let mut chemicals = BTreeSet::new();
        let mut push = |out: &mut UnitOutput<Vec<ChemicalName>>, op: KgOp| {
            if let KgOp::Relation {
                organism,
                chemical,
                source,
                doc,
                ..
            } = &op
            {
                if seen.insert((organism.clone(), chemical.key.clone(), *source, doc.key())) {
                    *out.counters.relations.entry(*source).or_insert(0) += 1;
                }
                chemicals.insert(chemical.clone());
            }
            out.ops.push(op);
        };

        if self.mode != AblationMode::LotusOnly {
            for doc in docs {
                let mut passages = vec![(
                    "abstract".to_string(),
                    RelationSource::TiabNPR,
                    doc.title_abstract(),
                )];
                if !doc.paragraphs.is_empty() {
                    for (i, c) in chunk_fulltext(&doc.full_text(), self.chunk_size, self.chunk_overlap)
                        .iter()
                        .enumerate()
                    {
                        if !c.passage().is_empty() {
                            passages.push((format!("chunk-{i}"), RelationSource::ChunkNPR, c.passage().to_string()));
                        }
                    }
                }
                for (pid, source, text) in passages {
                    if text.trim().is_empty() {
                        continue;
                    }
                    out.counters.passages += 1;
                    let passage = Passage {
                        text: &text,
                        doc: &doc.doc_ref,
                        passage_id: &pid,
                        source,
                    };
                    let found = match self.relation.extract_relations(passage, &names) {
                        Ok(f) => f,
                        Err(e) => {
                            out.fail(step, unit, format!("{} {pid}: {e}", doc.doc_ref.key()));
                            continue;
                        }
                    };
                    for cand in found.candidates {
                        let taxon = cand
                            .matched_organism
                            .as_deref()
                            .and_then(|n| by_name.get(&normalize_name(n)));
                        let Some(taxon) = taxon else {
                            out.counters.off_target_mentions += 1;
                            continue;
                        };
                        if self.stoplist.contains(&cand.chemical) {
                            continue;
                        }
                        let origin = if source == RelationSource::TiabNPR { "abstract" } else { "paragraph" };
                        push(
                            &mut out,
                            KgOp::Relation {
                                organism: taxon.clone(),
                                chemical: cand.chemical,
                                source,
                                doc: doc.doc_ref.clone(),
                                year: doc.pub_year,
                                text: Some((origin.to_string(), text.clone())),
                            },
                        );
                    }
                }
            }
        }

        if self.mode != AblationMode::ReOnly {
            match self.lotus.fetch_relations(&names) {
                Ok(fetched) => {
                    if fetched.malformed > 0 {
                        out.fail(step, unit, format!("{} malformed LOTUS rows", fetched.malformed));
                    }
                    for rel in fetched.relations {
                        let Some(taxon) = by_name.get(&normalize_name(&rel.organism_name)) else {
                            continue;
                        };
                        if self.stoplist.contains(&rel.chemical) {
                            continue;
                        }
                        push(
                            &mut out,
                            KgOp::Relation {
                                organism: taxon.clone(),
                                chemical: rel.chemical,
                                source: RelationSource::LotusNPR,
                                doc: rel.reference,
                                year: rel.reference_year,
                                text: None,
                            },
                        );
                    }
                }
                Err(e) => out.fail(step, unit, format!("LOTUS: {e}")),
            }
        }
        out.payload = chemicals.into_iter().collect();
        out
    }

    pub fn chemical_names(chemical: &ChemicalName) -> Vec<String> {
        query_variants(chemical)
    }
}

/// The expansion member a document talks about: the first name found in the
/// text, else the accepted root.
pub(super) fn organism_subject(expansion: &TaxonExpansion, doc: &Document) -> EvidenceSubject {
    let text = doc.title_abstract().to_lowercase();
    let mentioned = expansion
        .members
        .iter()
        .find(|m| text.contains(&normalize_name(&m.record.canonical_name)));
    let record = mentioned
        .map(|m| &m.record)
        .or_else(|| expansion.root())
        .expect("expansions are never empty");
    EvidenceSubject::Organism {
        taxon_id: record.taxon_id.0.clone(),
        name: record.canonical_name.clone(),
    }
}
