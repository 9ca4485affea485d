//! Evaluation artifacts: comparison against reviewer triples, per-organism
//! alert distributions and LOTUS reference statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::normalize_chemical_name;
use crate::kg::{AlertSummary, EdgeLabel, KgError, KnowledgeGraph, NodeId, NodeKind, KG_FORMAT_VERSION};
use crate::literature::DocumentRef;
use crate::lotus::{reference_stats, LotusRelation, ReferenceStats};
use crate::model::{AlertLevel, EvidenceKind, RelationSource};
use crate::taxonomy::normalize_name;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One reviewer finding: an organism, a chemical isolated from it, and where
/// isolation and activity were reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertTriple {
    pub organism: String,
    pub chemical: String,
    pub isolation_ref: DocumentRef,
    pub activity_ref: DocumentRef,
    pub via_synonym: Option<String>,
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn columns<R: Read>(rdr: &mut csv::Reader<R>, wanted: &[&str]) -> Result<Vec<usize>, ReportError> {
    let headers = rdr.headers()?.clone();
    wanted
        .iter()
        .map(|w| {
            headers
                .iter()
                .position(|h| h.trim() == *w)
                .ok_or_else(|| ReportError::MissingColumn(w.to_string()))
        })
        .collect()
}

/// Reads `organism, chemical, isolation_ref, activity_ref[, via_synonym]`
/// rows. References take the `pmid:`/`doi:` forms or a bare PubMed id.
pub fn read_triples<R: Read>(reader: R) -> Result<Vec<ExpertTriple>, ReportError> {
    let mut rdr = tsv_reader(reader);
    let idx = columns(&mut rdr, &["organism", "chemical", "isolation_ref", "activity_ref"])?;
    let syn = rdr.headers()?.iter().position(|h| h.trim() == "via_synonym");
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let text = |k: usize, name: &str| -> Result<String, ReportError> {
            let v = field(k);
            if v.is_empty() {
                return Err(ReportError::Parse {
                    line,
                    reason: format!("empty {name}"),
                });
            }
            Ok(v.to_string())
        };
        let reference = |k: usize, name: &str| -> Result<DocumentRef, ReportError> {
            text(k, name)?.parse().map_err(|e| ReportError::Parse {
                line,
                reason: format!("{name}: {e}"),
            })
        };
        out.push(ExpertTriple {
            organism: text(idx[0], "organism")?,
            chemical: text(idx[1], "chemical")?,
            isolation_ref: reference(idx[2], "isolation_ref")?,
            activity_ref: reference(idx[3], "activity_ref")?,
            via_synonym: syn.map(field).filter(|s| !s.is_empty()).map(str::to_string),
        });
    }
    Ok(out)
}

/// Reviewer spelling → name used in the graph, both keyed like chemicals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChemicalAliases {
    map: BTreeMap<String, String>,
}

impl ChemicalAliases {
    pub fn insert(&mut self, alias: &str, name: &str) {
        if let (Ok(a), Ok(n)) = (normalize_chemical_name(alias), normalize_chemical_name(name)) {
            self.map.insert(a.key, n.key);
        }
    }

    /// Reads `alias, name` rows.
    pub fn read<R: Read>(reader: R) -> Result<Self, ReportError> {
        let mut rdr = tsv_reader(reader);
        let idx = columns(&mut rdr, &["alias", "name"])?;
        let mut out = Self::default();
        for rec in rdr.records() {
            let rec = rec?;
            out.insert(rec.get(idx[0]).unwrap_or(""), rec.get(idx[1]).unwrap_or(""));
        }
        Ok(out)
    }

    /// The graph key for a reviewer's chemical name.
    pub fn resolve(&self, chemical: &str) -> Option<String> {
        let key = normalize_chemical_name(chemical).ok()?.key;
        Some(self.map.get(&key).cloned().unwrap_or(key))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SystemLevel {
    Strong,
    Medium,
    Weak,
    Missed,
}

impl SystemLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Strong => "Strong",
            Self::Medium => "Medium",
            Self::Weak => "Weak",
            Self::Missed => "Missed",
        }
    }
}

impl fmt::Display for SystemLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MissedReason {
    /// Neither relation extraction nor LOTUS links the chemical to the organism.
    NotRetrieved,
    /// Retrieved, but no Strong or Medium activity evidence.
    NoActivityEvidence,
    /// Retrieved, no usable evidence, and the reviewers' activity reference
    /// is not a PubMed record.
    UnreachableReference,
}

impl MissedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NotRetrieved => "NotRetrieved",
            Self::NoActivityEvidence => "NoActivityEvidence",
            Self::UnreachableReference => "UnreachableReference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleStatus {
    pub triple: ExpertTriple,
    pub relation_found_re: bool,
    pub relation_found_lotus: bool,
    pub system_level: SystemLevel,
    pub missed_reason: Option<MissedReason>,
    /// Highest CL level on the chemical, whether or not it counts.
    pub best_level: Option<AlertLevel>,
    /// Evidence nodes at `best_level`.
    pub evidence: Vec<NodeId>,
    pub diagnostics: Vec<String>,
}

impl TripleStatus {
    pub fn retrieved(&self) -> bool {
        self.relation_found_re || self.relation_found_lotus
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub total: usize,
    pub retrieved: usize,
    pub retrieved_re: usize,
    pub retrieved_lotus: usize,
    pub strong: usize,
    pub medium: usize,
    pub missed: usize,
    pub missed_by_reason: BTreeMap<MissedReason, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<TripleStatus>,
    pub summary: ComparisonSummary,
}

fn organism_node(g: &KnowledgeGraph, name: &str) -> Option<NodeId> {
    let key = normalize_name(name);
    let mut hits: Vec<_> = g
        .nodes_of_kind(NodeKind::Organism)
        .filter(|n| n.attr("name").is_some_and(|v| normalize_name(v) == key))
        .collect();
    // Prefer the node a user asked about.
    hits.sort_by_key(|n| (n.attr("inputs").is_none_or(str::is_empty), n.id.clone()));
    hits.first().map(|n| n.id.clone())
}

fn level_of(g: &KnowledgeGraph, ev: &NodeId) -> Option<AlertLevel> {
    g.node(ev)?.attr("level")?.parse().ok()
}

fn compare_one(g: &KnowledgeGraph, triple: &ExpertTriple, aliases: &ChemicalAliases) -> Result<TripleStatus, ReportError> {
    let mut status = TripleStatus {
        triple: triple.clone(),
        relation_found_re: false,
        relation_found_lotus: false,
        system_level: SystemLevel::Missed,
        missed_reason: Some(MissedReason::NotRetrieved),
        best_level: None,
        evidence: Vec::new(),
        diagnostics: Vec::new(),
    };
    if let Some(syn) = &triple.via_synonym {
        status.diagnostics.push(format!("reported under synonym {syn}"));
    }
    let Some(org) = organism_node(g, &triple.organism) else {
        status.diagnostics.push(format!("organism {} not in graph", triple.organism));
        return Ok(status);
    };
    let Some(key) = aliases.resolve(&triple.chemical) else {
        status.diagnostics.push(format!("chemical name {:?} is empty", triple.chemical));
        return Ok(status);
    };
    let Some(chem) = g.chemical_id(&key) else {
        status.diagnostics.push(format!("chemical {key} not in graph"));
        return Ok(status);
    };

    for rel in g.relations_in_scope(&org)? {
        if !g.outgoing(&rel, EdgeLabel::relationObjectChemical).any(|c| *c == chem) {
            continue;
        }
        let source: Option<RelationSource> = g.node(&rel).and_then(|n| n.attr("source")).and_then(|s| s.parse().ok());
        match source {
            Some(RelationSource::LotusNPR) => status.relation_found_lotus = true,
            Some(_) => status.relation_found_re = true,
            None => {}
        }
    }

    let mut by_level: BTreeMap<AlertLevel, Vec<NodeId>> = BTreeMap::new();
    for ev in g.incoming(&chem, EdgeLabel::evidenceSubject) {
        let kind: Option<EvidenceKind> = g.node(ev).and_then(|n| n.attr("kind")).and_then(|k| k.parse().ok());
        if kind != Some(EvidenceKind::CL) {
            continue;
        }
        if let Some(level) = level_of(g, ev) {
            by_level.entry(level).or_default().push(ev.clone());
        }
    }
    if let Some((level, evs)) = by_level.into_iter().next_back() {
        status.best_level = Some(level);
        status.evidence = evs;
    }

    if !status.retrieved() {
        status.diagnostics.push(format!("no relation to {key} in the organism's scope"));
        return Ok(status);
    }
    match status.best_level {
        Some(AlertLevel::Strong) => {
            status.system_level = SystemLevel::Strong;
            status.missed_reason = None;
        }
        Some(AlertLevel::Medium) => {
            status.system_level = SystemLevel::Medium;
            status.missed_reason = None;
        }
        _ => {
            status.missed_reason = Some(if triple.activity_ref.pmid.is_none() {
                MissedReason::UnreachableReference
            } else {
                MissedReason::NoActivityEvidence
            });
        }
    }
    Ok(status)
}

/// Scores each reviewer triple against the graph. A triple is Missed when the
/// chemical is not related to the organism (or a synonym or genus member) by
/// any source, or when its best CL evidence is Weak or absent.
pub fn compare_with_reference(
    g: &KnowledgeGraph,
    triples: &[ExpertTriple],
    aliases: &ChemicalAliases,
) -> Result<Comparison, ReportError> {
    let rows = triples
        .iter()
        .map(|t| compare_one(g, t, aliases))
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = ComparisonSummary {
        total: rows.len(),
        ..Default::default()
    };
    for r in &rows {
        s.retrieved += r.retrieved() as usize;
        s.retrieved_re += r.relation_found_re as usize;
        s.retrieved_lotus += r.relation_found_lotus as usize;
        match r.system_level {
            SystemLevel::Strong => s.strong += 1,
            SystemLevel::Medium => s.medium += 1,
            SystemLevel::Weak => {}
            SystemLevel::Missed => {
                s.missed += 1;
                if let Some(reason) = r.missed_reason {
                    *s.missed_by_reason.entry(reason).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(Comparison { rows, summary: s })
}

fn tick(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl Comparison {
    pub fn to_tsv(&self, g: &KnowledgeGraph) -> String {
        let mut out = String::from(
            "organism\tchemical\tvia_synonym\tre\tlotus\tcl_evidence\treason\tbest_level\tevidence_refs\n",
        );
        for r in &self.rows {
            let refs: BTreeSet<String> = r
                .evidence
                .iter()
                .filter_map(|e| g.outgoing(e, EdgeLabel::reportedInLiterature).next())
                .filter_map(|l| g.node(l)?.attr("ref").map(str::to_string))
                .collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.triple.organism,
                r.triple.chemical,
                r.triple.via_synonym.as_deref().unwrap_or(""),
                tick(r.relation_found_re),
                tick(r.relation_found_lotus),
                r.system_level,
                r.missed_reason.map(MissedReason::as_str).unwrap_or(""),
                r.best_level.map(AlertLevel::as_str).unwrap_or(""),
                refs.into_iter().collect::<Vec<_>>().join(",")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub organism: NodeId,
    pub name: String,
    pub summary: AlertSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

/// Plot-ready data: one category per x position, one series per bar group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartData {
    pub format_version: u32,
    pub title: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertDistribution {
    pub rows: Vec<DistributionRow>,
}

/// Alert counts per organism. With no organisms given, every organism a user
/// asked about is reported, by name.
pub fn alert_distribution_report(
    g: &KnowledgeGraph,
    organisms: Option<&[NodeId]>,
) -> Result<AlertDistribution, ReportError> {
    let ids: Vec<NodeId> = match organisms {
        Some(ids) => ids.to_vec(),
        None => g.anchor_organisms(),
    };
    let mut rows = Vec::with_capacity(ids.len());
    for id in ids {
        let name = g.require(&id)?.attr("name").unwrap_or_default().to_string();
        rows.push(DistributionRow {
            summary: g.alert_summary(&id)?,
            organism: id,
            name,
        });
    }
    if organisms.is_none() {
        rows.sort_by(|a, b| a.name.cmp(&b.name).then(a.organism.cmp(&b.organism)));
    }
    Ok(AlertDistribution { rows })
}

impl AlertDistribution {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("organism_id\tname");
        for kind in EvidenceKind::ALL {
            for level in AlertLevel::ALL {
                let _ = write!(out, "\t{kind}_{level}");
            }
        }
        out.push_str("\ttotal\n");
        for r in &self.rows {
            let _ = write!(out, "{}\t{}", r.organism, r.name);
            for kind in EvidenceKind::ALL {
                for level in AlertLevel::ALL {
                    let _ = write!(out, "\t{}", r.summary.get(kind, level));
                }
            }
            let _ = writeln!(out, "\t{}", r.summary.total());
        }
        out
    }

    /// One chart per evidence kind, with a series per level.
    pub fn charts(&self) -> Vec<ChartData> {
        EvidenceKind::ALL
            .iter()
            .map(|kind| ChartData {
                format_version: KG_FORMAT_VERSION,
                title: format!("{kind} alerts per organism"),
                categories: self.rows.iter().map(|r| r.name.clone()).collect(),
                series: AlertLevel::ALL
                    .iter()
                    .map(|level| Series {
                        label: level.to_string(),
                        values: self
                            .rows
                            .iter()
                            .map(|r| r.summary.get(*kind, *level) as f64)
                            .collect(),
                    })
                    .collect(),
            })
            .collect()
    }
}

/// Publication years of LOTUS references and the share indexed in PubMed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bibliometrics {
    pub stats: ReferenceStats,
}

pub fn bibliometrics(relations: &[LotusRelation]) -> Bibliometrics {
    // One count per distinct reference.
    let mut seen = BTreeSet::new();
    let unique: Vec<LotusRelation> = relations
        .iter()
        .filter(|r| seen.insert(r.reference.key()))
        .cloned()
        .collect();
    Bibliometrics {
        stats: reference_stats(&unique),
    }
}

/// LOTUS relations recorded in a graph, rebuilt from relation nodes.
pub fn lotus_relations_in_graph(g: &KnowledgeGraph) -> Vec<LotusRelation> {
    let mut out = Vec::new();
    for rel in g.nodes_of_kind(NodeKind::RelationNode) {
        if rel.attr("source") != Some(RelationSource::LotusNPR.as_str()) {
            continue;
        }
        let node = |label| g.outgoing(&rel.id, label).next().and_then(|id| g.node(id));
        let (Some(org), Some(chem), Some(lit)) = (
            node(EdgeLabel::relationSubjectOrganism),
            node(EdgeLabel::relationObjectChemical),
            node(EdgeLabel::reportedInLiterature),
        ) else {
            continue;
        };
        let Some(reference) = lit.attr("ref").and_then(|r| r.parse::<DocumentRef>().ok()) else {
            continue;
        };
        out.push(LotusRelation {
            organism_name: org.attr("name").unwrap_or_default().to_string(),
            chemical: crate::extraction::ChemicalName {
                key: chem.attr("key").unwrap_or_default().to_string(),
                display: chem.attr("display").unwrap_or_default().to_string(),
            },
            structure_id: None,
            reference,
            reference_year: lit.attr("year").and_then(|y| y.parse().ok()),
        });
    }
    out
}

impl Bibliometrics {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("year\treferences\n");
        for (year, n) in &self.stats.year_histogram {
            let _ = writeln!(out, "{year}\t{n}");
        }
        if self.stats.unknown_year > 0 {
            let _ = writeln!(out, "unknown\t{}", self.stats.unknown_year);
        }
        out
    }

    pub fn chart(&self) -> ChartData {
        ChartData {
            format_version: KG_FORMAT_VERSION,
            title: "LOTUS references per publication year".into(),
            categories: self.stats.year_histogram.keys().map(|y| y.to_string()).collect(),
            series: vec![Series {
                label: "references".into(),
                values: self.stats.year_histogram.values().map(|n| *n as f64).collect(),
            }],
        }
    }

    pub fn summary_line(&self) -> String {
        match self.stats.pmid_fraction {
            Some(f) => format!(
                "{} references, {} with a PubMed id ({:.1}%)",
                self.stats.total,
                self.stats.with_pmid,
                f * 100.0
            ),
            None => "no references".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::normalize_chemical_name;
    use crate::kg::attrs;

    fn chem(name: &str) -> crate::extraction::ChemicalName {
        normalize_chemical_name(name).unwrap()
    }

    /// Accepted organism with a synonym; the synonym carries the relations.
    fn graph() -> (KnowledgeGraph, NodeId) {
        let mut g = KnowledgeGraph::new();
        let acc = g
            .upsert_node(
                NodeKind::Organism,
                attrs([("taxon_id", "1"), ("name", "Hypomyces aurantius"), ("status", "accepted"), ("inputs", "Hypomyces aurantius")]),
            )
            .unwrap();
        let syn = g
            .upsert_node(
                NodeKind::Organism,
                attrs([("taxon_id", "2"), ("name", "Cladobotryum varium"), ("status", "synonym")]),
            )
            .unwrap();
        g.upsert_edge(&syn, &acc, EdgeLabel::hasSynonymTaxon).unwrap();
        let lit = |g: &mut KnowledgeGraph, p| g.upsert_literature(&DocumentRef::pmid(p), Some(2000)).unwrap();
        let add = |g: &mut KnowledgeGraph, name: &str, source, levels: &[AlertLevel], p: u64| {
            let c = g.upsert_chemical(&chem(name)).unwrap();
            let l = lit(g, p);
            let text = source_text(g, source, &l);
            g.add_relation(&syn, &c, source, &l, text.as_ref()).unwrap();
            for (i, level) in levels.iter().enumerate() {
                let l = lit(g, p + 1 + i as u64);
                g.add_evidence(&c, EvidenceKind::CL, *level, &format!("r{i}"), &l, Default::default())
                    .unwrap();
            }
        };
        add(&mut g, "Cladobotryal", RelationSource::LotusNPR, &[AlertLevel::Weak, AlertLevel::Strong], 100);
        add(&mut g, "Hypomycetin", RelationSource::LotusNPR, &[AlertLevel::Weak], 200);
        add(&mut g, "Furopyridine", RelationSource::TiabNPR, &[AlertLevel::Medium, AlertLevel::Weak], 300);
        (g, acc)
    }

    fn source_text(g: &mut KnowledgeGraph, source: RelationSource, lit: &NodeId) -> Option<NodeId> {
        source
            .is_extracted()
            .then(|| g.upsert_text(lit, "abstract", "some text").unwrap())
    }

    fn triple(chemical: &str, activity: &str) -> ExpertTriple {
        ExpertTriple {
            organism: "Hypomyces aurantius".into(),
            chemical: chemical.into(),
            isolation_ref: DocumentRef::pmid(1),
            activity_ref: activity.parse().unwrap(),
            via_synonym: Some("Cladobotryum varium".into()),
        }
    }

    #[test]
    fn statuses_follow_the_missed_rule() {
        let (g, _) = graph();
        let triples = vec![
            triple("Cladobotryal", "pmid:5"),
            triple("Furopyridine", "pmid:5"),
            triple("Hypomycetin", "doi:10.1/x"),
            triple("Hypomycetin", "pmid:5"),
            triple("Absent", "pmid:5"),
        ];
        let c = compare_with_reference(&g, &triples, &ChemicalAliases::default()).unwrap();
        let levels: Vec<_> = c.rows.iter().map(|r| (r.system_level, r.missed_reason)).collect();
        assert_eq!(
            levels,
            vec![
                (SystemLevel::Strong, None),
                (SystemLevel::Medium, None),
                (SystemLevel::Missed, Some(MissedReason::UnreachableReference)),
                (SystemLevel::Missed, Some(MissedReason::NoActivityEvidence)),
                (SystemLevel::Missed, Some(MissedReason::NotRetrieved)),
            ]
        );
        assert_eq!(c.rows[0].best_level, Some(AlertLevel::Strong));
        assert_eq!(c.rows[0].evidence.len(), 1);
        assert!(c.rows[0].diagnostics[0].contains("Cladobotryum varium"));
        let s = &c.summary;
        assert_eq!((s.total, s.retrieved, s.retrieved_re, s.retrieved_lotus), (5, 4, 1, 3));
        assert_eq!((s.strong, s.medium, s.missed), (1, 1, 3));
        assert!(c.to_tsv(&g).lines().nth(1).unwrap().contains("pmid:102"));
    }

    #[test]
    fn unknown_organism_is_missed_with_diagnostic() {
        let (g, _) = graph();
        let mut t = triple("Cladobotryal", "pmid:5");
        t.organism = "Nowhere fungus".into();
        let c = compare_with_reference(&g, &[t], &ChemicalAliases::default()).unwrap();
        assert_eq!(c.rows[0].system_level, SystemLevel::Missed);
        assert!(c.rows[0].diagnostics.iter().any(|d| d.contains("not in graph")));
    }

    #[test]
    fn aliases_and_tsv_input() {
        let (g, _) = graph();
        let aliases =
            ChemicalAliases::read("alias\tname\nCladobotryal (aldehyde)\tCladobotryal\n".as_bytes()).unwrap();
        assert_eq!(aliases.resolve("Cladobotryal (aldehyde)."), Some("cladobotryal".into()));
        let tsv = "organism\tchemical\tisolation_ref\tactivity_ref\tvia_synonym\n\
                   Hypomyces aurantius\tCladobotryal (aldehyde)\t9586194\tpmid:12934912\tCladobotryum varium\n";
        let triples = read_triples(tsv.as_bytes()).unwrap();
        assert_eq!(triples[0].isolation_ref, DocumentRef::pmid(9586194));
        let c = compare_with_reference(&g, &triples, &aliases).unwrap();
        assert_eq!(c.rows[0].system_level, SystemLevel::Strong);

        let bad = "organism\tchemical\tisolation_ref\tactivity_ref\nX y\t\t1\t2\n";
        assert!(matches!(read_triples(bad.as_bytes()), Err(ReportError::Parse { line: 2, .. })));
        let missing = "organism\tchemical\n";
        assert!(matches!(read_triples(missing.as_bytes()), Err(ReportError::MissingColumn(_))));
    }

    #[test]
    fn distribution_rows_and_charts() {
        let (mut g, acc) = graph();
        let lonely = g
            .upsert_node(
                NodeKind::Organism,
                attrs([("taxon_id", "9"), ("name", "Aaa bbb"), ("status", "accepted"), ("inputs", "Aaa bbb")]),
            )
            .unwrap();
        let d = alert_distribution_report(&g, None).unwrap();
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rows[0].organism, lonely);
        assert_eq!(d.rows[0].summary.total(), 0);
        assert_eq!(d.rows[1].organism, acc);
        assert_eq!(d.rows[1].summary.cl.strong, 1);
        let tsv = d.to_tsv();
        assert!(tsv.starts_with("organism_id\tname\tOL_Strong"));
        assert!(tsv.lines().nth(1).unwrap().ends_with("\t0\t0\t0\t0\t0\t0\t0"));
        let charts = d.charts();
        assert_eq!(charts.len(), 2);
        assert_eq!(charts[1].series[0].values, vec![0.0, 1.0]);

        let empty = alert_distribution_report(&KnowledgeGraph::new(), None).unwrap();
        assert!(empty.rows.is_empty());
    }

    #[test]
    fn bibliometrics_counts_distinct_references() {
        let (g, _) = graph();
        let rels = lotus_relations_in_graph(&g);
        assert_eq!(rels.len(), 2);
        let mut doubled = rels.clone();
        doubled.extend(rels);
        let b = bibliometrics(&doubled);
        assert_eq!(b.stats.total, 2);
        assert_eq!(b.stats.pmid_fraction, Some(1.0));
        assert_eq!(b.to_tsv(), "year\treferences\n2000\t2\n");
        assert!(b.summary_line().contains("100.0%"));
        assert_eq!(bibliometrics(&[]).summary_line(), "no references");
    }
}
