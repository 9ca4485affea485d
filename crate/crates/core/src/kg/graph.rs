use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::KgError;
use crate::digest::short_digest;
use crate::extraction::ChemicalName;
use crate::literature::DocumentRef;
use crate::model::{AlertLevel, EvidenceKind, RelationSource};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Declaration order is export order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Organism,
    Chemical,
    LiteratureNode,
    TextNode,
    RelationNode,
    EvidenceNode,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        Self::Organism,
        Self::Chemical,
        Self::LiteratureNode,
        Self::TextNode,
        Self::RelationNode,
        Self::EvidenceNode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Organism => "Organism",
            Self::Chemical => "Chemical",
            Self::LiteratureNode => "LiteratureNode",
            Self::TextNode => "TextNode",
            Self::RelationNode => "RelationNode",
            Self::EvidenceNode => "EvidenceNode",
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Self::Organism => "org",
            Self::Chemical => "chem",
            Self::LiteratureNode => "lit",
            Self::TextNode => "txt",
            Self::RelationNode => "rel",
            Self::EvidenceNode => "ev",
        }
    }

    pub fn required_attributes(self) -> &'static [&'static str] {
        match self {
            Self::Organism => &["taxon_id", "name", "status"],
            Self::Chemical => &["key", "display"],
            Self::LiteratureNode => &["ref"],
            Self::TextNode => &["literature", "origin", "text"],
            Self::RelationNode => &["source", "organism", "chemical", "literature"],
            Self::EvidenceNode => &["kind", "level", "rationale", "subject", "literature"],
        }
    }

    /// The identity of a node of this kind, from its attributes.
    pub fn natural_key(self, attrs: &BTreeMap<String, String>) -> Result<String, KgError> {
        for attr in self.required_attributes() {
            if !attrs.contains_key(*attr) {
                return Err(KgError::MissingRequiredAttribute {
                    kind: self,
                    attribute: attr.to_string(),
                });
            }
        }
        let a = |k: &str| attrs[k].as_str();
        Ok(match self {
            Self::Organism => a("taxon_id").to_string(),
            Self::Chemical => a("key").to_string(),
            Self::LiteratureNode => a("ref").to_string(),
            Self::TextNode => format!("{}|{}", a("literature"), a("text")),
            Self::RelationNode => format!(
                "{}|{}|{}|{}",
                a("organism"),
                a("chemical"),
                a("source"),
                a("literature")
            ),
            Self::EvidenceNode => format!(
                "{}|{}|{}",
                a("subject"),
                a("literature"),
                short_digest(a("rationale"))
            ),
        })
    }

    pub fn node_id(self, natural_key: &str) -> NodeId {
        NodeId(format!(
            "{}-{}",
            self.id_prefix(),
            short_digest(format!("{}\u{1f}{}", self.as_str(), natural_key))
        ))
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown node kind {s:?}"))
    }
}

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    hasSynonymTaxon,
    hasParentTaxon,
    relationSubjectOrganism,
    relationObjectChemical,
    evidenceSubject,
    extractedFromText,
    reportedInLiterature,
    textOfLiterature,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 8] = [
        Self::hasSynonymTaxon,
        Self::hasParentTaxon,
        Self::relationSubjectOrganism,
        Self::relationObjectChemical,
        Self::evidenceSubject,
        Self::extractedFromText,
        Self::reportedInLiterature,
        Self::textOfLiterature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::hasSynonymTaxon => "hasSynonymTaxon",
            Self::hasParentTaxon => "hasParentTaxon",
            Self::relationSubjectOrganism => "relationSubjectOrganism",
            Self::relationObjectChemical => "relationObjectChemical",
            Self::evidenceSubject => "evidenceSubject",
            Self::extractedFromText => "extractedFromText",
            Self::reportedInLiterature => "reportedInLiterature",
            Self::textOfLiterature => "textOfLiterature",
        }
    }

    pub fn allows(self, from: NodeKind, to: NodeKind) -> bool {
        use NodeKind::*;
        match self {
            Self::hasSynonymTaxon | Self::hasParentTaxon => from == Organism && to == Organism,
            Self::relationSubjectOrganism => from == RelationNode && to == Organism,
            Self::relationObjectChemical => from == RelationNode && to == Chemical,
            Self::evidenceSubject => from == EvidenceNode && matches!(to, Organism | Chemical),
            Self::extractedFromText => matches!(from, RelationNode | EvidenceNode) && to == TextNode,
            Self::reportedInLiterature => {
                matches!(from, RelationNode | EvidenceNode) && to == LiteratureNode
            }
            Self::textOfLiterature => from == TextNode && to == LiteratureNode,
        }
    }

    /// Labels a node may carry at most once as the source.
    fn single_valued(self) -> bool {
        matches!(
            self,
            Self::relationSubjectOrganism | Self::relationObjectChemical | Self::evidenceSubject
        )
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown edge label {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub attributes: BTreeMap<String, String>,
}

impl KgNode {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }
}

/// Ordered by label, then endpoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KgEdge {
    pub label: EdgeLabel,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TriageStatus {
    Unreviewed,
    Confirmed,
    Dismissed,
    OrganismDiscarded,
}

impl FromStr for TriageStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Unreviewed" => Ok(Self::Unreviewed),
            "Confirmed" => Ok(Self::Confirmed),
            "Dismissed" => Ok(Self::Dismissed),
            "OrganismDiscarded" => Ok(Self::OrganismDiscarded),
            other => Err(format!("unknown triage status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriageState {
    pub target: NodeId,
    pub status: TriageStatus,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
}

/// Attributes whose values accumulate as `; `-separated sets on upsert.
const SET_ATTRIBUTES: &[&str] = &["inputs"];

/// Typed graph with adjacency indexes in both directions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub(super) nodes: BTreeMap<NodeId, KgNode>,
    pub(super) edges: BTreeSet<KgEdge>,
    out_adj: BTreeMap<NodeId, BTreeSet<(EdgeLabel, NodeId)>>,
    in_adj: BTreeMap<NodeId, BTreeSet<(EdgeLabel, NodeId)>>,
    pub(super) triage: BTreeMap<NodeId, Vec<TriageState>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&self, id: &NodeId) -> Option<&KgNode> {
        self.nodes.get(id)
    }

    pub fn require(&self, id: &NodeId) -> Result<&KgNode, KgError> {
        self.nodes
            .get(id)
            .ok_or_else(|| KgError::NodeNotFound(id.clone()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KgNode> {
        self.nodes.values()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &KgNode> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    pub fn edges(&self) -> impl Iterator<Item = &KgEdge> {
        self.edges.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn count_by_kind(&self) -> BTreeMap<NodeKind, usize> {
        let mut out = BTreeMap::new();
        for n in self.nodes.values() {
            *out.entry(n.kind).or_insert(0) += 1;
        }
        out
    }

    pub fn count_by_label(&self) -> BTreeMap<EdgeLabel, usize> {
        let mut out = BTreeMap::new();
        for e in &self.edges {
            *out.entry(e.label).or_insert(0) += 1;
        }
        out
    }

    /// Targets of `label` edges leaving `id`.
    pub fn outgoing(&self, id: &NodeId, label: EdgeLabel) -> impl Iterator<Item = &NodeId> {
        self.out_adj
            .get(id)
            .into_iter()
            .flatten()
            .filter(move |(l, _)| *l == label)
            .map(|(_, n)| n)
    }

    /// Sources of `label` edges arriving at `id`.
    pub fn incoming(&self, id: &NodeId, label: EdgeLabel) -> impl Iterator<Item = &NodeId> {
        self.in_adj
            .get(id)
            .into_iter()
            .flatten()
            .filter(move |(l, _)| *l == label)
            .map(|(_, n)| n)
    }

    /// Inserts a node or merges attributes into the node with the same
    /// natural key. Returns the id either way.
    pub fn upsert_node(
        &mut self,
        kind: NodeKind,
        attributes: BTreeMap<String, String>,
    ) -> Result<NodeId, KgError> {
        let key = kind.natural_key(&attributes)?;
        let id = kind.node_id(&key);
        self.insert_with_id(id.clone(), kind, attributes)?;
        Ok(id)
    }

    /// Used by import, where ids come from the file.
    pub(super) fn insert_with_id(
        &mut self,
        id: NodeId,
        kind: NodeKind,
        attributes: BTreeMap<String, String>,
    ) -> Result<(), KgError> {
        kind.natural_key(&attributes)?;
        match self.nodes.get_mut(&id) {
            Some(existing) => {
                if existing.kind != kind {
                    return Err(KgError::IdCollision(id));
                }
                for (k, v) in attributes {
                    if SET_ATTRIBUTES.contains(&k.as_str()) {
                        let old: Vec<String> = existing
                            .attributes
                            .get(&k)
                            .map(|old| old.split("; ").map(String::from).collect())
                            .unwrap_or_default();
                        let merged: BTreeSet<String> = old
                            .into_iter()
                            .chain(v.split("; ").map(String::from))
                            .filter(|s| !s.is_empty())
                            .collect();
                        existing
                            .attributes
                            .insert(k, merged.into_iter().collect::<Vec<_>>().join("; "));
                    } else {
                        existing.attributes.insert(k, v);
                    }
                }
            }
            None => {
                self.nodes.insert(
                    id.clone(),
                    KgNode {
                        id,
                        kind,
                        attributes,
                    },
                );
            }
        }
        Ok(())
    }

    pub fn upsert_edge(&mut self, from: &NodeId, to: &NodeId, label: EdgeLabel) -> Result<(), KgError> {
        let from_kind = self.require(from)?.kind;
        let to_kind = self.require(to)?.kind;
        if !label.allows(from_kind, to_kind) {
            return Err(KgError::IllegalEndpointKinds {
                label,
                from: from_kind,
                to: to_kind,
            });
        }
        if from == to {
            return Err(KgError::IllegalEndpointKinds {
                label,
                from: from_kind,
                to: to_kind,
            });
        }
        let edge = KgEdge {
            label,
            from: from.clone(),
            to: to.clone(),
        };
        if self.edges.contains(&edge) {
            return Ok(());
        }
        if label.single_valued() && self.outgoing(from, label).next().is_some() {
            return Err(KgError::CardinalityViolation {
                node: from.clone(),
                label,
            });
        }
        self.out_adj
            .entry(from.clone())
            .or_default()
            .insert((label, to.clone()));
        self.in_adj
            .entry(to.clone())
            .or_default()
            .insert((label, from.clone()));
        self.edges.insert(edge);
        Ok(())
    }

    pub fn upsert_organism(
        &mut self,
        taxon_id: &str,
        name: &str,
        status: &str,
        rank: &str,
    ) -> Result<NodeId, KgError> {
        self.upsert_node(
            NodeKind::Organism,
            attrs([
                ("taxon_id", taxon_id),
                ("name", name),
                ("status", status),
                ("rank", rank),
            ]),
        )
    }

    pub fn upsert_chemical(&mut self, chemical: &ChemicalName) -> Result<NodeId, KgError> {
        self.upsert_node(
            NodeKind::Chemical,
            attrs([("key", chemical.key.as_str()), ("display", chemical.display.as_str())]),
        )
    }

    pub fn upsert_literature(
        &mut self,
        doc: &DocumentRef,
        year: Option<i32>,
    ) -> Result<NodeId, KgError> {
        let mut a = attrs([("ref", doc.key().as_str()), ("url", doc.url().as_str())]);
        if let Some(p) = doc.pmid {
            a.insert("pmid".into(), p.to_string());
        }
        if let Some(d) = &doc.doi {
            a.insert("doi".into(), d.clone());
        }
        if let Some(y) = year {
            a.insert("year".into(), y.to_string());
        }
        self.upsert_node(NodeKind::LiteratureNode, a)
    }

    /// `origin` is `abstract` or `paragraph`.
    pub fn upsert_text(
        &mut self,
        literature: &NodeId,
        origin: &str,
        text: &str,
    ) -> Result<NodeId, KgError> {
        let id = self.upsert_node(
            NodeKind::TextNode,
            attrs([
                ("literature", literature.as_str()),
                ("origin", origin),
                ("text", text),
            ]),
        )?;
        self.upsert_edge(&id, literature, EdgeLabel::textOfLiterature)?;
        Ok(id)
    }

    /// Relation node plus its subject, object, literature and (for extracted
    /// relations) text edges.
    pub fn add_relation(
        &mut self,
        organism: &NodeId,
        chemical: &NodeId,
        source: RelationSource,
        literature: &NodeId,
        text: Option<&NodeId>,
    ) -> Result<NodeId, KgError> {
        self.require(organism)?;
        self.require(chemical)?;
        self.require(literature)?;
        if source.is_extracted() != text.is_some() {
            return Err(KgError::RelationText(source));
        }
        let id = self.upsert_node(
            NodeKind::RelationNode,
            attrs([
                ("source", source.as_str()),
                ("organism", organism.as_str()),
                ("chemical", chemical.as_str()),
                ("literature", literature.as_str()),
            ]),
        )?;
        self.upsert_edge(&id, organism, EdgeLabel::relationSubjectOrganism)?;
        self.upsert_edge(&id, chemical, EdgeLabel::relationObjectChemical)?;
        self.upsert_edge(&id, literature, EdgeLabel::reportedInLiterature)?;
        if let Some(t) = text {
            self.upsert_edge(&id, t, EdgeLabel::extractedFromText)?;
        }
        Ok(id)
    }

    /// Evidence node with its subject and literature edges. `extra` carries
    /// provenance attributes.
    #[allow(clippy::too_many_arguments)]
    pub fn add_evidence(
        &mut self,
        subject: &NodeId,
        kind: EvidenceKind,
        level: AlertLevel,
        rationale: &str,
        literature: &NodeId,
        extra: BTreeMap<String, String>,
    ) -> Result<NodeId, KgError> {
        let subject_kind = self.require(subject)?.kind;
        let expected = match kind {
            EvidenceKind::OL => NodeKind::Organism,
            EvidenceKind::CL => NodeKind::Chemical,
        };
        if subject_kind != expected {
            return Err(KgError::IllegalEndpointKinds {
                label: EdgeLabel::evidenceSubject,
                from: NodeKind::EvidenceNode,
                to: subject_kind,
            });
        }
        self.require(literature)?;
        let mut a = extra;
        a.extend(attrs([
            ("kind", kind.as_str()),
            ("level", level.as_str()),
            ("rationale", rationale),
            ("subject", subject.as_str()),
            ("literature", literature.as_str()),
        ]));
        let id = self.upsert_node(NodeKind::EvidenceNode, a)?;
        self.upsert_edge(&id, subject, EdgeLabel::evidenceSubject)?;
        self.upsert_edge(&id, literature, EdgeLabel::reportedInLiterature)?;
        Ok(id)
    }

    pub fn organism_id(&self, taxon_id: &str) -> Option<NodeId> {
        let id = NodeKind::Organism.node_id(taxon_id);
        self.nodes.contains_key(&id).then_some(id)
    }

    pub fn chemical_id(&self, key: &str) -> Option<NodeId> {
        let id = NodeKind::Chemical.node_id(key);
        self.nodes.contains_key(&id).then_some(id)
    }

    pub fn set_triage(
        &mut self,
        target: &NodeId,
        status: TriageStatus,
        reviewer: &str,
    ) -> Result<TriageState, KgError> {
        self.set_triage_at(target, status, reviewer, Utc::now())
    }

    pub fn set_triage_at(
        &mut self,
        target: &NodeId,
        status: TriageStatus,
        reviewer: &str,
        timestamp: DateTime<Utc>,
    ) -> Result<TriageState, KgError> {
        let kind = self.require(target)?.kind;
        if !matches!(kind, NodeKind::Organism | NodeKind::EvidenceNode) {
            return Err(KgError::IllegalTargetKind(kind));
        }
        let state = TriageState {
            target: target.clone(),
            status,
            reviewer: reviewer.to_string(),
            timestamp,
        };
        self.triage
            .entry(target.clone())
            .or_default()
            .push(state.clone());
        Ok(state)
    }

    pub fn triage_current(&self, target: &NodeId) -> Option<&TriageState> {
        self.triage.get(target).and_then(|h| h.last())
    }

    /// Current status, `Unreviewed` when never triaged.
    pub fn triage_status(&self, target: &NodeId) -> TriageStatus {
        self.triage_current(target)
            .map(|s| s.status)
            .unwrap_or(TriageStatus::Unreviewed)
    }

    pub fn triage_history(&self, target: &NodeId) -> &[TriageState] {
        self.triage.get(target).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Structural problems; empty for a well-formed graph.
    pub fn integrity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for node in self.nodes.values() {
            let count = |label| self.outgoing(&node.id, label).count();
            match node.kind {
                NodeKind::RelationNode => {
                    if count(EdgeLabel::relationSubjectOrganism) != 1 {
                        out.push(format!("{}: relation without exactly one subject", node.id));
                    }
                    if count(EdgeLabel::relationObjectChemical) != 1 {
                        out.push(format!("{}: relation without exactly one object", node.id));
                    }
                    let extracted = node
                        .attr("source")
                        .and_then(|s| s.parse::<RelationSource>().ok())
                        .is_some_and(RelationSource::is_extracted);
                    let texts = count(EdgeLabel::extractedFromText);
                    if extracted && texts == 0 {
                        out.push(format!("{}: extracted relation without text", node.id));
                    }
                    if !extracted && texts > 0 {
                        out.push(format!("{}: database relation with text", node.id));
                    }
                }
                NodeKind::EvidenceNode => {
                    if count(EdgeLabel::evidenceSubject) != 1 {
                        out.push(format!("{}: evidence without exactly one subject", node.id));
                    }
                    if count(EdgeLabel::reportedInLiterature) == 0 {
                        out.push(format!("{}: evidence without literature", node.id));
                    }
                }
                _ => {}
            }
        }
        for e in &self.edges {
            match (self.nodes.get(&e.from), self.nodes.get(&e.to)) {
                (Some(f), Some(t)) if e.label.allows(f.kind, t.kind) => {}
                _ => out.push(format!("illegal or dangling edge {e:?}")),
            }
        }
        out
    }
}

pub fn attrs<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
