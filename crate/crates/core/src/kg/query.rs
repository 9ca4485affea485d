use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::graph::{EdgeLabel, KnowledgeGraph, NodeId, NodeKind};
use super::KgError;
use crate::model::{AlertLevel, EvidenceKind};

/// One traversal step: the edge label and whether it was followed against
/// its stored direction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub label: EdgeLabel,
    pub reversed: bool,
    pub node: NodeId,
}

/// Explanation of why an evidence node is an alert for an organism: the
/// anchor, then each step up to the evidence node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExplanationPath {
    pub start: NodeId,
    pub steps: Vec<PathStep>,
}

impl ExplanationPath {
    pub fn nodes(&self) -> Vec<&NodeId> {
        std::iter::once(&self.start)
            .chain(self.steps.iter().map(|s| &s.node))
            .collect()
    }

    fn extend(&self, label: EdgeLabel, reversed: bool, node: &NodeId) -> Self {
        let mut next = self.clone();
        next.steps.push(PathStep {
            label,
            reversed,
            node: node.clone(),
        });
        next
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub evidence: NodeId,
    pub kind: EvidenceKind,
    pub level: AlertLevel,
    pub paths: Vec<ExplanationPath>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    #[serde(rename = "Strong")]
    pub strong: usize,
    #[serde(rename = "Medium")]
    pub medium: usize,
    #[serde(rename = "Weak")]
    pub weak: usize,
}

impl LevelCounts {
    pub fn get(&self, level: AlertLevel) -> usize {
        match level {
            AlertLevel::Strong => self.strong,
            AlertLevel::Medium => self.medium,
            AlertLevel::Weak => self.weak,
        }
    }

    pub fn bump(&mut self, level: AlertLevel) {
        match level {
            AlertLevel::Strong => self.strong += 1,
            AlertLevel::Medium => self.medium += 1,
            AlertLevel::Weak => self.weak += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.strong + self.medium + self.weak
    }
}

/// Alert counts per evidence kind and level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertSummary {
    #[serde(rename = "OL")]
    pub ol: LevelCounts,
    #[serde(rename = "CL")]
    pub cl: LevelCounts,
}

impl AlertSummary {
    pub fn get(&self, kind: EvidenceKind, level: AlertLevel) -> usize {
        match kind {
            EvidenceKind::OL => self.ol.get(level),
            EvidenceKind::CL => self.cl.get(level),
        }
    }

    pub fn strong(&self) -> usize {
        self.ol.strong + self.cl.strong
    }

    pub fn add(&mut self, kind: EvidenceKind, level: AlertLevel) {
        match kind {
            EvidenceKind::OL => self.ol.bump(level),
            EvidenceKind::CL => self.cl.bump(level),
        }
    }

    pub fn merge(&mut self, other: &AlertSummary) {
        for (mine, theirs) in [(&mut self.ol, &other.ol), (&mut self.cl, &other.cl)] {
            mine.strong += theirs.strong;
            mine.medium += theirs.medium;
            mine.weak += theirs.weak;
        }
    }

    pub fn total(&self) -> usize {
        self.ol.total() + self.cl.total()
    }
}

impl KnowledgeGraph {
    /// Organisms reachable over synonym edges in either direction, each with
    /// a shortest path from `start` (ties broken by id order).
    pub fn synonym_component(&self, start: &NodeId) -> BTreeMap<NodeId, ExplanationPath> {
        let mut seen = BTreeMap::new();
        let origin = ExplanationPath {
            start: start.clone(),
            steps: Vec::new(),
        };
        seen.insert(start.clone(), origin);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(current) = queue.pop_front() {
            let path = seen[&current].clone();
            let forward = self
                .outgoing(&current, EdgeLabel::hasSynonymTaxon)
                .map(|n| (n, false));
            let backward = self
                .incoming(&current, EdgeLabel::hasSynonymTaxon)
                .map(|n| (n, true));
            let mut next: Vec<(&NodeId, bool)> = forward.chain(backward).collect();
            next.sort();
            for (n, reversed) in next {
                if !seen.contains_key(n) {
                    seen.insert(n.clone(), path.extend(EdgeLabel::hasSynonymTaxon, reversed, n));
                    queue.push_back(n.clone());
                }
            }
        }
        seen
    }

    /// The organisms an alert query covers: the synonym component of the
    /// anchor and, when that component holds a genus, every member species
    /// (incoming parent edges) with their own synonym components.
    pub fn alert_scope(&self, organism: &NodeId) -> Result<BTreeMap<NodeId, ExplanationPath>, KgError> {
        if self.require(organism)?.kind != NodeKind::Organism {
            return Err(KgError::NotAnOrganism(organism.clone()));
        }
        let mut scope = self.synonym_component(organism);
        let genus_nodes: Vec<NodeId> = scope
            .keys()
            .filter(|id| {
                self.node(id)
                    .and_then(|n| n.attr("rank"))
                    .is_some_and(|r| r.eq_ignore_ascii_case("genus"))
            })
            .cloned()
            .collect();
        for genus in genus_nodes {
            let genus_path = scope[&genus].clone();
            let members: Vec<NodeId> = self
                .incoming(&genus, EdgeLabel::hasParentTaxon)
                .cloned()
                .collect();
            for member in members {
                let member_path = genus_path.extend(EdgeLabel::hasParentTaxon, true, &member);
                for (syn, tail) in self.synonym_component(&member) {
                    if scope.contains_key(&syn) {
                        continue;
                    }
                    let mut path = member_path.clone();
                    path.steps.extend(tail.steps);
                    scope.insert(syn, path);
                }
            }
        }
        Ok(scope)
    }

    /// OL evidence on any organism in scope plus CL evidence on chemicals
    /// related to them. Each evidence node appears once with every path.
    pub fn alerts_for_organism(&self, organism: &NodeId) -> Result<Vec<Alert>, KgError> {
        let scope = self.alert_scope(organism)?;
        let mut found: BTreeMap<NodeId, BTreeSet<ExplanationPath>> = BTreeMap::new();
        for (org, path) in &scope {
            for ev in self.incoming(org, EdgeLabel::evidenceSubject) {
                found
                    .entry(ev.clone())
                    .or_default()
                    .insert(path.extend(EdgeLabel::evidenceSubject, true, ev));
            }
            for rel in self.incoming(org, EdgeLabel::relationSubjectOrganism) {
                let rel_path = path.extend(EdgeLabel::relationSubjectOrganism, true, rel);
                for chem in self.outgoing(rel, EdgeLabel::relationObjectChemical) {
                    let chem_path = rel_path.extend(EdgeLabel::relationObjectChemical, false, chem);
                    for ev in self.incoming(chem, EdgeLabel::evidenceSubject) {
                        found
                            .entry(ev.clone())
                            .or_default()
                            .insert(chem_path.extend(EdgeLabel::evidenceSubject, true, ev));
                    }
                }
            }
        }
        let mut alerts = Vec::with_capacity(found.len());
        for (ev, paths) in found {
            let node = self.require(&ev)?;
            let kind = node
                .attr("kind")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| KgError::BadAttribute(ev.clone(), "kind".into()))?;
            let level = node
                .attr("level")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| KgError::BadAttribute(ev.clone(), "level".into()))?;
            alerts.push(Alert {
                evidence: ev,
                kind,
                level,
                paths: paths.into_iter().collect(),
            });
        }
        alerts.sort_by(|a, b| {
            b.level
                .cmp(&a.level)
                .then(a.kind.cmp(&b.kind))
                .then(a.evidence.cmp(&b.evidence))
        });
        Ok(alerts)
    }

    pub fn alert_summary(&self, organism: &NodeId) -> Result<AlertSummary, KgError> {
        let mut summary = AlertSummary::default();
        for alert in self.alerts_for_organism(organism)? {
            summary.add(alert.kind, alert.level);
        }
        Ok(summary)
    }

    /// Organisms created from user identifications.
    pub fn anchor_organisms(&self) -> Vec<NodeId> {
        self.nodes_of_kind(NodeKind::Organism)
            .filter(|n| n.attr("inputs").is_some_and(|s| !s.is_empty()))
            .map(|n| n.id.clone())
            .collect()
    }

    /// Relation nodes whose subject lies in the organism's alert scope.
    pub fn relations_in_scope(&self, organism: &NodeId) -> Result<Vec<NodeId>, KgError> {
        let scope = self.alert_scope(organism)?;
        let mut out = BTreeSet::new();
        for org in scope.keys() {
            out.extend(self.incoming(org, EdgeLabel::relationSubjectOrganism).cloned());
        }
        Ok(out.into_iter().collect())
    }
}
