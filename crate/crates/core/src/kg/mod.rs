//! Typed knowledge graph: organisms, chemicals, relations, evidence, texts
//! and literature, plus reviewer triage state.

mod graph;
mod io;
mod query;

use thiserror::Error;

pub use graph::{
    attrs, EdgeLabel, KgEdge, KgNode, KnowledgeGraph, NodeId, NodeKind, TriageState,
    TriageStatus,
};
pub use io::{KG_FORMAT, KG_FORMAT_VERSION};
pub use query::{Alert, AlertSummary, ExplanationPath, LevelCounts, PathStep};

use crate::model::RelationSource;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("{label} cannot connect {from} to {to}")]
    IllegalEndpointKinds {
        label: EdgeLabel,
        from: NodeKind,
        to: NodeKind,
    },
    #[error("{kind} node is missing required attribute {attribute}")]
    MissingRequiredAttribute { kind: NodeKind, attribute: String },
    #[error("node {0} not found")]
    NodeNotFound(NodeId),
    #[error("node {0} is not an organism")]
    NotAnOrganism(NodeId),
    #[error("{0} nodes cannot be triaged")]
    IllegalTargetKind(NodeKind),
    #[error("node {0} already carries a different kind")]
    IdCollision(NodeId),
    #[error("{node} already has a {label} edge")]
    CardinalityViolation { node: NodeId, label: EdgeLabel },
    #[error("{0} relations need a text node exactly when extracted from text")]
    RelationText(RelationSource),
    #[error("node {0} has an invalid {1} attribute")]
    BadAttribute(NodeId, String),
    #[error("unsupported graph file format: {0}")]
    FormatVersionMismatch(String),
    #[error("graph file line {line}: {reason}")]
    Import { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::extraction::normalize_chemical_name;
    use crate::literature::DocumentRef;
    use crate::model::{AlertLevel, EvidenceKind};

    struct Fig {
        g: KnowledgeGraph,
        strictum: NodeId,
        acremonium: NodeId,
        e2: NodeId,
    }

    fn figure() -> Fig {
        let mut g = KnowledgeGraph::new();
        let strictum = g
            .upsert_organism("5459730", "Sarocladium strictum", "accepted", "species")
            .unwrap();
        let acremonium = g
            .upsert_organism("2556203", "Cephalosporium acremonium", "synonym", "species")
            .unwrap();
        g.upsert_edge(&acremonium, &strictum, EdgeLabel::hasSynonymTaxon)
            .unwrap();
        let ceph = g
            .upsert_chemical(&normalize_chemical_name("Cephalosporin C").unwrap())
            .unwrap();
        let l_lotus = g.upsert_literature(&DocumentRef::pmid(14126054), Some(1964)).unwrap();
        let l_iso = g.upsert_literature(&DocumentRef::pmid(10397815), Some(1999)).unwrap();
        let l_ol = g.upsert_literature(&DocumentRef::pmid(22136576), None).unwrap();
        let l_cl = g.upsert_literature(&DocumentRef::pmid(4078571), None).unwrap();
        let t_abs = g.upsert_text(&l_iso, "abstract", "abstract text").unwrap();
        let t_par = g.upsert_text(&l_iso, "paragraph", "paragraph text").unwrap();
        g.add_relation(&acremonium, &ceph, RelationSource::LotusNPR, &l_lotus, None)
            .unwrap();
        g.add_relation(&acremonium, &ceph, RelationSource::TiabNPR, &l_iso, Some(&t_abs))
            .unwrap();
        g.add_relation(&strictum, &ceph, RelationSource::ChunkNPR, &l_iso, Some(&t_par))
            .unwrap();
        g.add_evidence(
            &strictum,
            EvidenceKind::OL,
            AlertLevel::Medium,
            "weak antibacterial activities",
            &l_ol,
            BTreeMap::new(),
        )
        .unwrap();
        let e2 = g
            .add_evidence(
                &ceph,
                EvidenceKind::CL,
                AlertLevel::Strong,
                "roughly the same activity",
                &l_cl,
                BTreeMap::new(),
            )
            .unwrap();
        Fig {
            g,
            strictum,
            acremonium,
            e2,
        }
    }

    #[test]
    fn figure_fixture_counts() {
        let f = figure();
        // 2 organisms + 1 chemical + 3 relations + 2 evidence + 2 texts + 4 literature.
        assert_eq!(f.g.node_count(), 14);
        // 1 synonym + 3x(subject, object, literature) + 2 text links
        // + 2x(evidence subject, literature) + 2 textOfLiterature.
        assert_eq!(f.g.edge_count(), 18);
        assert!(f.g.integrity_violations().is_empty());
    }

    #[test]
    fn upsert_is_idempotent_on_natural_keys() {
        let mut f = figure();
        let c = normalize_chemical_name("cephalosporin c").unwrap();
        let before = f.g.node_count();
        let a = f.g.upsert_chemical(&c).unwrap();
        let b = f.g.upsert_chemical(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(f.g.node_count(), before);
    }

    #[test]
    fn illegal_edges_are_rejected() {
        let mut f = figure();
        let ceph = f.g.chemical_id("cephalosporin c").unwrap();
        assert!(matches!(
            f.g.upsert_edge(&ceph, &f.strictum, EdgeLabel::hasSynonymTaxon),
            Err(KgError::IllegalEndpointKinds { .. })
        ));
        let mut a = BTreeMap::new();
        a.insert("key".to_string(), "x".to_string());
        assert!(matches!(
            f.g.upsert_node(NodeKind::Chemical, a),
            Err(KgError::MissingRequiredAttribute { .. })
        ));
    }

    #[test]
    fn strong_cl_alert_reachable_through_synonym() {
        let f = figure();
        let alerts = f.g.alerts_for_organism(&f.strictum).unwrap();
        let e2 = alerts.iter().find(|a| a.evidence == f.e2).unwrap();
        assert_eq!(e2.kind, EvidenceKind::CL);
        assert_eq!(e2.level, AlertLevel::Strong);
        // Direct ChunkNPR path, plus two relation paths through the synonym.
        assert_eq!(e2.paths.len(), 3);
        assert!(e2
            .paths
            .iter()
            .any(|p| p.steps[0].label == EdgeLabel::hasSynonymTaxon));
        let from_syn = f.g.alerts_for_organism(&f.acremonium).unwrap();
        let ids = |v: &[Alert]| v.iter().map(|a| a.evidence.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&alerts), ids(&from_syn));
        let s = f.g.alert_summary(&f.strictum).unwrap();
        assert_eq!(s.get(EvidenceKind::CL, AlertLevel::Strong), 1);
        assert_eq!(s.get(EvidenceKind::OL, AlertLevel::Medium), 1);
        assert_eq!(s.total(), 2);
    }

    #[test]
    fn organism_without_links_has_no_alerts() {
        let mut f = figure();
        let lone = f.g.upsert_organism("1", "Lonely one", "accepted", "species").unwrap();
        assert!(f.g.alerts_for_organism(&lone).unwrap().is_empty());
        assert_eq!(f.g.alert_summary(&lone).unwrap(), AlertSummary::default());
        assert!(matches!(
            f.g.alerts_for_organism(&NodeId("org-missing".into())),
            Err(KgError::NodeNotFound(_))
        ));
    }

    #[test]
    fn triage_history() {
        let mut f = figure();
        let e2 = f.e2.clone();
        f.g.set_triage(&e2, TriageStatus::Dismissed, "rev").unwrap();
        assert_eq!(f.g.triage_status(&e2), TriageStatus::Dismissed);
        assert_eq!(f.g.triage_history(&e2).len(), 1);
        let s = f.strictum.clone();
        f.g.set_triage(&s, TriageStatus::Confirmed, "rev").unwrap();
        f.g.set_triage(&s, TriageStatus::OrganismDiscarded, "rev").unwrap();
        assert_eq!(f.g.triage_status(&s), TriageStatus::OrganismDiscarded);
        assert_eq!(f.g.triage_history(&s).len(), 2);
        let text = f.g.nodes_of_kind(NodeKind::TextNode).next().unwrap().id.clone();
        assert!(matches!(
            f.g.set_triage(&text, TriageStatus::Dismissed, "rev"),
            Err(KgError::IllegalTargetKind(NodeKind::TextNode))
        ));
    }

    #[test]
    fn export_import_round_trip() {
        let mut f = figure();
        let e2 = f.e2.clone();
        f.g.set_triage(&e2, TriageStatus::Confirmed, "rev").unwrap();
        let text = f.g.export_string();
        let back = KnowledgeGraph::import(text.as_bytes()).unwrap();
        assert_eq!(back, f.g);
        assert_eq!(back.export_string(), text);
    }

    #[test]
    fn import_rejects_danglers_and_bad_headers() {
        let empty = KnowledgeGraph::new().export_string();
        assert_eq!(empty.lines().count(), 1);
        assert!(KnowledgeGraph::import(empty.as_bytes()).unwrap().is_empty());
        let dangling = format!(
            "{empty}{{\"type\":\"edge\",\"label\":\"hasSynonymTaxon\",\"from\":\"org-a\",\"to\":\"org-b\"}}\n"
        );
        match KgGraphImport::run(&dangling) {
            Err(KgError::Import { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected import error, got {other:?}"),
        }
        assert!(matches!(
            KgGraphImport::run("{\"format\":\"np-alarm-kg\",\"version\":2}\n"),
            Err(KgError::FormatVersionMismatch(_))
        ));
    }

    struct KgGraphImport;

    impl KgGraphImport {
        fn run(text: &str) -> Result<KnowledgeGraph, KgError> {
            KnowledgeGraph::import(text.as_bytes())
        }
    }
}
