use serde::{Deserialize, Serialize};

use crate::extraction::{ChemicalName, EvidenceSubject};
use crate::kg::{attrs, EdgeLabel, KgError, KnowledgeGraph, NodeId, NodeKind};
use crate::literature::DocumentRef;
use crate::model::{AlertLevel, RelationSource};

/// A graph mutation recorded in a checkpoint. Replaying the same ops in the
/// same order rebuilds the same graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum KgOp {
    Organism {
        taxon_id: String,
        name: String,
        scientific_name: String,
        status: String,
        rank: String,
        /// The identification that matched this taxon, for anchors.
        input: Option<String>,
    },
    Synonym {
        synonym: String,
        accepted: String,
    },
    Parent {
        child: String,
        parent: String,
    },
    Relation {
        organism: String,
        chemical: ChemicalName,
        source: RelationSource,
        doc: DocumentRef,
        year: Option<i32>,
        /// `(origin, text)` for extracted relations.
        text: Option<(String, String)>,
    },
    Evidence {
        subject: EvidenceSubject,
        level: AlertLevel,
        rationale: String,
        doc: DocumentRef,
        year: Option<i32>,
        found: bool,
        backend: String,
        prompts: Vec<String>,
    },
}

fn organism(g: &KnowledgeGraph, taxon_id: &str) -> Result<NodeId, KgError> {
    g.organism_id(taxon_id)
        .ok_or_else(|| KgError::NodeNotFound(NodeKind::Organism.node_id(taxon_id)))
}

pub fn apply(g: &mut KnowledgeGraph, op: &KgOp) -> Result<(), KgError> {
    match op {
        KgOp::Organism {
            taxon_id,
            name,
            scientific_name,
            status,
            rank,
            input,
        } => {
            let mut a = attrs([
                ("taxon_id", taxon_id.as_str()),
                ("name", name.as_str()),
                ("scientific_name", scientific_name.as_str()),
                ("status", status.as_str()),
                ("rank", rank.as_str()),
            ]);
            if let Some(input) = input {
                a.insert("inputs".into(), input.clone());
            }
            g.upsert_node(NodeKind::Organism, a)?;
        }
        KgOp::Synonym { synonym, accepted } => {
            let (s, a) = (organism(g, synonym)?, organism(g, accepted)?);
            if s != a {
                g.upsert_edge(&s, &a, EdgeLabel::hasSynonymTaxon)?;
            }
        }
        KgOp::Parent { child, parent } => {
            let (c, p) = (organism(g, child)?, organism(g, parent)?);
            g.upsert_edge(&c, &p, EdgeLabel::hasParentTaxon)?;
        }
        KgOp::Relation {
            organism: taxon,
            chemical,
            source,
            doc,
            year,
            text,
        } => {
            let org = organism(g, taxon)?;
            let chem = g.upsert_chemical(chemical)?;
            let lit = g.upsert_literature(doc, *year)?;
            let text = match text {
                Some((origin, body)) => Some(g.upsert_text(&lit, origin, body)?),
                None => None,
            };
            g.add_relation(&org, &chem, *source, &lit, text.as_ref())?;
        }
        KgOp::Evidence {
            subject,
            level,
            rationale,
            doc,
            year,
            found,
            backend,
            prompts,
        } => {
            let node = match subject {
                EvidenceSubject::Organism { taxon_id, .. } => organism(g, taxon_id)?,
                EvidenceSubject::Chemical { key, display } => g.upsert_chemical(&ChemicalName {
                    key: key.clone(),
                    display: display.clone(),
                })?,
            };
            let lit = g.upsert_literature(doc, *year)?;
            let extra = attrs([
                ("evidence_found", if *found { "true" } else { "false" }),
                ("backend", backend.as_str()),
                ("prompts", prompts.join(" ").as_str()),
            ]);
            g.add_evidence(&node, subject.evidence_kind(), *level, rationale, &lit, extra)?;
        }
    }
    Ok(())
}
