//! Build a small graph by hand: an accepted species, a synonym, a chemical
//! reported for the synonym, and Strong evidence on that chemical. The alert
//! shows up on the accepted name with its explanation path.
//!
//! ```text
//! cargo run --example knowledge_graph
//! ```

use std::collections::BTreeMap;

use np_alarm::extraction::normalize_chemical_name;
use np_alarm::kg::{EdgeLabel, KnowledgeGraph};
use np_alarm::literature::DocumentRef;
use np_alarm::model::{AlertLevel, EvidenceKind, RelationSource};

fn main() -> anyhow::Result<()> {
    let mut g = KnowledgeGraph::new();
    let accepted = g.upsert_organism("5459730", "Sarocladium strictum", "accepted", "species")?;
    let synonym = g.upsert_organism("2564707", "Cephalosporium acremonium", "synonym", "species")?;
    g.upsert_edge(&synonym, &accepted, EdgeLabel::hasSynonymTaxon)?;

    let chem = g.upsert_chemical(&normalize_chemical_name("Cephalosporin C")?)?;
    let lit = g.upsert_literature(&DocumentRef::pmid(14126054), Some(1961))?;
    let text = g.upsert_text(&lit, "abstract", "Cephalosporium acremonium produces cephalosporin C.")?;
    g.add_relation(&synonym, &chem, RelationSource::TiabNPR, &lit, Some(&text))?;
    g.add_evidence(
        &chem,
        EvidenceKind::CL,
        AlertLevel::Strong,
        "comparable to benzylpenicillin against Gram-positive strains",
        &lit,
        BTreeMap::new(),
    )?;

    println!("{} nodes, {} edges", g.node_count(), g.edge_count());
    for alert in g.alerts_for_organism(&accepted)? {
        println!("{:?} {:?} {}", alert.kind, alert.level, alert.evidence.as_str());
        for path in &alert.paths {
            let hops: Vec<String> = path
                .steps
                .iter()
                .map(|s| format!("{}{}", if s.reversed { "<-" } else { "->" }, s.label.as_str()))
                .collect();
            println!("  {} {}", path.start.as_str(), hops.join(" "));
        }
    }
    println!("integrity violations: {}", g.integrity_violations().len());

    let exported = g.export_string();
    let back = KnowledgeGraph::import(exported.as_bytes())?;
    println!("round trip identical: {}", back.export_string() == exported);
    Ok(())
}
