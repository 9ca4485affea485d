//! Two-stage antibacterial evidence assessment with a scripted backend.
//!
//! ```text
//! cargo run --example evidence_extraction
//! ```

use std::sync::Arc;

use np_alarm::extraction::{normalize_chemical_name, EvidenceSubject, Extractor, StubBackend};
use np_alarm::fixtures::strictum;
use np_alarm::literature::DocumentRef;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    strictum::write(dir.path())?;
    let backend = StubBackend::load(&dir.path().join("stub_evidence.json")).map_err(anyhow::Error::msg)?;
    let extractor = Extractor::new(Arc::new(backend));

    for sample in strictum::SAMPLES {
        let chem = normalize_chemical_name(sample.subject)?;
        let subject = EvidenceSubject::Chemical {
            key: chem.key,
            display: chem.display,
        };
        let ev = extractor.assess(sample.text, subject, &DocumentRef::pmid(sample.pmid))?;
        println!("{} [{}] {:?}", sample.subject, ev.doc.key(), ev.level);
        println!("  evidence found: {}", ev.evidence_found);
        println!("  rationale: {}", ev.rationale.lines().next().unwrap_or_default());
    }
    Ok(())
}
