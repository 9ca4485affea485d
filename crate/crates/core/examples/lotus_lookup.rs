//! Look up organism-chemical pairs in a LOTUS dump by expanded names and
//! summarize the references behind them.
//!
//! ```text
//! cargo run --example lotus_lookup
//! ```

use std::collections::BTreeSet;

use np_alarm::fixtures::strictum;
use np_alarm::lotus::{reference_stats, LotusDump};
use np_alarm::taxonomy::normalize_name;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    strictum::write(dir.path())?;
    let dump = LotusDump::load(&dir.path().join("lotus.tsv"))?;
    println!("dump holds {} pairs", dump.len());

    let names: BTreeSet<String> = strictum::TAXA.iter().map(|t| normalize_name(t.name)).collect();
    let hits = dump.lookup(&names);
    for r in &hits {
        println!(
            "{:<28} {:<32} {} {:?}",
            r.organism_name,
            r.chemical.display,
            r.reference.key(),
            r.reference_year
        );
    }
    let stats = reference_stats(&hits);
    println!("{} references, {} with a pmid", stats.total, stats.with_pmid);
    Ok(())
}
