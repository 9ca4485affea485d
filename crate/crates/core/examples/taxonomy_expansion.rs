//! Resolve a few identifications against a small backbone and print every
//! name each one expands to.
//!
//! ```text
//! cargo run --example taxonomy_expansion
//! ```

use std::fs::File;

use np_alarm::fixtures::strictum;
use np_alarm::taxonomy::{expand_synonyms, load_backbone, parse_identification, resolve};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    strictum::write(dir.path())?;
    let (index, report) = load_backbone(File::open(dir.path().join("backbone.tsv"))?)?;
    println!("backbone: {} records, {} quarantined", index.len(), report.quarantined.len());

    for raw in ["Sarocladium strictum", "Cephalosporium acremonium", "Acremonium strictum W. Gams"] {
        let ident = parse_identification(raw)?;
        let matched = resolve(&ident, &index);
        let Some(first) = matched.first() else {
            println!("{raw}: no match");
            continue;
        };
        let expansion = expand_synonyms(&ident, first, &index)?;
        let root = expansion.root().map(|r| r.canonical_name.as_str()).unwrap_or("?");
        println!("{raw} -> accepted {root}");
        for (name, provenance) in &expansion.names {
            println!("  {name:<32} {provenance:?}");
        }
    }
    Ok(())
}
