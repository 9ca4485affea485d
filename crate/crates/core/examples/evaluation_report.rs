//! Compare a run against an expert reference table and print the alert
//! distribution and reference bibliometrics.
//!
//! ```text
//! cargo run --example evaluation_report
//! ```

use std::fs::File;

use np_alarm::fixtures::evaluation;
use np_alarm::pipeline::{Pipeline, PipelineConfig};
use np_alarm::report::{
    alert_distribution_report, bibliometrics, compare_with_reference, lotus_relations_in_graph,
    read_triples, ChemicalAliases,
};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let fixture = evaluation::write(&dir.path().join("fixture"))?;
    let config = PipelineConfig::load(&fixture.config)?;
    let run = Pipeline::new(config)?.run(&fixture.identifications, &dir.path().join("run"))?;
    let g = &run.graph;

    let triples = read_triples(File::open(fixture.dir.join(evaluation::TRIPLES_FILE))?)?;
    let aliases = ChemicalAliases::read(File::open(fixture.dir.join(evaluation::ALIASES_FILE))?)?;
    let cmp = compare_with_reference(g, &triples, &aliases)?;
    print!("{}", cmp.to_tsv(g));
    let s = &cmp.summary;
    println!(
        "\n{} triples: {} retrieved ({} by extraction, {} by LOTUS), {} missed",
        s.total, s.retrieved, s.retrieved_re, s.retrieved_lotus, s.missed
    );
    for (reason, n) in &s.missed_by_reason {
        println!("  missed, {}: {n}", reason.as_str());
    }

    println!();
    print!("{}", alert_distribution_report(g, None)?.to_tsv());
    println!();
    println!("{}", bibliometrics(&lotus_relations_in_graph(g)).summary_line());
    Ok(())
}
