//! Run the whole pipeline offline on a fixture: once straight through, and
//! once halted after the taxonomy step and resumed.
//!
//! ```text
//! cargo run --example pipeline_run
//! ```

use np_alarm::fixtures::strictum;
use np_alarm::pipeline::{Pipeline, PipelineConfig, Step};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let fixture = strictum::write(&dir.path().join("fixture"))?;
    let config = PipelineConfig::load(&fixture.config)?;

    let whole = Pipeline::new(config.clone())?.run(&fixture.identifications, &dir.path().join("whole"))?;
    println!(
        "whole run {}: {} nodes, {} edges",
        whole.manifest.run_id,
        whole.graph.node_count(),
        whole.graph.edge_count()
    );
    for (kind, n) in whole.graph.count_by_kind() {
        println!("  {kind:?}: {n}");
    }

    let split_dir = dir.path().join("split");
    let first = Pipeline::new(config.clone())?
        .halt_after(Some(Step::from_number(1).expect("step 1")))
        .run(&fixture.identifications, &split_dir)?;
    println!("halted with {} nodes", first.graph.node_count());
    let resumed = Pipeline::new(config)?.resume(&split_dir)?;
    println!(
        "resumed: {} nodes, export identical to the whole run: {}",
        resumed.graph.node_count(),
        resumed.graph.export_string() == whole.graph.export_string()
    );
    Ok(())
}
