//! Search and fetch against canned E-utilities responses, then chunk the
//! full text of one article.
//!
//! ```text
//! cargo run --example literature_search
//! ```

use np_alarm::fixtures::strictum;
use np_alarm::literature::{chunk_fulltext, FetchOptions, SearchQuery, SearchScope};
use np_alarm::pipeline::{literature_client, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let fixture = strictum::write(dir.path())?;
    let config = PipelineConfig::load(&fixture.config)?;
    let client = literature_client(&config, None)?;

    let names = strictum::TAXA.iter().map(|t| t.name);
    let query = SearchQuery::new(names, SearchScope::TitleAbstract)?;
    println!("term: {}", query.term());
    let pmids = client.search(&query)?;
    println!("{} hits: {pmids:?}", pmids.len());

    let outcome = client.fetch(&pmids, FetchOptions { full_text: true })?;
    for doc in &outcome.documents {
        println!(
            "{} {:?} {} ({} paragraphs)",
            doc.doc_ref.key(),
            doc.pub_year,
            doc.title,
            doc.paragraphs.len()
        );
    }
    if let Some(doc) = outcome.documents.iter().find(|d| !d.paragraphs.is_empty()) {
        let chunks = chunk_fulltext(&doc.full_text(), 40, 8);
        println!("{} chunks of at most 40 tokens from {}", chunks.len(), doc.doc_ref.key());
    }
    Ok(())
}
