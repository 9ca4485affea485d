//! Literature retrieval over the NCBI EUtils protocol.
//!
//! Requests flow through a layered [`Transport`] stack:
//! cache → retry → rate limit → HTTP. Cache hits never touch the limiter.

mod cache;
mod canned;
mod chunk;
mod eutils;
mod transport;
pub mod xml;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use cache::atomic_write;
pub use cache::{CacheMeta, CachedTransport};
pub use canned::{pmc_article_xml, pubmed_article_xml, ArticleSpec, CannedEutils};
pub use chunk::{chunk_fulltext, reassemble, TextChunk};
pub use eutils::{EUtilsClient, EUtilsConfig, FetchOptions, FetchOutcome};
pub use transport::{
    Clock, Counting, HttpTransport, RateLimited, RateLimiter, Request, RetryPolicy, Retrying,
    SystemClock, Transport, TransportError, VirtualClock,
};

#[derive(Debug, Error)]
pub enum LiteratureError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid document reference: {0}")]
    InvalidRef(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("fetch called with an empty pmid list")]
    EmptyRequest,
    #[error("cache I/O: {0}")]
    Cache(#[from] std::io::Error),
}

/// Pointer to a literature item: PubMed id when indexed, DOI otherwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocumentRef {
    pub pmid: Option<u64>,
    pub doi: Option<String>,
}

impl DocumentRef {
    pub fn new(pmid: Option<u64>, doi: Option<String>) -> Result<Self, LiteratureError> {
        let doi = doi
            .map(|d| d.trim().to_string())
            .filter(|d| !d.is_empty());
        match (pmid, &doi) {
            (Some(0), _) => Err(LiteratureError::InvalidRef("pmid must be positive".into())),
            (None, None) => Err(LiteratureError::InvalidRef(
                "reference needs a pmid or a doi".into(),
            )),
            _ => Ok(Self { pmid, doi }),
        }
    }

    pub fn pmid(pmid: u64) -> Self {
        Self::new(Some(pmid), None).expect("pmid must be positive")
    }

    pub fn doi(doi: &str) -> Self {
        Self::new(None, Some(doi.to_string())).expect("doi must be non-empty")
    }

    /// Stable key: `pmid:<n>` when a pmid exists, `doi:<lowercased doi>` otherwise.
    pub fn key(&self) -> String {
        match (self.pmid, &self.doi) {
            (Some(p), _) => format!("pmid:{p}"),
            (None, Some(d)) => format!("doi:{}", d.to_lowercase()),
            (None, None) => unreachable!("DocumentRef invariant"),
        }
    }

    /// Outbound link: PubMed page for pmids, doi.org resolver otherwise.
    pub fn url(&self) -> String {
        match (self.pmid, &self.doi) {
            (Some(p), _) => format!("https://pubmed.ncbi.nlm.nih.gov/{p}/"),
            (None, Some(d)) => format!("https://doi.org/{d}"),
            (None, None) => unreachable!("DocumentRef invariant"),
        }
    }
}

impl fmt::Display for DocumentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for DocumentRef {
    type Err = LiteratureError;

    /// Accepts `pmid:123`, `PMID:123`, bare `123`, `doi:10.x/y` or bare `10.x/y`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let lower = s.to_lowercase();
        let bad = || LiteratureError::InvalidRef(s.to_string());
        if let Some(rest) = lower.strip_prefix("pmid:") {
            let pmid = rest.trim().parse::<u64>().map_err(|_| bad())?;
            return Self::new(Some(pmid), None);
        }
        if lower.starts_with("doi:") {
            return Self::new(None, Some(s[4..].trim().to_string()));
        }
        if let Ok(pmid) = s.parse::<u64>() {
            return Self::new(Some(pmid), None);
        }
        if s.starts_with("10.") && s.contains('/') {
            return Self::new(None, Some(s.to_string()));
        }
        Err(bad())
    }
}

/// A literature item as it flows through filters and extractors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "ref")]
    pub doc_ref: DocumentRef,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
    /// Full-text paragraphs; empty for abstract-only records.
    pub paragraphs: Vec<String>,
    pub pub_year: Option<i32>,
    pub language: Option<String>,
    /// MeSH descriptor ids (e.g. `D000900`).
    pub mesh_terms: Vec<String>,
}

impl Document {
    /// Title and abstract joined; the unit classified and mined for TiabNPR.
    pub fn title_abstract(&self) -> String {
        match &self.abstract_text {
            Some(a) if !self.title.is_empty() => format!("{}\n{}", self.title, a),
            Some(a) => a.clone(),
            None => self.title.clone(),
        }
    }

    pub fn full_text(&self) -> String {
        self.paragraphs.join("\n\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SearchScope {
    #[default]
    TitleAbstract,
    AllFields,
}

impl SearchScope {
    fn field_tag(self) -> &'static str {
        match self {
            SearchScope::TitleAbstract => "[tiab]",
            SearchScope::AllFields => "[All Fields]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchQuery {
    names: Vec<String>,
    pub scope: SearchScope,
}

impl SearchQuery {
    pub fn new<I, S>(names: I, scope: SearchScope) -> Result<Self, LiteratureError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut clean: Vec<String> = Vec::new();
        for name in names {
            let name = name
                .as_ref()
                .replace('"', "")
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            if name.is_empty() {
                return Err(LiteratureError::InvalidQuery("empty name".into()));
            }
            if !clean.contains(&name) {
                clean.push(name);
            }
        }
        if clean.is_empty() {
            return Err(LiteratureError::InvalidQuery("no names".into()));
        }
        clean.sort();
        Ok(Self {
            names: clean,
            scope,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Each name phrase-quoted with a field tag, OR-joined.
    pub fn term(&self) -> String {
        self.names
            .iter()
            .map(|n| format!("\"{}\"{}", n, self.scope.field_tag()))
            .collect::<Vec<_>>()
            .join(" OR ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_ref_parsing_and_keys() {
        let r: DocumentRef = "PMID:4078571".parse().unwrap();
        assert_eq!(r.key(), "pmid:4078571");
        assert_eq!(r.url(), "https://pubmed.ncbi.nlm.nih.gov/4078571/");
        let d: DocumentRef = "doi:10.1515/znb-2007-1218".parse().unwrap();
        assert_eq!(d.key(), "doi:10.1515/znb-2007-1218");
        assert_eq!(d.url(), "https://doi.org/10.1515/znb-2007-1218");
        assert!("0".parse::<DocumentRef>().is_err());
        assert!("ext. ref".parse::<DocumentRef>().is_err());
        assert!(DocumentRef::new(None, Some("  ".into())).is_err());
    }

    #[test]
    fn query_term_is_quoted_disjunction() {
        let q = SearchQuery::new(
            ["Sarocladium strictum", "Acremonium  strictum", "Sarocladium strictum"],
            SearchScope::TitleAbstract,
        )
        .unwrap();
        assert_eq!(
            q.term(),
            "\"Acremonium strictum\"[tiab] OR \"Sarocladium strictum\"[tiab]"
        );
        assert!(SearchQuery::new(Vec::<String>::new(), SearchScope::AllFields).is_err());
        assert!(SearchQuery::new([" "], SearchScope::AllFields).is_err());
    }

    #[test]
    fn title_abstract_falls_back_to_title() {
        let doc = Document {
            doc_ref: DocumentRef::pmid(8982351),
            title: "Orbuticin".into(),
            abstract_text: None,
            paragraphs: vec![],
            pub_year: None,
            language: None,
            mesh_terms: vec![],
        };
        assert_eq!(doc.title_abstract(), "Orbuticin");
    }
}
