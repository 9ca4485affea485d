use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::cache::CachedTransport;
use super::transport::{Clock, RateLimited, RateLimiter, Request, RetryPolicy, Retrying, Transport};
use super::xml::{parse_pmc_set, parse_pubmed_set, parse_search_page};
use super::{Document, LiteratureError, SearchQuery};

pub const DEFAULT_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EUtilsConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub email: Option<String>,
    pub tool: String,
    /// esearch `retmax` per page.
    pub page_size: usize,
    /// Maximum ids per efetch request.
    pub batch_size: usize,
}

impl Default for EUtilsConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            email: None,
            tool: "np-alarm".to_string(),
            page_size: 5000,
            batch_size: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FetchOptions {
    /// Also pull PMC full-text paragraphs when a PMC id is available.
    pub full_text: bool,
}

#[derive(Debug, Clone, Default)]
pub struct FetchOutcome {
    /// Documents ordered by pmid.
    pub documents: Vec<Document>,
    pub not_found: Vec<u64>,
    /// Per-record parse problems; the batch still succeeds.
    pub record_errors: Vec<String>,
}

pub struct EUtilsClient {
    config: EUtilsConfig,
    transport: Arc<dyn Transport>,
}

impl EUtilsClient {
    pub fn new(config: EUtilsConfig, transport: Arc<dyn Transport>) -> Self {
        Self { config, transport }
    }

    /// Wraps `upstream` in the standard stack: optional cache, then retries,
    /// then the shared rate limiter.
    pub fn with_stack(
        config: EUtilsConfig,
        upstream: Arc<dyn Transport>,
        limiter: Arc<RateLimiter>,
        retry: RetryPolicy,
        clock: Arc<dyn Clock>,
        cache_dir: Option<PathBuf>,
    ) -> Result<Self, LiteratureError> {
        let network: Arc<dyn Transport> =
            Arc::new(Retrying::new(RateLimited::new(upstream, limiter), retry, clock));
        let transport: Arc<dyn Transport> = match cache_dir {
            Some(dir) => Arc::new(CachedTransport::new(network, dir)?),
            None => network,
        };
        Ok(Self::new(config, transport))
    }

    pub fn config(&self) -> &EUtilsConfig {
        &self.config
    }

    fn request(&self, endpoint: &str) -> Request {
        let mut req = Request::new(format!(
            "{}/{}",
            self.config.base_url.trim_end_matches('/'),
            endpoint
        ));
        req = req.param("tool", self.config.tool.clone());
        if let Some(email) = &self.config.email {
            req = req.param("email", email.clone());
        }
        if let Some(key) = &self.config.api_key {
            req = req.param("api_key", key.clone());
        }
        req
    }

    /// Runs an esearch for the OR of the query's names and returns the
    /// deduplicated pmids in ascending order, following pagination.
    pub fn search(&self, query: &SearchQuery) -> Result<Vec<u64>, LiteratureError> {
        let term = query.term();
        let mut ids = BTreeSet::new();
        let mut start = 0usize;
        loop {
            let req = self
                .request("esearch.fcgi")
                .param("db", "pubmed")
                .param("term", term.clone())
                .param("retstart", start.to_string())
                .param("retmax", self.config.page_size.to_string());
            let page = parse_search_page(&self.transport.get(&req)?)?;
            let got = page.ids.len();
            ids.extend(page.ids);
            start += got;
            if got == 0 || start >= page.count {
                break;
            }
        }
        Ok(ids.into_iter().collect())
    }

    /// Fetches and parses PubMed records, batched to the configured limit.
    /// Only requested pmids are returned; missing ones land in `not_found`.
    pub fn fetch(
        &self,
        pmids: &[u64],
        options: FetchOptions,
    ) -> Result<FetchOutcome, LiteratureError> {
        if pmids.is_empty() {
            return Err(LiteratureError::EmptyRequest);
        }
        let wanted: BTreeSet<u64> = pmids.iter().copied().collect();
        let wanted_list: Vec<u64> = wanted.iter().copied().collect();
        let mut found: BTreeMap<u64, Document> = BTreeMap::new();
        let mut pmc_ids: BTreeMap<String, u64> = BTreeMap::new();
        let mut outcome = FetchOutcome::default();

        for batch in wanted_list.chunks(self.config.batch_size.max(1)) {
            let ids = batch
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            let req = self
                .request("efetch.fcgi")
                .param("db", "pubmed")
                .param("id", ids)
                .param("retmode", "xml");
            let (records, errors) = parse_pubmed_set(&self.transport.get(&req)?)?;
            outcome
                .record_errors
                .extend(errors.into_iter().map(|e| e.to_string()));
            for record in records {
                let pmid = record.document.doc_ref.pmid.unwrap_or_default();
                if !wanted.contains(&pmid) {
                    warn!(pmid, "efetch returned an unrequested record, dropping");
                    continue;
                }
                if let Some(pmc) = record.pmc_id {
                    pmc_ids.insert(pmc, pmid);
                }
                found.insert(pmid, record.document);
            }
        }

        if options.full_text && !pmc_ids.is_empty() {
            let pmc_list: Vec<&String> = pmc_ids.keys().collect();
            for batch in pmc_list.chunks(self.config.batch_size.max(1)) {
                let ids = batch
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(",");
                let req = self
                    .request("efetch.fcgi")
                    .param("db", "pmc")
                    .param("id", ids)
                    .param("retmode", "xml");
                let body = self.transport.get(&req)?;
                match parse_pmc_set(&body) {
                    Ok(texts) => {
                        for text in texts {
                            let pmid = text
                                .pmid
                                .or_else(|| text.pmc_id.as_ref().and_then(|p| pmc_ids.get(p).copied()));
                            if let Some(doc) = pmid.and_then(|p| found.get_mut(&p)) {
                                doc.paragraphs = text.paragraphs;
                            }
                        }
                    }
                    Err(e) => outcome.record_errors.push(e.to_string()),
                }
            }
        }

        outcome.not_found = wanted
            .iter()
            .filter(|p| !found.contains_key(p))
            .copied()
            .collect();
        outcome.documents = found.into_values().collect();
        Ok(outcome)
    }
}
