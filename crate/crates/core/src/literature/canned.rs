//! Offline EUtils replay: answers esearch/efetch from canned records.
//!
//! Fixture directory layout:
//!
//! ```text
//! esearch.tsv        name<TAB>pmid[,pmid...]   (one line per name; '#' comments)
//! pubmed/<pmid>.xml  one <PubmedArticle> element
//! pmc/<PMCID>.xml    one JATS <article> element
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use regex::Regex;

use super::transport::{Request, Transport, TransportError};
use crate::taxonomy::normalize_name;

#[derive(Default)]
pub struct CannedEutils {
    searches: BTreeMap<String, BTreeSet<u64>>,
    articles: BTreeMap<u64, String>,
    pmc: BTreeMap<String, String>,
    log: Mutex<Vec<Request>>,
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Inputs for a synthetic PubMed record.
#[derive(Debug, Clone, Default)]
pub struct ArticleSpec {
    pub pmid: u64,
    pub title: String,
    pub abstract_text: Option<String>,
    pub year: Option<i32>,
    pub doi: Option<String>,
    pub pmc_id: Option<String>,
    pub mesh: Vec<(String, String)>,
    pub language: Option<String>,
}

pub fn pubmed_article_xml(spec: &ArticleSpec) -> String {
    let mut xml = String::new();
    let _ = write!(
        xml,
        "<PubmedArticle>\n  <MedlineCitation Status=\"MEDLINE\">\n    <PMID Version=\"1\">{}</PMID>\n    <Article>\n",
        spec.pmid
    );
    if let Some(year) = spec.year {
        let _ = writeln!(
            xml,
            "      <Journal><JournalIssue><PubDate><Year>{year}</Year></PubDate></JournalIssue></Journal>"
        );
    }
    let _ = writeln!(
        xml,
        "      <ArticleTitle>{}</ArticleTitle>",
        xml_escape(&spec.title)
    );
    if let Some(abs) = &spec.abstract_text {
        let _ = writeln!(
            xml,
            "      <Abstract><AbstractText>{}</AbstractText></Abstract>",
            xml_escape(abs)
        );
    }
    let _ = writeln!(
        xml,
        "      <Language>{}</Language>",
        spec.language.as_deref().unwrap_or("eng")
    );
    xml.push_str("    </Article>\n");
    if !spec.mesh.is_empty() {
        xml.push_str("    <MeshHeadingList>\n");
        for (ui, label) in &spec.mesh {
            let _ = writeln!(
                xml,
                "      <MeshHeading><DescriptorName UI=\"{ui}\">{}</DescriptorName></MeshHeading>",
                xml_escape(label)
            );
        }
        xml.push_str("    </MeshHeadingList>\n");
    }
    xml.push_str("  </MedlineCitation>\n  <PubmedData>\n    <ArticleIdList>\n");
    let _ = writeln!(
        xml,
        "      <ArticleId IdType=\"pubmed\">{}</ArticleId>",
        spec.pmid
    );
    if let Some(doi) = &spec.doi {
        let _ = writeln!(
            xml,
            "      <ArticleId IdType=\"doi\">{}</ArticleId>",
            xml_escape(doi)
        );
    }
    if let Some(pmc) = &spec.pmc_id {
        let _ = writeln!(xml, "      <ArticleId IdType=\"pmc\">{pmc}</ArticleId>");
    }
    xml.push_str("    </ArticleIdList>\n  </PubmedData>\n</PubmedArticle>\n");
    xml
}

pub fn pmc_article_xml(pmid: u64, pmc_id: &str, paragraphs: &[&str]) -> String {
    let mut xml = String::new();
    let _ = write!(
        xml,
        "<article>\n  <front><article-meta>\n    <article-id pub-id-type=\"pmid\">{pmid}</article-id>\n    <article-id pub-id-type=\"pmc\">{pmc_id}</article-id>\n  </article-meta></front>\n  <body><sec>\n"
    );
    for p in paragraphs {
        let _ = writeln!(xml, "    <p>{}</p>", xml_escape(p));
    }
    xml.push_str("  </sec></body>\n</article>\n");
    xml
}

impl CannedEutils {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(dir: &Path) -> std::io::Result<Self> {
        let mut canned = Self::new();
        let esearch = dir.join("esearch.tsv");
        if esearch.exists() {
            for line in fs::read_to_string(esearch)?.lines() {
                let line = line.trim_end();
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let (name, ids) = line.split_once('\t').ok_or_else(|| {
                    std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("esearch.tsv: expected name<TAB>ids, got {line:?}"),
                    )
                })?;
                let pmids = ids
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<u64>().map_err(|e| {
                            std::io::Error::new(std::io::ErrorKind::InvalidData, e)
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                canned.add_search(name, pmids);
            }
        }
        for (sub, is_pmc) in [("pubmed", false), ("pmc", true)] {
            let folder = dir.join(sub);
            if !folder.is_dir() {
                continue;
            }
            let mut entries: Vec<_> = fs::read_dir(&folder)?.collect::<Result<_, _>>()?;
            entries.sort_by_key(|e| e.file_name());
            for entry in entries {
                let path = entry.path();
                if path.extension().and_then(|e| e.to_str()) != Some("xml") {
                    continue;
                }
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                let body = fs::read_to_string(&path)?;
                if is_pmc {
                    canned.pmc.insert(stem, body);
                } else {
                    let pmid = stem.parse::<u64>().map_err(|e| {
                        std::io::Error::new(
                            std::io::ErrorKind::InvalidData,
                            format!("{}: {e}", path.display()),
                        )
                    })?;
                    canned.articles.insert(pmid, body);
                }
            }
        }
        Ok(canned)
    }

    /// Writes the canned records in the directory layout `load` reads.
    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir.join("pubmed"))?;
        fs::create_dir_all(dir.join("pmc"))?;
        let mut tsv = String::new();
        for (name, ids) in &self.searches {
            let ids: Vec<String> = ids.iter().map(u64::to_string).collect();
            let _ = writeln!(tsv, "{}\t{}", name, ids.join(","));
        }
        fs::write(dir.join("esearch.tsv"), tsv)?;
        for (pmid, xml) in &self.articles {
            fs::write(dir.join("pubmed").join(format!("{pmid}.xml")), xml)?;
        }
        for (pmc, xml) in &self.pmc {
            fs::write(dir.join("pmc").join(format!("{pmc}.xml")), xml)?;
        }
        Ok(())
    }

    pub fn add_search<I: IntoIterator<Item = u64>>(&mut self, name: &str, pmids: I) {
        self.searches
            .entry(normalize_name(name))
            .or_default()
            .extend(pmids);
    }

    pub fn add_article(&mut self, spec: &ArticleSpec) {
        self.articles.insert(spec.pmid, pubmed_article_xml(spec));
    }

    pub fn add_article_xml(&mut self, pmid: u64, xml: String) {
        self.articles.insert(pmid, xml);
    }

    pub fn add_full_text(&mut self, pmid: u64, pmc_id: &str, paragraphs: &[&str]) {
        self.pmc
            .insert(pmc_id.to_string(), pmc_article_xml(pmid, pmc_id, paragraphs));
    }

    pub fn requests(&self) -> Vec<Request> {
        self.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    fn search_response(&self, request: &Request) -> Result<String, TransportError> {
        let term = request.get_param("term").unwrap_or_default();
        let quoted = Regex::new(r#""([^"]+)""#).expect("static regex");
        let mut ids = BTreeSet::new();
        for cap in quoted.captures_iter(term) {
            if let Some(hits) = self.searches.get(&normalize_name(&cap[1])) {
                ids.extend(hits.iter().copied());
            }
        }
        let start: usize = request
            .get_param("retstart")
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        let max: usize = request
            .get_param("retmax")
            .and_then(|s| s.parse().ok())
            .unwrap_or(20);
        let page: Vec<u64> = ids.iter().skip(start).take(max).copied().collect();
        let mut xml = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<eSearchResult><Count>{}</Count><RetMax>{}</RetMax><RetStart>{}</RetStart><IdList>",
            ids.len(),
            page.len(),
            start
        );
        for id in page {
            let _ = write!(xml, "<Id>{id}</Id>");
        }
        xml.push_str("</IdList></eSearchResult>");
        Ok(xml)
    }

    fn fetch_response(&self, request: &Request) -> Result<String, TransportError> {
        let ids: Vec<&str> = request
            .get_param("id")
            .unwrap_or_default()
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        match request.get_param("db") {
            Some("pmc") => {
                let mut xml = String::from("<?xml version=\"1.0\"?>\n<pmc-articleset>\n");
                for id in ids {
                    let key = if id.starts_with("PMC") {
                        id.to_string()
                    } else {
                        format!("PMC{id}")
                    };
                    if let Some(article) = self.pmc.get(&key) {
                        xml.push_str(article);
                    }
                }
                xml.push_str("</pmc-articleset>\n");
                Ok(xml)
            }
            _ => {
                let mut xml = String::from("<?xml version=\"1.0\"?>\n<PubmedArticleSet>\n");
                for id in ids {
                    if let Some(article) = id.parse::<u64>().ok().and_then(|p| self.articles.get(&p)) {
                        xml.push_str(article);
                    }
                }
                xml.push_str("</PubmedArticleSet>\n");
                Ok(xml)
            }
        }
    }
}

impl Transport for CannedEutils {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        self.log.lock().unwrap().push(request.clone());
        if request.url.ends_with("esearch.fcgi") {
            self.search_response(request)
        } else if request.url.ends_with("efetch.fcgi") {
            self.fetch_response(request)
        } else {
            Err(TransportError::Status {
                code: 404,
                body: format!("no canned endpoint for {}", request.url),
            })
        }
    }
}
