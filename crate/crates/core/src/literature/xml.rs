//! Parsers for EUtils XML payloads (esearch results, PubMed records, PMC JATS).

use chrono::Datelike;
use roxmltree::{Document as XmlDocument, Node};

use super::{Document, DocumentRef, LiteratureError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchPage {
    pub count: usize,
    pub ids: Vec<u64>,
}

fn malformed(msg: impl Into<String>) -> LiteratureError {
    LiteratureError::MalformedResponse(msg.into())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|n| n.is_element() && n.tag_name().name() == name)
}

fn children<'a, 'i: 'a>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children()
        .filter(move |n| n.is_element() && n.tag_name().name() == name)
}

fn path<'a, 'i>(node: Node<'a, 'i>, steps: &[&str]) -> Option<Node<'a, 'i>> {
    steps.iter().try_fold(node, |n, step| child(n, step))
}

/// All descendant text with whitespace collapsed; inline markup is flattened.
fn flat_text(node: Node) -> String {
    let raw: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<Vec<_>>()
        .join("");
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn parse_search_page(xml: &str) -> Result<SearchPage, LiteratureError> {
    let doc = XmlDocument::parse(xml).map_err(|e| malformed(format!("esearch: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "eSearchResult" {
        return Err(malformed(format!(
            "esearch: unexpected root <{}>",
            root.tag_name().name()
        )));
    }
    if let Some(err) = child(root, "ERROR") {
        return Err(malformed(format!("esearch error: {}", flat_text(err))));
    }
    let count = child(root, "Count")
        .map(flat_text)
        .ok_or_else(|| malformed("esearch: missing <Count>"))?
        .parse::<usize>()
        .map_err(|e| malformed(format!("esearch: bad <Count>: {e}")))?;
    let ids = match child(root, "IdList") {
        Some(list) => children(list, "Id")
            .map(|n| {
                flat_text(n)
                    .parse::<u64>()
                    .map_err(|e| malformed(format!("esearch: bad <Id>: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    Ok(SearchPage { count, ids })
}

fn plausible_year(year: i32) -> bool {
    let current = chrono::Utc::now().year();
    (1500..=current + 1).contains(&year)
}

fn leading_year(text: &str) -> Option<i32> {
    let digits: String = text.trim().chars().take(4).collect();
    digits.parse::<i32>().ok().filter(|y| plausible_year(*y))
}

/// A PubMed record plus the PMC id needed to fetch its full text.
#[derive(Debug, Clone)]
pub struct PubmedRecord {
    pub document: Document,
    pub pmc_id: Option<String>,
}

fn parse_pubmed_article(article: Node) -> Result<PubmedRecord, LiteratureError> {
    let citation = child(article, "MedlineCitation")
        .ok_or_else(|| malformed("PubmedArticle without MedlineCitation"))?;
    let pmid = child(citation, "PMID")
        .map(flat_text)
        .ok_or_else(|| malformed("PubmedArticle without PMID"))?
        .parse::<u64>()
        .map_err(|e| malformed(format!("bad PMID: {e}")))?;
    let art = child(citation, "Article");

    let title = art
        .and_then(|a| child(a, "ArticleTitle"))
        .map(flat_text)
        .unwrap_or_default();
    let abstract_text = art
        .and_then(|a| child(a, "Abstract"))
        .map(|abs| {
            children(abs, "AbstractText")
                .map(flat_text)
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .filter(|t| !t.is_empty());
    let pub_year = art
        .and_then(|a| path(a, &["Journal", "JournalIssue", "PubDate"]))
        .and_then(|d| {
            child(d, "Year")
                .or_else(|| child(d, "MedlineDate"))
                .map(flat_text)
        })
        .and_then(|y| leading_year(&y));
    let language = art
        .and_then(|a| child(a, "Language"))
        .map(flat_text)
        .filter(|l| !l.is_empty());
    let mesh_terms = child(citation, "MeshHeadingList")
        .map(|list| {
            children(list, "MeshHeading")
                .filter_map(|h| child(h, "DescriptorName"))
                .filter_map(|d| d.attribute("UI").map(str::to_string))
                .collect()
        })
        .unwrap_or_default();

    let mut doi = None;
    let mut pmc_id = None;
    if let Some(ids) = path(article, &["PubmedData", "ArticleIdList"]) {
        for id in children(ids, "ArticleId") {
            match id.attribute("IdType") {
                Some("doi") => doi = Some(flat_text(id)).filter(|d| !d.is_empty()),
                Some("pmc") => pmc_id = Some(flat_text(id)).filter(|p| !p.is_empty()),
                _ => {}
            }
        }
    }

    let doc_ref = DocumentRef::new(Some(pmid), doi)?;
    Ok(PubmedRecord {
        document: Document {
            doc_ref,
            title,
            abstract_text,
            paragraphs: Vec::new(),
            pub_year,
            language,
            mesh_terms,
        },
        pmc_id,
    })
}

/// Parses a `<PubmedArticleSet>`; unparseable articles are returned as errors
/// alongside the good ones rather than failing the whole batch.
pub fn parse_pubmed_set(
    xml: &str,
) -> Result<(Vec<PubmedRecord>, Vec<LiteratureError>), LiteratureError> {
    let doc = XmlDocument::parse(xml).map_err(|e| malformed(format!("efetch: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "PubmedArticleSet" {
        return Err(malformed(format!(
            "efetch: unexpected root <{}>",
            root.tag_name().name()
        )));
    }
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for article in children(root, "PubmedArticle") {
        match parse_pubmed_article(article) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    Ok((records, errors))
}

/// Full-text paragraphs for one PMC article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullText {
    pub pmid: Option<u64>,
    pub pmc_id: Option<String>,
    pub paragraphs: Vec<String>,
}

fn inside_float(node: Node) -> bool {
    node.ancestors().any(|a| {
        matches!(
            a.tag_name().name(),
            "fig" | "table-wrap" | "supplementary-material"
        )
    })
}

pub fn parse_pmc_set(xml: &str) -> Result<Vec<FullText>, LiteratureError> {
    let doc = XmlDocument::parse(xml).map_err(|e| malformed(format!("pmc efetch: {e}")))?;
    let root = doc.root_element();
    let articles: Vec<Node> = match root.tag_name().name() {
        "pmc-articleset" => children(root, "article").collect(),
        "article" => vec![root],
        other => return Err(malformed(format!("pmc efetch: unexpected root <{other}>"))),
    };
    let mut out = Vec::new();
    for article in articles {
        let mut pmid = None;
        let mut pmc_id = None;
        if let Some(meta) = path(article, &["front", "article-meta"]) {
            for id in children(meta, "article-id") {
                match id.attribute("pub-id-type") {
                    Some("pmid") => pmid = flat_text(id).parse::<u64>().ok(),
                    Some("pmc") | Some("pmcid") | Some("pmcaid") => {
                        let raw = flat_text(id);
                        pmc_id = Some(if raw.starts_with("PMC") {
                            raw
                        } else {
                            format!("PMC{raw}")
                        });
                    }
                    _ => {}
                }
            }
        }
        let paragraphs = child(article, "body")
            .map(|body| {
                body.descendants()
                    .filter(|n| n.is_element() && n.tag_name().name() == "p")
                    .filter(|p| !inside_float(*p))
                    .filter(|p| !p.ancestors().skip(1).any(|a| a.tag_name().name() == "p"))
                    .map(flat_text)
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        out.push(FullText {
            pmid,
            pmc_id,
            paragraphs,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_page_roundtrip() {
        let page = parse_search_page(
            "<eSearchResult><Count>3</Count><RetMax>2</RetMax><RetStart>0</RetStart>\
             <IdList><Id>575040</Id><Id>10397815</Id></IdList></eSearchResult>",
        )
        .unwrap();
        assert_eq!(page.count, 3);
        assert_eq!(page.ids, vec![575040, 10397815]);
    }

    #[test]
    fn search_error_is_malformed() {
        assert!(parse_search_page("<eSearchResult><ERROR>bad term</ERROR></eSearchResult>").is_err());
        assert!(parse_search_page("<html/>").is_err());
        assert!(parse_search_page("not xml").is_err());
    }

    #[test]
    fn pubmed_article_fields() {
        let xml = r#"<PubmedArticleSet><PubmedArticle>
          <MedlineCitation><PMID Version="1">14126054</PMID>
            <Article><Journal><JournalIssue><PubDate><MedlineDate>1964 Jan-Feb</MedlineDate></PubDate></JournalIssue></Journal>
              <ArticleTitle>Antibacterial activity of <i>cephalosporin C</i>.</ArticleTitle>
              <Abstract><AbstractText Label="BACKGROUND">First part.</AbstractText><AbstractText>Second   part.</AbstractText></Abstract>
              <Language>eng</Language></Article>
            <MeshHeadingList><MeshHeading><DescriptorName UI="D000900">Anti-Bacterial Agents</DescriptorName></MeshHeading></MeshHeadingList>
          </MedlineCitation>
          <PubmedData><ArticleIdList><ArticleId IdType="pubmed">14126054</ArticleId><ArticleId IdType="doi">10.1000/x</ArticleId><ArticleId IdType="pmc">PMC1</ArticleId></ArticleIdList></PubmedData>
        </PubmedArticle></PubmedArticleSet>"#;
        let (records, errors) = parse_pubmed_set(xml).unwrap();
        assert!(errors.is_empty());
        let r = &records[0];
        assert_eq!(r.document.doc_ref.pmid, Some(14126054));
        assert_eq!(r.document.doc_ref.doi.as_deref(), Some("10.1000/x"));
        assert_eq!(r.document.title, "Antibacterial activity of cephalosporin C.");
        assert_eq!(r.document.abstract_text.as_deref(), Some("First part. Second part."));
        assert_eq!(r.document.pub_year, Some(1964));
        assert_eq!(r.document.mesh_terms, vec!["D000900"]);
        assert_eq!(r.pmc_id.as_deref(), Some("PMC1"));
    }

    #[test]
    fn missing_abstract_is_absent_not_empty() {
        let xml = "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>8982351</PMID>\
                   <Article><ArticleTitle>Orbuticin</ArticleTitle><Abstract><AbstractText/></Abstract></Article>\
                   </MedlineCitation></PubmedArticle></PubmedArticleSet>";
        let (records, _) = parse_pubmed_set(xml).unwrap();
        assert_eq!(records[0].document.abstract_text, None);
    }

    #[test]
    fn pmc_paragraphs_skip_figures() {
        let xml = r#"<pmc-articleset><article><front><article-meta>
            <article-id pub-id-type="pmid">10397815</article-id><article-id pub-id-type="pmc">123</article-id>
            </article-meta></front><body><sec><p>One <b>bold</b> para.</p>
            <fig><caption><p>Figure text.</p></caption></fig><p>Two.</p></sec></body></article></pmc-articleset>"#;
        let texts = parse_pmc_set(xml).unwrap();
        assert_eq!(texts[0].pmid, Some(10397815));
        assert_eq!(texts[0].pmc_id.as_deref(), Some("PMC123"));
        assert_eq!(texts[0].paragraphs, vec!["One bold para.", "Two."]);
    }
}
