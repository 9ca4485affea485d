//! Self-contained offline scenarios: a backbone, canned PubMed records, a
//! LOTUS dump and scripted backends, written to a directory with a config
//! file that `np-alarm run` accepts.
//!
//! All records are synthetic. PubMed ids match the references they stand in
//! for, but titles and abstracts are short invented summaries; ids from
//! 99000000 upwards are fixture-only.

pub mod evaluation;
pub mod strictum;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::extraction::{normalize_chemical_name, StubRule, StubScript};
use crate::literature::{ArticleSpec, CannedEutils, DocumentRef};
use crate::lotus::{LotusDump, LotusRelation};
use crate::taxonomy::REQUIRED_COLUMNS;

/// Files of a written fixture.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub identifications: Vec<String>,
    /// Expert triples, when the scenario has a reference table.
    pub triples: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    /// Expected comparison outcome per triple.
    pub expected: Option<PathBuf>,
}

/// One backbone row.
#[derive(Debug, Clone)]
pub struct Taxon {
    pub id: &'static str,
    pub name: &'static str,
    pub author: &'static str,
    pub rank: &'static str,
    pub accepted: Option<&'static str>,
    pub parent: Option<&'static str>,
}

impl Taxon {
    pub const fn species(id: &'static str, name: &'static str, author: &'static str) -> Self {
        Self {
            id,
            name,
            author,
            rank: "species",
            accepted: None,
            parent: None,
        }
    }

    pub const fn synonym_of(mut self, accepted: &'static str) -> Self {
        self.accepted = Some(accepted);
        self
    }
}

/// Assembles a scenario before writing it out.
#[derive(Default)]
pub struct Builder {
    taxa: Vec<Taxon>,
    canned: CannedEutils,
    lotus: Vec<LotusRelation>,
    relation_rules: Vec<StubRule>,
    evidence_rules: Vec<StubRule>,
    documents: usize,
}

pub const STRONG_MARKERS: &[&str] = &[
    "minimum inhibitory concentration",
    "inhibition zone",
    "as active as",
    "protected infected mice",
];
pub const MEDIUM_MARKERS: &[&str] = &["weak antibacterial", "modest inhibition"];

fn rule(regex: String, respond: &str) -> StubRule {
    StubRule {
        regex: Some(regex),
        digest: None,
        respond: respond.to_string(),
    }
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn taxon(&mut self, t: Taxon) -> &mut Self {
        self.taxa.push(t);
        self
    }

    /// A PubMed record; an empty abstract is left out and paragraphs, when given, become its PMC full text.
    pub fn article(
        &mut self,
        pmid: u64,
        year: i32,
        title: &str,
        abstract_text: &str,
        paragraphs: &[&str],
    ) -> &mut Self {
        let pmc_id = (!paragraphs.is_empty()).then(|| format!("PMC{}", pmid + 7_000_000));
        self.canned.add_article(&ArticleSpec {
            pmid,
            title: title.to_string(),
            abstract_text: (!abstract_text.is_empty()).then(|| abstract_text.to_string()),
            year: Some(year),
            pmc_id: pmc_id.clone(),
            ..Default::default()
        });
        if let Some(pmc) = pmc_id {
            self.canned.add_full_text(pmid, &pmc, paragraphs);
        }
        self.documents += 1;
        self
    }

    /// Search hits for a name (organism or chemical).
    pub fn search(&mut self, name: &str, pmids: &[u64]) -> &mut Self {
        self.canned.add_search(name, pmids.iter().copied());
        self
    }

    /// Relation extraction answers `pairs` for any passage containing `phrase`.
    pub fn relations(&mut self, phrase: &str, pairs: &[(&str, &str)]) -> &mut Self {
        let lines: Vec<String> = pairs.iter().map(|(o, c)| format!("{o} | {c}")).collect();
        self.relation_rules.push(rule(
            format!("(?s)^You extract natural product relations.*Text:\n.*{}", regex::escape(phrase)),
            &lines.join("\n"),
        ));
        self
    }

    /// Stage-one evidence answer for `subject` on any text containing `phrase`.
    pub fn evidence(&mut self, subject: &str, phrase: &str, rationale: &str) -> &mut Self {
        self.evidence_rules.push(rule(
            format!(
                "(?si)^You are helping a team check.*Subject: {}\n.*Text:\n.*{}",
                regex::escape(subject),
                regex::escape(phrase)
            ),
            rationale,
        ));
        self
    }

    pub fn lotus(&mut self, organism: &str, chemical: &str, reference: &str, year: Option<i32>) -> &mut Self {
        self.lotus.push(LotusRelation {
            organism_name: organism.to_string(),
            chemical: normalize_chemical_name(chemical).expect("fixture chemical"),
            structure_id: None,
            reference: reference.parse::<DocumentRef>().expect("fixture reference"),
            reference_year: year,
        });
        self
    }

    pub fn document_count(&self) -> usize {
        self.documents
    }

    fn relation_script(&self) -> StubScript {
        StubScript {
            backend: "stub".into(),
            model: "fixture-relations".into(),
            rules: self.relation_rules.clone(),
            default: Some("NONE".into()),
        }
    }

    fn evidence_script(&self) -> StubScript {
        let mut rules = self.evidence_rules.clone();
        let level = |markers: &[&str]| {
            let alts: Vec<String> = markers.iter().map(|m| regex::escape(m)).collect();
            format!("(?si)^Assign one alert level.*Evidence:\n.*({})", alts.join("|"))
        };
        rules.push(rule(level(STRONG_MARKERS), "Strong\nActivity was measured experimentally."));
        rules.push(rule(level(MEDIUM_MARKERS), "Medium\nThe reported activity is weak."));
        rules.push(rule("(?s)^Assign one alert level".into(), "Weak\nNothing substantial supports activity."));
        StubScript {
            backend: "stub".into(),
            model: "fixture-evidence".into(),
            rules,
            default: Some("No evidence found in this text.".into()),
        }
    }

    fn backbone_tsv(&self) -> String {
        let mut out = REQUIRED_COLUMNS.join("\t");
        out.push('\n');
        for t in &self.taxa {
            let status = if t.accepted.is_some() { "synonym" } else { "accepted" };
            let _ = writeln!(
                out,
                "{}\t{}\t{} {}\t{}\t{}\t{}\t{}",
                t.id,
                t.name,
                t.name,
                t.author,
                t.rank,
                status,
                t.accepted.unwrap_or(""),
                t.parent.unwrap_or("")
            );
        }
        out
    }

    /// Writes every file plus `config.toml`; returns the config path.
    pub fn write(&self, dir: &Path, parallelism: usize) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("backbone.tsv"), self.backbone_tsv())?;
        self.canned.save(&dir.join("eutils"))?;
        let mut lotus = Vec::new();
        LotusDump::write_relations(&self.lotus, &mut lotus)?;
        fs::write(dir.join("lotus.tsv"), lotus)?;
        for (file, script) in [
            ("stub_relation.json", self.relation_script()),
            ("stub_evidence.json", self.evidence_script()),
        ] {
            fs::write(dir.join(file), serde_json::to_string_pretty(&script)? + "\n")?;
        }
        let config = format!(
            "# Offline fixture run: canned PubMed, LOTUS dump, scripted backends.\n\
             [taxonomy]\nbackbone = \"backbone.tsv\"\n\n\
             [literature]\nchemical_full_text = false\n\n\
             [literature.source]\nkind = \"canned\"\ndir = \"eutils\"\n\n\
             [backends.relation]\nkind = \"stub\"\nscript = \"stub_relation.json\"\n\n\
             [backends.evidence]\nkind = \"stub\"\nscript = \"stub_evidence.json\"\n\n\
             [lotus]\nkind = \"dump\"\npath = \"lotus.tsv\"\n\n\
             [run]\nmode = \"full\"\nparallelism = {parallelism}\nchunk_size = 1500\n"
        );
        let path = dir.join("config.toml");
        fs::write(&path, config)?;
        Ok(path)
    }
}
