//! Twelve discarded organisms and the 27 reviewer triples behind them.
//!
//! Each row records whether relation extraction and LOTUS know the pair and
//! how the comparison should come out. The scripted backends and canned
//! records are generated from the rows, so the expected outcome follows from
//! the table rather than from hand-written documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::{strictum, Builder, FixtureSet, Taxon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ref {
    Pmid(u64),
    Doi(&'static str),
}

impl Ref {
    pub fn key(self) -> String {
        match self {
            Ref::Pmid(p) => format!("pmid:{p}"),
            Ref::Doi(d) => format!("doi:{d}"),
        }
    }

    fn pmid(self) -> Option<u64> {
        match self {
            Ref::Pmid(p) => Some(p),
            Ref::Doi(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Strong,
    NotRetrieved,
    NoActivityEvidence,
    UnreachableReference,
}

impl Expected {
    pub fn status(self) -> &'static str {
        match self {
            Expected::Strong => "Strong",
            _ => "Missed",
        }
    }

    pub fn reason(self) -> &'static str {
        match self {
            Expected::Strong => "",
            Expected::NotRetrieved => "NotRetrieved",
            Expected::NoActivityEvidence => "NoActivityEvidence",
            Expected::UnreachableReference => "UnreachableReference",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub organism: &'static str,
    pub chemical: &'static str,
    /// Name the system uses, when it differs from the reviewers' spelling.
    pub extracted: Option<&'static str>,
    pub isolation: Ref,
    pub activity: Ref,
    pub re: bool,
    pub lotus: bool,
    /// Synonym under which the pair is reported.
    pub synonym: Option<&'static str>,
    pub expected: Expected,
}

impl Row {
    pub fn name(&self) -> &'static str {
        self.extracted.unwrap_or(self.chemical)
    }

    fn reported_under(&self) -> &'static str {
        self.synonym.unwrap_or(self.organism)
    }
}

const BUTYRI: &str = "Acremonium butyri";
const LUTEOALBUS: &str = "Acrostalagmus luteoalbus";
const TENUISSIMA: &str = "Alternaria tenuissima";
const CALIDOUSTUS: &str = "Aspergillus calidoustus";
const SUBAFFINE: &str = "Chaetomium subaffine";
const MARITIMA: &str = "Corollospora maritima";
const PSEUDOGRAMINEARUM: &str = "Fusarium pseudograminearum";
const AURANTIUS: &str = "Hypomyces aurantius";
const VARIUM: &str = "Cladobotryum varium";
const INVENTA: &str = "Nectria inventa";
const BYSSOIDES: &str = "Periconia byssoides";
const BAKERI: &str = "Pseudeurotium bakeri";

pub const ORGANISMS: [&str; 12] = [
    BUTYRI,
    LUTEOALBUS,
    TENUISSIMA,
    CALIDOUSTUS,
    strictum::ACCEPTED,
    SUBAFFINE,
    MARITIMA,
    PSEUDOGRAMINEARUM,
    AURANTIUS,
    INVENTA,
    BYSSOIDES,
    BAKERI,
];

/// Organisms with a Strong alert when only LOTUS relations are used.
pub const LOTUS_ONLY_STRONG: [&str; 5] = [LUTEOALBUS, CALIDOUSTUS, strictum::ACCEPTED, AURANTIUS, BYSSOIDES];

const STRICTUM_ALIAS: &str = "Acremonium strictum";
const EXT_REF_1: &str = "10.1515/znb-2007-1218";
const EXT_REF_2: &str = "10.3891/acta.chem.scand.51-0855";
const STROBILACTONE_LOTUS_REF: &str = "10.7164/antibiotics.49.505";

#[allow(clippy::too_many_arguments)]
const fn row(
    organism: &'static str,
    chemical: &'static str,
    isolation: Ref,
    activity: Ref,
    re: bool,
    lotus: bool,
    synonym: Option<&'static str>,
    expected: Expected,
) -> Row {
    Row {
        organism,
        chemical,
        extracted: None,
        isolation,
        activity,
        re,
        lotus,
        synonym,
        expected,
    }
}

use Expected::*;
use Ref::{Doi, Pmid};

pub const ROWS: [Row; 27] = [
    row(BUTYRI, "Orbuticin", Pmid(8982351), Pmid(8982351), true, true, None, NoActivityEvidence),
    row(LUTEOALBUS, "Acrozine A-C", Pmid(31226467), Pmid(31226467), true, true, None, Strong),
    row(LUTEOALBUS, "T988 C", Pmid(35621985), Pmid(35621985), false, false, None, NotRetrieved),
    row(LUTEOALBUS, "Lasiodipline E", Pmid(37627256), Pmid(24529576), true, false, None, Strong),
    row(LUTEOALBUS, "Luteoalbusin A", Pmid(23079524), Pmid(35621985), true, true, None, NoActivityEvidence),
    row(TENUISSIMA, "Altertoxin I, II, III", Pmid(25260957), Pmid(37764307), true, false, None, Strong),
    row(TENUISSIMA, "Tenuazonic acid", Pmid(34575812), Pmid(34575812), true, false, None, Strong),
    Row {
        extracted: Some("Alternariol monomethyl ether"),
        ..row(TENUISSIMA, "Alternariol mono. ether", Pmid(24071643), Pmid(38470179), true, false, None, Strong)
    },
    row(CALIDOUSTUS, "Ophiobolin K", Pmid(25812930), Pmid(29375031), true, false, None, Strong),
    row(CALIDOUSTUS, "Strobilactone A", Pmid(8698631), Doi(EXT_REF_1), false, true, None, UnreachableReference),
    row(strictum::ACCEPTED, "Cephalosporin C", Pmid(10397815), Pmid(14126054), true, true, None, Strong),
    row(strictum::ACCEPTED, "Isopenicillin N", Pmid(575040), Pmid(7107525), true, true, None, Strong),
    row(strictum::ACCEPTED, "Cytosporone E", Pmid(29354097), Pmid(22690142), true, false, Some(STRICTUM_ALIAS), Strong),
    row(SUBAFFINE, "Chrysophanol", Pmid(35761187), Pmid(25821480), true, false, None, Strong),
    row(MARITIMA, "Corollosporine", Pmid(16557326), Pmid(16557326), true, false, None, Strong),
    row(PSEUDOGRAMINEARUM, "Deoxynivalenol", Pmid(35878241), Pmid(38408410), true, false, None, Strong),
    row(PSEUDOGRAMINEARUM, "Zearalenone", Pmid(24291181), Pmid(37929585), true, false, None, Strong),
    row(AURANTIUS, "Cladobotryal", Pmid(9586194), Pmid(12934912), false, true, Some(VARIUM), Strong),
    row(AURANTIUS, "Furopyridine antibiotics", Pmid(11918067), Pmid(11918067), true, false, Some(VARIUM), Strong),
    row(AURANTIUS, "Hypomycetin", Doi(EXT_REF_2), Doi(EXT_REF_2), false, true, None, UnreachableReference),
    row(INVENTA, "Chaetocin", Pmid(31569621), Pmid(21140472), true, false, None, Strong),
    row(INVENTA, "Verticillin B", Pmid(31569621), Pmid(31569621), true, false, None, NoActivityEvidence),
    row(BYSSOIDES, "Pericosine A", Pmid(18043803), Pmid(26928999), true, true, None, Strong),
    row(BYSSOIDES, "Macrosphelide A", Pmid(15895526), Pmid(19298513), false, true, None, Strong),
    row(BAKERI, "Cytochalasin X", Pmid(35841670), Pmid(35841670), true, false, None, Strong),
    row(BAKERI, "Chaetoglobosin B", Pmid(36104717), Pmid(26669098), true, false, None, Strong),
    row(BAKERI, "Chaetoglobosin A", Pmid(36104717), Pmid(26669098), true, false, None, Strong),
];

/// (organism, chemical) pairs of the six-row subset: a synonym case, a
/// chemical neither source knows, and the different ways to miss.
pub const SUBSET: [(&str, &str); 6] = [
    (strictum::ACCEPTED, "Cephalosporin C"),
    (AURANTIUS, "Cladobotryal"),
    (LUTEOALBUS, "T988 C"),
    (BUTYRI, "Orbuticin"),
    (CALIDOUSTUS, "Strobilactone A"),
    (TENUISSIMA, "Alternariol mono. ether"),
];

pub const ALIASES: [(&str, &str); 1] = [("Alternariol mono. ether", "Alternariol monomethyl ether")];

/// Metabolite only relation extraction finds, so the organism still gets a
/// Strong alert although its reviewer triple is missed.
const BUTYRI_EXTRA: (&str, u64) = ("Fixture metabolite B1", 99000002);
/// LOTUS pair whose activity is reported in the same record.
const CALIDOUSTUS_LOTUS_EXTRA: (&str, u64) = ("Ophiobolin G", 99000001);

fn taxa() -> Vec<Taxon> {
    let mut out: Vec<Taxon> = [
        ("7000001", BUTYRI),
        ("7000002", LUTEOALBUS),
        ("7000003", TENUISSIMA),
        ("7000004", CALIDOUSTUS),
        ("7000005", SUBAFFINE),
        ("7000006", MARITIMA),
        ("7000007", PSEUDOGRAMINEARUM),
        ("7000008", AURANTIUS),
        ("7000009", INVENTA),
        ("7000010", BYSSOIDES),
        ("7000011", BAKERI),
    ]
    .into_iter()
    .map(|(id, name)| Taxon::species(id, name, "fixture"))
    .collect();
    out.push(Taxon::species("7000013", VARIUM, "fixture").synonym_of("7000008"));
    out
}

fn year(pmid: u64) -> i32 {
    match pmid {
        p if p >= 99_000_000 => 2024,
        p if p >= 38_000_000 => 2024,
        p if p >= 36_000_000 => 2023,
        p if p >= 34_000_000 => 2022,
        p if p >= 31_000_000 => 2019,
        p if p >= 29_000_000 => 2018,
        p if p >= 26_000_000 => 2016,
        p if p >= 24_000_000 => 2014,
        p if p >= 21_000_000 => 2011,
        p if p >= 18_000_000 => 2007,
        p if p >= 15_000_000 => 2005,
        p if p >= 11_000_000 => 2002,
        p if p >= 8_000_000 => 1996,
        _ => 1990,
    }
}

#[derive(Default)]
struct Doc {
    isolated: Vec<String>,
    active: Vec<String>,
    sentences: Vec<String>,
    re_pairs: Vec<(String, String)>,
    title_only: bool,
}

impl Doc {
    fn title(&self) -> String {
        let join = |v: &[String]| v.join(" and ");
        match (self.isolated.is_empty(), self.active.is_empty()) {
            (false, true) => format!("{} from fungal cultures", join(&self.isolated)),
            (true, false) => format!("Antibacterial activity of {}", join(&self.active)),
            _ => format!("Isolation and antibacterial activity of {}", join(&self.isolated)),
        }
    }
}

/// The full scenario, including the strictum records.
pub fn builder() -> Builder {
    let mut b = strictum::builder();
    for t in taxa() {
        b.taxon(t);
    }

    let mut docs: BTreeMap<u64, Doc> = BTreeMap::new();
    let mut org_hits: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    let mut chem_hits: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();

    let mut rows: Vec<Row> = ROWS.iter().filter(|r| r.organism != strictum::ACCEPTED).copied().collect();
    rows.push(Row {
        isolation: Pmid(BUTYRI_EXTRA.1),
        activity: Pmid(BUTYRI_EXTRA.1),
        ..row(BUTYRI, BUTYRI_EXTRA.0, Pmid(0), Pmid(0), true, false, None, Strong)
    });

    for r in &rows {
        let name = r.name();
        let under = r.reported_under();
        if let Some(iso) = r.isolation.pmid() {
            org_hits.entry(r.organism).or_default().insert(iso);
            chem_hits.entry(name.to_string()).or_default().insert(iso);
            let d = docs.entry(iso).or_default();
            d.isolated.push(name.to_string());
            d.sentences
                .push(format!("{name} was obtained from cultures of {under} and characterised by NMR."));
            if r.re {
                d.re_pairs.push((under.to_string(), name.to_string()));
            }
            // Only the title of this record is indexed.
            d.title_only |= r.chemical == "Orbuticin";
        }
        if let Some(act) = r.activity.pmid() {
            chem_hits.entry(name.to_string()).or_default().insert(act);
            if r.expected == Strong {
                let d = docs.entry(act).or_default();
                d.active.push(name.to_string());
                d.sentences.push(format!(
                    "{name} inhibited Staphylococcus aureus with a minimum inhibitory concentration of {} ug/mL.",
                    2 + act % 30
                ));
                b.evidence(
                    name,
                    &format!("{name} inhibited Staphylococcus aureus"),
                    &format!("{name} inhibited Staphylococcus aureus; a minimum inhibitory concentration was reported."),
                );
            }
        }
        if r.lotus {
            let reference = match r.chemical {
                "Strobilactone A" => Doi(STROBILACTONE_LOTUS_REF),
                _ => r.isolation,
            };
            b.lotus(under, name, &reference.key(), reference.pmid().map(year));
        }
    }

    let (g, gp) = CALIDOUSTUS_LOTUS_EXTRA;
    b.lotus(CALIDOUSTUS, g, &Pmid(gp).key(), Some(year(gp)));
    chem_hits.entry(g.to_string()).or_default().insert(gp);
    b.article(
        gp,
        year(gp),
        &format!("{g} from a marine Aspergillus"),
        &format!(
            "{g} was purified from Aspergillus calidoustus. {g} inhibited Staphylococcus aureus with a \
             minimum inhibitory concentration of 4 ug/mL."
        ),
        &[],
    )
    .evidence(
        g,
        &format!("{g} inhibited Staphylococcus aureus"),
        &format!("{g} inhibited Staphylococcus aureus; a minimum inhibitory concentration was reported."),
    );

    for (pmid, d) in &docs {
        let title = d.title();
        let abstract_text = if d.title_only { String::new() } else { d.sentences.join(" ") };
        b.article(*pmid, year(*pmid), &title, &abstract_text, &[]);
        if !d.re_pairs.is_empty() {
            let pairs: Vec<(&str, &str)> = d.re_pairs.iter().map(|(o, c)| (o.as_str(), c.as_str())).collect();
            b.relations(&title, &pairs);
        }
    }
    for (org, hits) in org_hits {
        b.search(org, &hits.into_iter().collect::<Vec<_>>());
    }
    for (chem, hits) in chem_hits {
        b.search(&chem, &hits.into_iter().collect::<Vec<_>>());
    }
    b
}

fn triples_tsv(rows: &[&Row]) -> String {
    let mut out = String::from("organism\tchemical\tisolation_ref\tactivity_ref\tvia_synonym\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.organism,
            r.chemical,
            r.isolation.key(),
            r.activity.key(),
            r.synonym.unwrap_or("")
        );
    }
    out
}

fn expected_tsv(rows: &[&Row]) -> String {
    let mut out = String::from("organism\tchemical\tstatus\treason\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.organism,
            r.chemical,
            r.expected.status(),
            r.expected.reason()
        );
    }
    out
}

pub fn subset_rows() -> Vec<&'static Row> {
    SUBSET
        .iter()
        .map(|(o, c)| {
            ROWS.iter()
                .find(|r| r.organism == *o && r.chemical == *c)
                .expect("subset row exists")
        })
        .collect()
}

pub const TRIPLES_FILE: &str = "triples.tsv";
pub const SUBSET_FILE: &str = "triples_subset.tsv";
pub const ALIASES_FILE: &str = "aliases.tsv";
pub const EXPECTED_FILE: &str = "expected.tsv";
pub const SUBSET_EXPECTED_FILE: &str = "expected_subset.tsv";

/// Writes the scenario, the reviewer triples and the expected comparison.
pub fn write(dir: &Path) -> io::Result<FixtureSet> {
    let config = builder().write(dir, 4)?;
    let all: Vec<&Row> = ROWS.iter().collect();
    let subset = subset_rows();
    fs::write(dir.join(TRIPLES_FILE), triples_tsv(&all))?;
    fs::write(dir.join(SUBSET_FILE), triples_tsv(&subset))?;
    fs::write(dir.join(EXPECTED_FILE), expected_tsv(&all))?;
    fs::write(dir.join(SUBSET_EXPECTED_FILE), expected_tsv(&subset))?;
    let mut aliases = String::from("alias\tname\n");
    for (a, n) in ALIASES {
        let _ = writeln!(aliases, "{a}\t{n}");
    }
    fs::write(dir.join(ALIASES_FILE), aliases)?;
    Ok(FixtureSet {
        dir: dir.to_path_buf(),
        config,
        identifications: ORGANISMS.iter().map(|s| s.to_string()).collect(),
        triples: Some(dir.join(TRIPLES_FILE)),
        aliases: Some(dir.join(ALIASES_FILE)),
        expected: Some(dir.join(EXPECTED_FILE)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        assert_eq!(ROWS.len(), 27);
        let retrieved = ROWS.iter().filter(|r| r.re || r.lotus).count();
        let re = ROWS.iter().filter(|r| r.re).count();
        let missed = ROWS.iter().filter(|r| r.expected != Strong).count();
        assert_eq!((retrieved, re, missed), (26, 22, 6));
        let organisms: BTreeSet<&str> = ROWS.iter().map(|r| r.organism).collect();
        assert_eq!(organisms, ORGANISMS.into_iter().collect());
        assert_eq!(subset_rows().len(), 6);
    }

    #[test]
    fn lotus_only_strong_set_follows_from_rows() {
        let mut strong: BTreeSet<&str> = ROWS
            .iter()
            .filter(|r| r.lotus && r.expected == Strong)
            .map(|r| r.organism)
            .collect();
        strong.insert(CALIDOUSTUS);
        assert_eq!(strong, LOTUS_ONLY_STRONG.into_iter().collect());
    }
}
