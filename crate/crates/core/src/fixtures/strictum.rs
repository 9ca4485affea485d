//! *Sarocladium strictum* and its three synonyms, with cephalosporin C
//! reachable only through *Cephalosporium acremonium*.

use std::io;
use std::path::Path;

use super::{Builder, FixtureSet, Taxon};
use crate::model::AlertLevel;

pub const ACCEPTED: &str = "Sarocladium strictum";
pub const ACCEPTED_ID: &str = "5459730";

pub const TAXA: [Taxon; 4] = [
    Taxon::species(ACCEPTED_ID, ACCEPTED, "(W.Gams) Summerb."),
    Taxon::species("2556203", "Cephalosporium acremonium", "Corda").synonym_of(ACCEPTED_ID),
    Taxon::species("5459733", "Hyalopus acremonium", "(Corda) Mont.").synonym_of(ACCEPTED_ID),
    Taxon::species("2556209", "Acremonium strictum", "W.Gams").synonym_of(ACCEPTED_ID),
];

pub const DIPEPTIDE: &str = "delta-(L-alpha-aminoadipyl)-L-cysteine";

/// A text run through the two-stage evidence extraction on its own.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub subject: &'static str,
    pub pmid: u64,
    pub text: &'static str,
    pub level: AlertLevel,
    pub evidence_found: bool,
}

const STRONG_TEXT: &str = "Cephalosporin C was compared with reference penicillins in vitro and in mice. \
Against most Gram-positive species tested it was about as active as benzylpenicillin, although \
penicillin-sensitive Staphylococcus aureus needed roughly eight times more drug. Penicillinase-forming \
staphylococci were inhibited at four- to eightfold lower levels than with methicillin, and a \
combination with benzylpenicillin protected infected mice better than either drug alone.";

const MEDIUM_TEXT: &str = "A marine-derived isolate of Acremonium strictum yielded acremostrictin, \
a new tricyclic lactone whose structure was assigned from NMR and X-ray data. The compound was a \
good radical scavenger, while its antibacterial effect was only weak.";

const WEAK_TEXT: &str = "Cell-free extracts of Cephalosporium acremonium joined L-alpha-aminoadipic \
acid and L-cysteine into delta-(L-alpha-aminoadipyl)-L-cysteine. With L-valine also present the \
extracts went on to the tripeptide. Products were characterised by chromatography and mass \
spectrometry.";

pub const SAMPLES: [Sample; 3] = [
    Sample {
        subject: "Cephalosporin C",
        pmid: 4078571,
        text: STRONG_TEXT,
        level: AlertLevel::Strong,
        evidence_found: true,
    },
    Sample {
        subject: "Acremostrictin",
        pmid: 22136576,
        text: MEDIUM_TEXT,
        level: AlertLevel::Medium,
        evidence_found: true,
    },
    Sample {
        subject: DIPEPTIDE,
        pmid: 6684424,
        text: WEAK_TEXT,
        level: AlertLevel::Weak,
        evidence_found: false,
    },
];

/// Adds the scenario to `b`.
pub fn populate(b: &mut Builder) {
    for t in TAXA {
        b.taxon(t);
    }

    // Organism literature.
    b.search("Cephalosporium acremonium", &[10397815, 6684424, 575040])
        .search("Acremonium strictum", &[22136576, 29354097])
        .search(ACCEPTED, &[29354097]);
    b.article(
        10397815,
        1999,
        "Feeding strategies for cephalosporin C fermentation",
        "Cephalosporium acremonium is the industrial source of cephalosporin C. A glucose and \
         methionine feeding schedule raised titres in fed-batch reactors by a third.",
        &[
            "Strains and media. The production strain of Cephalosporium acremonium was kept on \
             slants and grown in complex medium before transfer to the reactors.",
            "Product recovery. Cephalosporin C was recovered from the broth of Cephalosporium \
             acremonium by adsorption and quantified by HPLC against a reference standard.",
        ],
    )
    .relations(
        "Cephalosporium acremonium is the industrial source",
        &[("Cephalosporium acremonium", "Cephalosporin C")],
    )
    .relations(
        "recovered from the broth of Cephalosporium",
        &[("Cephalosporium acremonium", "Cephalosporin C")],
    );
    b.article(
        6684424,
        1983,
        "A dipeptide and a tripeptide made by cell-free extracts",
        WEAK_TEXT,
        &[],
    )
    .relations("Cell-free extracts of Cephalosporium", &[("Cephalosporium acremonium", DIPEPTIDE)]);
    b.article(
        22136576,
        2012,
        "Acremostrictin, a tricyclic lactone from a marine fungus",
        MEDIUM_TEXT,
        &[],
    )
    .relations("yielded acremostrictin", &[("Acremonium strictum", "Acremostrictin")])
    .evidence(
        "Acremonium strictum",
        "yielded acremostrictin",
        "A compound from this isolate showed weak antibacterial activity, so the support is minor.",
    );
    b.article(
        29354097,
        2018,
        "Polyketides from a rice culture of Acremonium strictum",
        "Chemical study of Acremonium strictum grown on rice gave cytosporone E together with two \
         known polyketides. Their cytotoxicity was assessed on three cell lines.",
        &[],
    )
    .relations("grown on rice gave cytosporone E", &[("Acremonium strictum", "Cytosporone E")]);
    b.article(
        575040,
        1979,
        "Ring closure of a tripeptide in protoplast lysates",
        "Lysates from Cephalosporium acremonium protoplasts cyclised the tripeptide precursor. The \
         product was identified as isopenicillin N by chromatography and bioassay.",
        &[],
    )
    .relations(
        "identified as isopenicillin N",
        &[("Cephalosporium acremonium", "Isopenicillin N")],
    );

    b.lotus("Cephalosporium acremonium", "Cephalosporin C", "pmid:14126054", Some(1964))
        .lotus(ACCEPTED, "Isopenicillin N", "pmid:575040", Some(1979))
        .lotus("Acremonium strictum", "Acremostrictin", "doi:10.5555/fixture.1", Some(2012));

    // Chemical literature.
    b.search("Cephalosporin C", &[14126054, 4078571])
        .search("Isopenicillin N", &[7107525])
        .search("Cytosporone E", &[22690142])
        .search("Acremostrictin", &[22136576])
        .search(DIPEPTIDE, &[6684424]);
    b.article(
        14126054,
        1964,
        "Antibacterial spectrum of cephalosporin C",
        "Cephalosporin C was tested against Gram-positive cocci and enteric bacteria by agar \
         dilution and was stable to staphylococcal penicillinase.",
        &[],
    )
    .evidence(
        "Cephalosporin C",
        "tested against Gram-positive cocci",
        "Cephalosporin C inhibited Gram-positive cocci and enteric bacteria; a minimum inhibitory \
         concentration was determined for every strain.",
    );
    b.article(4078571, 1985, "Cephalosporin C against staphylococci", STRONG_TEXT, &[])
        .evidence(
            "Cephalosporin C",
            "compared with reference penicillins",
            "Cephalosporin C was as active as benzylpenicillin on several Gram-positive species and \
             outperformed methicillin on penicillinase-forming staphylococci. It also protected \
             infected mice in combination.",
        );
    b.article(
        7107525,
        1982,
        "Bioassay of isopenicillin N",
        "Isopenicillin N produced an inhibition zone against Gram-negative indicator strains that \
         penicillinase abolished.",
        &[],
    )
    .evidence(
        "Isopenicillin N",
        "produced an inhibition zone",
        "Isopenicillin N gave a measurable inhibition zone against Gram-negative indicators.",
    );
    b.article(
        22690142,
        2012,
        "Antibacterial cytosporones from an endophyte",
        "Cytosporone E inhibited Staphylococcus aureus with a minimum inhibitory concentration of \
         8 ug/mL.",
        &[],
    )
    .evidence(
        "Cytosporone E",
        "Cytosporone E inhibited Staphylococcus",
        "Cytosporone E inhibited Staphylococcus aureus with a minimum inhibitory concentration of \
         8 ug/mL.",
    );
    b.evidence(
        "Acremostrictin",
        "yielded acremostrictin",
        "Acremostrictin is described as having weak antibacterial activity, so any effect is minor.",
    );
}

pub fn builder() -> Builder {
    let mut b = Builder::new();
    populate(&mut b);
    b
}

/// Writes the scenario into `dir`.
pub fn write(dir: &Path) -> io::Result<FixtureSet> {
    let config = builder().write(dir, 2)?;
    Ok(FixtureSet {
        dir: dir.to_path_buf(),
        config,
        identifications: vec![ACCEPTED.to_string()],
        triples: None,
        aliases: None,
        expected: None,
    })
}
