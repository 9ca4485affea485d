//! Property tests for small invariants outside the acceptance suite.

use chrono::{Duration, TimeZone, Utc};
use np_alarm::extraction::normalize_chemical_name;
use np_alarm::filtering::{f_beta, Confusion, EvalMetrics};
use np_alarm::kg::{KnowledgeGraph, TriageStatus};
use np_alarm::literature::DocumentRef;
use np_alarm::lotus::{LotusDump, LotusRelation};
use np_alarm::taxonomy::normalize_name;
use proptest::prelude::*;

fn status() -> impl Strategy<Value = TriageStatus> {
    prop_oneof![
        Just(TriageStatus::Unreviewed),
        Just(TriageStatus::Confirmed),
        Just(TriageStatus::Dismissed),
        Just(TriageStatus::OrganismDiscarded),
    ]
}

proptest! {
    #[test]
    fn taxon_name_normalization_is_idempotent(name in "[A-Za-z .\\-]{0,40}") {
        let once = normalize_name(&name);
        prop_assert_eq!(normalize_name(&once), once.clone());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' '));
        prop_assert!(!once.contains("  "));
    }

    #[test]
    fn chemical_normalization_is_idempotent(raw in "[A-Za-z0-9 ,.;:!?'\"()\\-]{0,40}") {
        if let Ok(once) = normalize_chemical_name(&raw) {
            let twice = normalize_chemical_name(&once.display).unwrap();
            prop_assert_eq!(&twice, &once);
            prop_assert_eq!(once.key, once.display.to_lowercase());
        }
    }

    #[test]
    fn document_keys_parse_back(pmid in 1u64..99_999_999, doi in "10\\.[0-9]{4,5}/[a-z0-9.]{1,12}") {
        for r in [DocumentRef::pmid(pmid), DocumentRef::doi(&doi)] {
            let back: DocumentRef = r.key().parse().unwrap();
            prop_assert_eq!(back, r);
        }
    }

    #[test]
    fn f_scores_lie_between_precision_and_recall(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
        let c = Confusion { tp, fp, tn, fn_ };
        let m = EvalMetrics::from_confusion(c);
        let lo = m.precision.min(m.recall);
        let hi = m.precision.max(m.recall);
        for f in [m.f1, m.f2, f_beta(&c, 0.5)] {
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= lo - 1e-12 && f <= hi + 1e-12, "{} outside [{}, {}]", f, lo, hi);
        }
        if m.recall >= m.precision {
            prop_assert!(m.f2 >= m.f1 - 1e-12);
        }
    }

    #[test]
    fn triage_history_is_append_only(changes in prop::collection::vec(status(), 1..12)) {
        let mut g = KnowledgeGraph::new();
        let org = g.upsert_organism("1", "Genus species", "accepted", "species").unwrap();
        let t0 = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        for (i, s) in changes.iter().enumerate() {
            g.set_triage_at(&org, *s, "r", t0 + Duration::minutes(i as i64)).unwrap();
            prop_assert_eq!(g.triage_history(&org).len(), i + 1);
            prop_assert_eq!(g.triage_status(&org), *s);
        }
        let history = g.triage_history(&org);
        prop_assert!(history.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let back = KnowledgeGraph::import(g.export_string().as_bytes()).unwrap();
        prop_assert_eq!(back.triage_history(&org), history);
    }

    #[test]
    fn lotus_dump_round_trips(rows in prop::collection::vec(
        ("[A-Z][a-z]{2,8} [a-z]{3,9}", "[A-Z][a-z]{3,10}( [A-Z])?", 1u64..40_000_000, prop::option::of(1950i32..2025)),
        0..20,
    )) {
        let mut dump = LotusDump::default();
        for (organism, chemical, pmid, year) in &rows {
            dump.insert(LotusRelation {
                organism_name: organism.clone(),
                chemical: normalize_chemical_name(chemical).unwrap(),
                structure_id: None,
                reference: DocumentRef::pmid(*pmid),
                reference_year: *year,
            });
        }
        let mut buf = Vec::new();
        LotusDump::write_relations(&dump.all(), &mut buf).unwrap();
        let back = LotusDump::read(buf.as_slice()).unwrap();
        prop_assert_eq!(back.all(), dump.all());
    }
}
