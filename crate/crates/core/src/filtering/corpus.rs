use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracing::warn;

use super::{FilterError, Label, LabeledExample, Origin};
use crate::extraction::{ExtractionError, Extractor};
use crate::literature::Document;

/// MeSH "Anti-Bacterial Agents".
pub const ANTIBACTERIAL_DESCRIPTOR: &str = "D000900";

/// Descriptor id → tree numbers.
#[derive(Debug, Clone, Default)]
pub struct MeshTree {
    tree_numbers: BTreeMap<String, Vec<String>>,
    names: BTreeMap<String, String>,
}

impl MeshTree {
    /// Reads `descriptor<TAB>tree;numbers[<TAB>name]` lines; `#` starts a comment.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self, FilterError> {
        let mut tree = Self::default();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 2 || f[0].trim().is_empty() {
                return Err(FilterError::MalformedMeshTree { line: n + 1 });
            }
            let numbers = f[1]
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            tree.insert(f[0].trim(), numbers, f.get(2).map(|s| s.trim()));
        }
        Ok(tree)
    }

    pub fn insert(&mut self, descriptor: &str, numbers: Vec<String>, name: Option<&str>) {
        self.tree_numbers.insert(descriptor.to_string(), numbers);
        if let Some(name) = name {
            self.names.insert(descriptor.to_string(), name.to_string());
        }
    }

    pub fn contains(&self, descriptor: &str) -> bool {
        self.tree_numbers.contains_key(descriptor)
    }

    pub fn name(&self, descriptor: &str) -> Option<&str> {
        self.names.get(descriptor).map(String::as_str)
    }

    /// True when `descriptor` is `ancestor` or sits below it in any branch.
    pub fn is_descendant_or_self(&self, descriptor: &str, ancestor: &str) -> bool {
        if descriptor == ancestor {
            return true;
        }
        let (Some(mine), Some(theirs)) = (
            self.tree_numbers.get(descriptor),
            self.tree_numbers.get(ancestor),
        ) else {
            return false;
        };
        mine.iter().any(|m| {
            theirs
                .iter()
                .any(|t| m.len() > t.len() && m.starts_with(t.as_str()) && m[t.len()..].starts_with('.'))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resample {
    pub per_class: usize,
    pub seed: u64,
}

/// Labels documents by MeSH indexing: Positive when any descriptor is the
/// target or below it. Documents without text are skipped.
pub fn build_mesh_activity_corpus(
    documents: &[Document],
    tree: &MeshTree,
    target: &str,
    resample: Option<Resample>,
) -> Result<Vec<LabeledExample>, FilterError> {
    if !tree.contains(target) {
        return Err(FilterError::DescriptorNotFound(target.to_string()));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for doc in documents {
        let positive = doc
            .mesh_terms
            .iter()
            .any(|d| tree.is_descendant_or_self(d, target));
        let label = if positive { Label::Positive } else { Label::Negative };
        match LabeledExample::new(doc.title_abstract(), label, Origin::MeshDerived) {
            Ok(ex) if positive => pos.push(ex),
            Ok(ex) => neg.push(ex),
            Err(_) => continue,
        }
    }
    let Some(Resample { per_class, seed }) = resample else {
        pos.extend(neg);
        return Ok(pos);
    };
    for (label, pool) in [(Label::Positive, &pos), (Label::Negative, &neg)] {
        if pool.len() < per_class {
            return Err(FilterError::InsufficientExamples {
                label,
                requested: per_class,
                available: pool.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    pos.truncate(per_class);
    neg.truncate(per_class);
    pos.extend(neg);
    Ok(pos)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoLabelOutcome {
    pub examples: Vec<LabeledExample>,
    /// Documents whose answer was neither yes nor no, or unusable.
    pub skipped: usize,
}

/// Asks the backend whether each abstract reports an isolation relation.
/// Pass LOTUS-linked abstracts and the negative pool together.
pub fn build_pseudo_label_corpus(
    documents: &[Document],
    extractor: &Extractor,
) -> Result<PseudoLabelOutcome, FilterError> {
    let mut out = PseudoLabelOutcome::default();
    for doc in documents {
        let Some(abstract_text) = doc.abstract_text.as_deref() else {
            out.skipped += 1;
            continue;
        };
        match extractor.pseudo_label(&doc.title, abstract_text) {
            Ok(Some(yes)) => {
                let label = if yes { Label::Positive } else { Label::Negative };
                match LabeledExample::new(doc.title_abstract(), label, Origin::PseudoLabel) {
                    Ok(ex) => out.examples.push(ex),
                    Err(_) => out.skipped += 1,
                }
            }
            Ok(None) | Err(ExtractionError::OutputUnparseable { .. }) => {
                warn!(doc = %doc.doc_ref, "pseudo-label answer unusable, skipping");
                out.skipped += 1;
            }
            Err(ExtractionError::BackendUnavailable(e)) => {
                return Err(FilterError::BackendUnavailable(e.to_string()))
            }
            Err(e) => {
                warn!(doc = %doc.doc_ref, error = %e, "pseudo-label failed, skipping");
                out.skipped += 1;
            }
        }
    }
    Ok(out)
}

/// Stratified split: `heldout_fraction` of each class (rounded) is held out.
pub fn stratified_split(
    corpus: &[LabeledExample],
    heldout_fraction: f64,
    seed: u64,
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut heldout = Vec::new();
    for label in [Label::Positive, Label::Negative] {
        let mut class: Vec<LabeledExample> =
            corpus.iter().filter(|e| e.label == label).cloned().collect();
        class.shuffle(&mut rng);
        let k = (class.len() as f64 * heldout_fraction).round() as usize;
        let rest = class.split_off(k.min(class.len()));
        heldout.extend(class);
        train.extend(rest);
    }
    (train, heldout)
}

/// A synthetic two-class corpus with a planted keyword per class.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub examples: Vec<LabeledExample>,
    /// Labels before noise was applied, aligned with `examples`.
    pub true_labels: Vec<Label>,
}

/// `n` documents, half per class. Each holds `doc_len` background words drawn
/// from a shared vocabulary plus one to three copies of its class keyword.
/// Exactly `round(noise * n)` observed labels are flipped.
pub fn synthetic_separable_corpus(n: usize, doc_len: usize, noise: f64, seed: u64) -> SyntheticCorpus {
    const BACKGROUND: usize = 300;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(n);
    let mut true_labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        let keyword = match label {
            Label::Positive => "plantedpositive",
            Label::Negative => "plantednegative",
        };
        let mut words: Vec<String> = (0..doc_len)
            .map(|_| format!("w{:03}", rng.gen_range(0..BACKGROUND)))
            .collect();
        for _ in 0..rng.gen_range(1..=3) {
            let at = rng.gen_range(0..=words.len());
            words.insert(at, keyword.to_string());
        }
        examples.push(
            LabeledExample::new(words.join(" "), label, Origin::Manual).expect("non-empty"),
        );
        true_labels.push(label);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let flips = (noise * n as f64).round() as usize;
    for &i in order.iter().take(flips) {
        examples[i].label = examples[i].label.flipped();
    }
    SyntheticCorpus {
        examples,
        true_labels,
    }
}

/// Corpus file: `label<TAB>origin<TAB>text`, text on one line.
pub fn write_corpus<W: Write>(corpus: &[LabeledExample], mut out: W) -> std::io::Result<()> {
    for ex in corpus {
        let text = ex.text.split_whitespace().collect::<Vec<_>>().join(" ");
        writeln!(out, "{}\t{}\t{}", ex.label.as_str(), ex.origin.as_str(), text)?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<LabeledExample>, FilterError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || FilterError::MalformedCorpus { line: n + 1 };
        let mut f = line.splitn(3, '\t');
        let label = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let origin = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let text = f.next().ok_or_else(bad)?;
        out.push(LabeledExample::new(text, label, origin).map_err(|_| bad())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::literature::DocumentRef;

    fn tree() -> MeshTree {
        let tsv = "D000900\tD27.505.954.122.085\tAnti-Bacterial Agents\nD002511\tD27.505.954.122.085.100;D02.065\tCephalosporins\nD008827\tB04\tMicrobiology\n";
        MeshTree::read_from(tsv.as_bytes()).unwrap()
    }

    fn doc(pmid: u64, mesh: &[&str]) -> Document {
        Document {
            doc_ref: DocumentRef::pmid(pmid),
            title: format!("title {pmid}"),
            abstract_text: Some("abstract body".into()),
            paragraphs: vec![],
            pub_year: None,
            language: None,
            mesh_terms: mesh.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn descendant_test_uses_tree_prefix() {
        let t = tree();
        assert!(t.is_descendant_or_self("D002511", "D000900"));
        assert!(t.is_descendant_or_self("D000900", "D000900"));
        assert!(!t.is_descendant_or_self("D008827", "D000900"));
        assert!(!t.is_descendant_or_self("D000900", "D002511"));
    }

    #[test]
    fn mesh_corpus_labels_and_resampling() {
        let docs = vec![doc(1, &["D002511"]), doc(2, &[]), doc(3, &["D008827"])];
        let corpus = build_mesh_activity_corpus(&docs, &tree(), "D000900", None).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus[0].label, Label::Positive);
        assert_eq!(corpus.iter().filter(|e| e.label == Label::Negative).count(), 2);
        let err = build_mesh_activity_corpus(
            &docs,
            &tree(),
            "D000900",
            Some(Resample {
                per_class: 2,
                seed: 1,
            }),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            FilterError::InsufficientExamples {
                label: Label::Positive,
                requested: 2,
                available: 1
            }
        ));
        assert!(matches!(
            build_mesh_activity_corpus(&docs, &tree(), "D999999", None),
            Err(FilterError::DescriptorNotFound(_))
        ));
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let c = synthetic_separable_corpus(100, 5, 0.0, 3).examples;
        let (tr, ho) = stratified_split(&c, 0.2, 9);
        assert_eq!(ho.len(), 20);
        assert_eq!(tr.len(), 80);
        assert_eq!(ho.iter().filter(|e| e.label == Label::Positive).count(), 10);
        let (tr2, _) = stratified_split(&c, 0.2, 9);
        assert_eq!(tr, tr2);
    }

    #[test]
    fn synthetic_noise_flips_exact_count() {
        let s = synthetic_separable_corpus(1000, 10, 0.1, 7);
        let flipped = s
            .examples
            .iter()
            .zip(&s.true_labels)
            .filter(|(e, t)| e.label != **t)
            .count();
        assert_eq!(flipped, 100);
    }

    #[test]
    fn corpus_file_round_trip() {
        let c = vec![LabeledExample::new("a\tb\nc", Label::Positive, Origin::PseudoLabel).unwrap()];
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        let back = read_corpus(&buf[..]).unwrap();
        assert_eq!(back[0].text, "a b c");
        assert_eq!(back[0].origin, Origin::PseudoLabel);
    }
}
