use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{tokenize, FilterError, Label, LabeledExample};

pub const MODEL_FORMAT: &str = "np-alarm-nb";
pub const MODEL_VERSION: u32 = 1;

/// Multinomial Naive Bayes over bag-of-words counts. Index 0 of the per-class
/// arrays is Positive, index 1 Negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub class_log_priors: [f64; 2],
    pub token_log_likelihoods: [Vec<f64>; 2],
    pub smoothing_alpha: f64,
    pub threshold: f64,
    /// Seed of the train/held-out split, when the model came from one.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: Label,
    pub positive_posterior: f64,
}

fn class_index(label: Label) -> usize {
    match label {
        Label::Positive => 0,
        Label::Negative => 1,
    }
}

pub fn train(corpus: &[LabeledExample], alpha: f64) -> Result<LexicalModel, FilterError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(FilterError::InvalidAlpha(alpha));
    }
    let mut docs = [0usize; 2];
    let mut counts: [BTreeMap<String, u64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for ex in corpus {
        let c = class_index(ex.label);
        docs[c] += 1;
        for tok in tokenize(&ex.text) {
            *counts[c].entry(tok).or_default() += 1;
        }
    }
    if docs[0] == 0 || docs[1] == 0 {
        return Err(FilterError::SingleClassCorpus {
            positives: docs[0],
            negatives: docs[1],
        });
    }
    let mut vocabulary = BTreeMap::new();
    for tok in counts[0].keys().chain(counts[1].keys()) {
        vocabulary.entry(tok.clone()).or_insert(0);
    }
    for (i, idx) in vocabulary.values_mut().enumerate() {
        *idx = i;
    }
    let v = vocabulary.len() as f64;
    let total = (docs[0] + docs[1]) as f64;
    let class_log_priors = [
        (docs[0] as f64 / total).ln(),
        (docs[1] as f64 / total).ln(),
    ];
    let token_log_likelihoods = [0, 1].map(|c| {
        let class_total: u64 = counts[c].values().sum();
        let denom = (class_total as f64 + alpha * v).ln();
        vocabulary
            .keys()
            .map(|tok| {
                let n = counts[c].get(tok).copied().unwrap_or(0) as f64;
                (n + alpha).ln() - denom
            })
            .collect::<Vec<f64>>()
    });
    Ok(LexicalModel {
        vocabulary,
        class_log_priors,
        token_log_likelihoods,
        smoothing_alpha: alpha,
        threshold: 0.5,
        seed: None,
    })
}

/// `1 / (1 + e^-d)` without overflow.
fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

impl LexicalModel {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Log joint scores per class; unseen tokens are ignored.
    pub fn log_scores(&self, text: &str) -> [f64; 2] {
        let mut scores = self.class_log_priors;
        for tok in tokenize(text) {
            if let Some(&i) = self.vocabulary.get(&tok) {
                scores[0] += self.token_log_likelihoods[0][i];
                scores[1] += self.token_log_likelihoods[1][i];
            }
        }
        scores
    }

    pub fn positive_posterior(&self, text: &str) -> f64 {
        let [pos, neg] = self.log_scores(text);
        logistic(pos - neg)
    }

    pub fn classify(&self, text: &str) -> Classification {
        self.classify_at(text, self.threshold)
    }

    pub fn classify_at(&self, text: &str, threshold: f64) -> Classification {
        let p = self.positive_posterior(text);
        Classification {
            label: if p >= threshold {
                Label::Positive
            } else {
                Label::Negative
            },
            positive_posterior: p,
        }
    }

    /// Key-value text artifact: one `key<TAB>value...` record per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "format\t{MODEL_FORMAT}");
        let _ = writeln!(s, "version\t{MODEL_VERSION}");
        let _ = writeln!(s, "alpha\t{}", self.smoothing_alpha);
        let _ = writeln!(s, "threshold\t{}", self.threshold);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "seed\t{seed}");
            }
            None => s.push_str("seed\t-\n"),
        }
        let _ = writeln!(s, "prior\tpositive\t{}", self.class_log_priors[0]);
        let _ = writeln!(s, "prior\tnegative\t{}", self.class_log_priors[1]);
        let _ = writeln!(s, "vocabulary\t{}", self.vocabulary.len());
        for (tok, &i) in &self.vocabulary {
            let _ = writeln!(
                s,
                "token\t{tok}\t{}\t{}",
                self.token_log_likelihoods[0][i], self.token_log_likelihoods[1][i]
            );
        }
        out.write_all(s.as_bytes())
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, FilterError> {
        let bad = |line: usize, msg: &str| FilterError::MalformedModel {
            line,
            reason: msg.to_string(),
        };
        let mut format_ok = false;
        let mut alpha = None;
        let mut threshold = None;
        let mut seed = None;
        let mut priors = [None, None];
        let mut declared = None;
        let mut vocabulary = BTreeMap::new();
        let mut ll: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (n, line) in input.lines().enumerate() {
            let n = n + 1;
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "not a number"));
            match f.as_slice() {
                ["format", v] => {
                    if *v != MODEL_FORMAT {
                        return Err(bad(n, "unknown format"));
                    }
                    format_ok = true;
                }
                ["version", v] => {
                    if v.parse::<u32>().ok() != Some(MODEL_VERSION) {
                        return Err(FilterError::UnsupportedModelVersion(v.to_string()));
                    }
                }
                ["alpha", v] => alpha = Some(num(v)?),
                ["threshold", v] => threshold = Some(num(v)?),
                ["seed", "-"] => seed = None,
                ["seed", v] => seed = Some(v.parse::<u64>().map_err(|_| bad(n, "bad seed"))?),
                ["prior", "positive", v] => priors[0] = Some(num(v)?),
                ["prior", "negative", v] => priors[1] = Some(num(v)?),
                ["vocabulary", v] => {
                    declared = Some(v.parse::<usize>().map_err(|_| bad(n, "bad size"))?)
                }
                ["token", tok, pos, neg] => {
                    let idx = vocabulary.len();
                    if vocabulary.insert(tok.to_string(), idx).is_some() {
                        return Err(bad(n, "duplicate token"));
                    }
                    ll[0].push(num(pos)?);
                    ll[1].push(num(neg)?);
                }
                _ => return Err(bad(n, "unrecognized record")),
            }
        }
        if !format_ok {
            return Err(bad(0, "missing format line"));
        }
        if declared.is_some_and(|d| d != vocabulary.len()) {
            return Err(bad(0, "vocabulary size mismatch"));
        }
        // Token lines are written in sorted order; re-index in case they were not.
        let order: Vec<usize> = vocabulary.values().copied().collect();
        let ll = [0, 1].map(|c| order.iter().map(|&i| ll[c][i]).collect::<Vec<_>>());
        for (i, idx) in vocabulary.values_mut().enumerate() {
            *idx = i;
        }
        Ok(Self {
            vocabulary,
            class_log_priors: [
                priors[0].ok_or_else(|| bad(0, "missing positive prior"))?,
                priors[1].ok_or_else(|| bad(0, "missing negative prior"))?,
            ],
            token_log_likelihoods: ll,
            smoothing_alpha: alpha.ok_or_else(|| bad(0, "missing alpha"))?,
            threshold: threshold.ok_or_else(|| bad(0, "missing threshold"))?,
            seed,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, FilterError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtering::Origin;

    fn ex(text: &str, label: Label) -> LabeledExample {
        LabeledExample::new(text, label, Origin::Manual).unwrap()
    }

    fn separable() -> Vec<LabeledExample> {
        vec![ex("aaa bbb", Label::Positive), ex("ccc ddd", Label::Negative)]
    }

    #[test]
    fn separable_pair_hand_computed_posteriors() {
        // Laplace: P(aaa|+) = 2/6, P(aaa|-) = 1/6, so the odds of "aaa bbb"
        // are 2 * 2 = 4 and the posterior is 4/5.
        let m = train(&separable(), 1.0).unwrap();
        assert!((m.positive_posterior("aaa bbb") - 0.8).abs() < 1e-12);
        assert!((m.positive_posterior("ccc ddd") - 0.2).abs() < 1e-12);
        // alpha = 0.01: per-token odds 101, posterior 101^2 / (1 + 101^2).
        let m = train(&separable(), 0.01).unwrap();
        let expected = 10201.0 / 10202.0;
        assert!((m.positive_posterior("aaa bbb") - expected).abs() < 1e-12);
        assert!(m.positive_posterior("aaa bbb") > 0.99);
        assert_eq!(m.classify("ccc ddd").label, Label::Negative);
    }

    #[test]
    fn priors_and_likelihoods_normalize() {
        let m = train(&separable(), 1.0).unwrap();
        assert_eq!(m.class_log_priors[0], m.class_log_priors[1]);
        let s: f64 = m.class_log_priors.iter().map(|p| p.exp()).sum();
        assert!((s - 1.0).abs() < 1e-9);
        for c in 0..2 {
            let s: f64 = m.token_log_likelihoods[c].iter().map(|p| p.exp()).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            train(&separable(), 0.0),
            Err(FilterError::InvalidAlpha(_))
        ));
        assert!(matches!(
            train(&[ex("aa", Label::Positive)], 1.0),
            Err(FilterError::SingleClassCorpus { .. })
        ));
    }

    #[test]
    fn empty_and_unseen_text_use_priors() {
        let corpus = vec![
            ex("aaa", Label::Positive),
            ex("aaa", Label::Positive),
            ex("aaa", Label::Positive),
            ex("bbb", Label::Negative),
        ];
        let m = train(&corpus, 1.0).unwrap();
        assert!((m.positive_posterior("") - 0.75).abs() < 1e-12);
        assert!((m.positive_posterior("zzz qqq") - 0.75).abs() < 1e-12);
    }

    #[test]
    fn duplicating_corpus_equals_halving_alpha() {
        let base = vec![
            ex("aaa bbb aaa", Label::Positive),
            ex("ccc bbb", Label::Negative),
            ex("ddd", Label::Negative),
        ];
        let doubled: Vec<_> = base.iter().chain(base.iter()).cloned().collect();
        let a = train(&doubled, 1.0).unwrap();
        let b = train(&base, 0.5).unwrap();
        for text in ["aaa", "bbb ccc", "ddd aaa", ""] {
            assert!((a.positive_posterior(text) - b.positive_posterior(text)).abs() < 1e-12);
        }
    }

    #[test]
    fn artifact_round_trip_is_exact() {
        let mut m = train(&separable(), 0.37).unwrap().with_threshold(0.3);
        m.seed = Some(42);
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = LexicalModel::read_from(&buf[..]).unwrap();
        assert_eq!(back, m);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("format\tnp-alarm-nb\nversion\t1\n"));
        let bumped = text.replace("version\t1", "version\t9");
        assert!(matches!(
            LexicalModel::read_from(bumped.as_bytes()),
            Err(FilterError::UnsupportedModelVersion(_))
        ));
    }
}
