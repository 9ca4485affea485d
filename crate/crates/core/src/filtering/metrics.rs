use serde::{Deserialize, Serialize};

use super::{Label, LabeledExample, LexicalModel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Positive, Label::Positive) => self.tp += 1,
            (Label::Negative, Label::Positive) => self.fp += 1,
            (Label::Negative, Label::Negative) => self.tn += 1,
            (Label::Positive, Label::Negative) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(1 + b^2) tp / ((1 + b^2) tp + b^2 fn + fp)`, 0 when undefined.
pub fn f_beta(c: &Confusion, beta: f64) -> f64 {
    let b2 = beta * beta;
    let num = (1.0 + b2) * c.tp as f64;
    let den = num + b2 * c.fn_ as f64 + c.fp as f64;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub f2: f64,
    pub confusion: Confusion,
}

impl EvalMetrics {
    pub fn from_confusion(confusion: Confusion) -> Self {
        Self {
            recall: ratio(confusion.tp, confusion.tp + confusion.fn_),
            precision: ratio(confusion.tp, confusion.tp + confusion.fp),
            f1: f_beta(&confusion, 1.0),
            f2: f_beta(&confusion, 2.0),
            confusion,
        }
    }
}

/// Scores `model` at its own threshold against `heldout`.
pub fn evaluate(model: &LexicalModel, heldout: &[LabeledExample]) -> EvalMetrics {
    let mut confusion = Confusion::default();
    for ex in heldout {
        confusion.record(ex.label, model.classify(&ex.text).label);
    }
    EvalMetrics::from_confusion(confusion)
}

/// Same as [`evaluate`] for arbitrary (truth, prediction) pairs.
pub fn evaluate_predictions<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> EvalMetrics {
    let mut confusion = Confusion::default();
    for (t, p) in pairs {
        confusion.record(t, p);
    }
    EvalMetrics::from_confusion(confusion)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_all_positive() {
        let m = evaluate_predictions([
            (Label::Positive, Label::Positive),
            (Label::Negative, Label::Negative),
        ]);
        assert_eq!((m.recall, m.precision, m.f1, m.f2), (1.0, 1.0, 1.0, 1.0));
        let m = evaluate_predictions([
            (Label::Positive, Label::Positive),
            (Label::Negative, Label::Positive),
        ]);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.precision, 0.5);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_scores_are_zero() {
        let m = evaluate_predictions([(Label::Negative, Label::Negative)]);
        assert_eq!((m.recall, m.precision, m.f1, m.f2), (0.0, 0.0, 0.0, 0.0));
    }
}
