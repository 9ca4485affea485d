//! Train the lexical relevance filter on a synthetic corpus with noisy
//! labels and score it on held-out true labels.
//!
//! ```text
//! cargo run --example filter_training
//! ```

use np_alarm::filtering::{
    evaluate_predictions, synthetic_separable_corpus, train, LabeledExample,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let corpus = synthetic_separable_corpus(1000, 30, 0.1, 7);
    let mut order: Vec<usize> = (0..corpus.examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(7));
    let (held, fit) = order.split_at(200);

    let training: Vec<LabeledExample> = fit.iter().map(|&i| corpus.examples[i].clone()).collect();
    let model = train(&training, 1.0)?;
    for threshold in [0.3, 0.5, 0.7, 0.9] {
        let metrics = evaluate_predictions(held.iter().map(|&i| {
            let predicted = model.classify_at(&corpus.examples[i].text, threshold).label;
            (corpus.true_labels[i], predicted)
        }));
        println!(
            "threshold {threshold:.1}: precision {:.3} recall {:.3} F1 {:.3} F2 {:.3}",
            metrics.precision, metrics.recall, metrics.f1, metrics.f2
        );
    }
    Ok(())
}
