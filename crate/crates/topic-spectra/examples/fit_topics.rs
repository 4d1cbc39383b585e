//! End-to-end estimation: generate a corpus, run the full spectral fit,
//! and compare the estimate with the generating truth.
//!
//! ```bash
//! cargo run --release --example fit_topics
//! ```

use topic_spectra::corpus::{empirical_frequencies, generate_synthetic_corpus, LengthLaw, SyntheticParams};
use topic_spectra::estimator::{estimate_weights, topic_score_fit, FitOptions};
use topic_spectra::metrics::{align_columns, weight_loss};

fn main() {
    let params = SyntheticParams {
        p: 300,
        n: 2000,
        k: 3,
        length_law: LengthLaw::Fixed(80),
        ..SyntheticParams::default()
    };
    let (corpus, truth) = generate_synthetic_corpus(&params, 7).expect("valid parameters");

    let options = FitOptions::new(3);
    let fit = topic_score_fit(&corpus, &options).expect("fit succeeds");

    println!(
        "fit: k=3, merged {} rare words, clamped {} denominators",
        fit.merge_map.merged.len(),
        fit.clamp_count
    );
    println!(
        "singular values: {:?}",
        fit.decomposition
            .sigma
            .iter()
            .map(|s| format!("{s:.2}"))
            .collect::<Vec<_>>()
    );
    println!(
        "vertex system condition number: {:.2}",
        fit.simplex.condition_number
    );

    // evaluation happens on the merged vocabulary
    let truth_merged = fit.merge_map.apply_to_model(&truth).unwrap();
    let alignment = align_columns(&fit.a_hat, truth_merged.topics()).unwrap();
    println!(
        "topic loss: total l1 = {:.4} (per topic {:?})",
        alignment.total_l1,
        alignment
            .per_topic_l1
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
    );

    // weights from the fitted topics, scored against the true mixtures
    let working = if fit.merge_map.is_identity() {
        corpus
    } else {
        topic_spectra::corpus::merge_rare_words(&corpus, options.merge_threshold_factor, 3)
            .unwrap()
            .0
    };
    let d = empirical_frequencies(&working);
    let w_hat = estimate_weights(&d, &fit.decomposition.normalizer, &fit.a_hat).unwrap();
    let loss = weight_loss(&w_hat, truth_merged.weights(), Some(&alignment.permutation)).unwrap();
    println!(
        "weight loss: max over documents {:.3}, mean {:.3}",
        loss.max_l1, loss.mean_l1
    );
}
