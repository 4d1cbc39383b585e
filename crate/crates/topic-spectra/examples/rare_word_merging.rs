//! Rare-word preprocessing: words whose normalization entry falls below a
//! fraction of the mean are collapsed into one meta-word, which keeps the
//! inverse square-root scaling well conditioned.
//!
//! ```bash
//! cargo run --release --example rare_word_merging
//! ```

use topic_spectra::corpus::{
    empirical_frequencies, generate_synthetic_corpus, merge_rare_words, normalization_diag,
    LengthLaw, SyntheticParams,
};
use topic_spectra::estimator::{topic_score_fit, FitOptions};
use topic_spectra::metrics::align_columns;
use topic_spectra::spectral::build_normalization;

fn main() {
    // short documents over a heavy-tailed vocabulary leave many words
    // unseen or nearly unseen
    let params = SyntheticParams {
        p: 400,
        n: 300,
        k: 3,
        length_law: LengthLaw::Fixed(30),
        anchor_words_per_topic: 20,
        zipf_exponent: 1.5,
        ..SyntheticParams::default()
    };
    let (corpus, truth) = generate_synthetic_corpus(&params, 99).expect("valid parameters");

    let unseen = corpus.word_totals().iter().filter(|&&t| t == 0).count();
    println!("{unseen} of {} words never occur in the sample", corpus.vocab_size());

    // without merging, the normalizer rejects the zero rows outright
    let d = empirical_frequencies(&corpus);
    match build_normalization(&d, corpus.lengths()) {
        Err(e) => println!("unmerged normalizer: {e}"),
        Ok(_) => println!("unmerged normalizer happened to be positive"),
    }

    let (merged, map) = merge_rare_words(&corpus, 0.05, 3).unwrap();
    println!(
        "merged {} rare words into one meta-word at threshold {:.2e}; vocabulary {} -> {}",
        map.merged.len(),
        map.threshold,
        corpus.vocab_size(),
        merged.vocab_size()
    );

    // the merge threshold is relative to the mean diagonal entry
    let diag = normalization_diag(&d, corpus.lengths());
    let below = diag.iter().filter(|&&v| v < map.threshold).count();
    assert_eq!(below, map.merged.len());

    // document lengths and per-document totals are untouched
    for i in 0..merged.num_docs() {
        let total: u32 = merged.doc(i).iter().map(|&(_, c)| c).sum();
        assert_eq!(total, merged.lengths()[i]);
    }

    // the full fit does this preprocessing itself; losses are then
    // measured on the merged vocabulary
    let fit = topic_score_fit(&corpus, &FitOptions::new(3)).unwrap();
    let truth_merged = fit.merge_map.apply_to_model(&truth).unwrap();
    let alignment = align_columns(&fit.a_hat, truth_merged.topics()).unwrap();
    println!(
        "fit on merged vocabulary ({} rows): l1 loss {:.3}",
        fit.a_hat.rows(),
        alignment.total_l1
    );
}
