//! Entry-wise deviation of the empirical singular frame from the rotated
//! population frame, compared against the theoretical per-word envelope
//! sqrt(h_j · p · ln(n)/(n·N)). Doubling the corpus twice shows the
//! 1/sqrt(n) shrinkage.
//!
//! ```bash
//! cargo run --release --example eigenvector_deviation
//! ```

use topic_spectra::corpus::{empirical_frequencies, generate_synthetic_corpus, LengthLaw, SyntheticParams};
use topic_spectra::metrics::{assumption_diagnostics, entrywise_deviation, median};
use topic_spectra::spectral::{build_normalization, normalized_svd, population_spectra};

fn main() {
    for n in [1000usize, 2000, 4000] {
        let params = SyntheticParams {
            p: 200,
            n,
            k: 3,
            length_law: LengthLaw::Fixed(50),
            ..SyntheticParams::default()
        };
        let (corpus, truth) = generate_synthetic_corpus(&params, 31).expect("valid parameters");

        let d = empirical_frequencies(&corpus);
        let normalizer = build_normalization(&d, corpus.lengths()).unwrap();
        let decomposition = normalized_svd(&d, &normalizer, 3).unwrap();

        let pop = population_spectra(&truth, corpus.lengths()).unwrap();
        let diagnostics = assumption_diagnostics(&truth, corpus.lengths()).unwrap();
        let report = entrywise_deviation(
            &decomposition.xi,
            &pop,
            &diagnostics,
            corpus.num_docs(),
            corpus.mean_length(),
        )
        .unwrap();

        let dev_over_sqrt_h: Vec<f64> = report
            .row_dev
            .iter()
            .zip(&diagnostics.h)
            .map(|(d, h)| d / h.sqrt())
            .collect();
        println!(
            "n={n:<5} sin_theta={:.4}  median dev/sqrt(h)={:.4}  envelope ratio median={:.3} max={:.3}",
            report.sin_theta,
            median(&dev_over_sqrt_h),
            report.ratio_median,
            report.ratio_max,
        );
    }
    println!();
    println!("each doubling of n should shrink the deviation by roughly 1/sqrt(2) = 0.707");
}
