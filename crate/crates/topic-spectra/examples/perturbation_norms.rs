//! The normalized Gram matrix against its population counterpart: the
//! spectral norm of the difference shrinks like 1/sqrt(N) as documents
//! get longer, and every projected row norm stays under its word-mass
//! envelope.
//!
//! ```bash
//! cargo run --release --example perturbation_norms
//! ```

use topic_spectra::corpus::{generate_synthetic_corpus, LengthLaw, SyntheticParams};
use topic_spectra::metrics::{assumption_diagnostics, perturbation_norms};

fn main() {
    let mut previous: Option<f64> = None;
    for doc_len in [50u32, 100, 200] {
        let params = SyntheticParams {
            p: 200,
            n: 1000,
            k: 3,
            length_law: LengthLaw::Fixed(doc_len),
            ..SyntheticParams::default()
        };
        let (corpus, truth) = generate_synthetic_corpus(&params, 5).expect("valid parameters");
        let report = perturbation_norms(&corpus, &truth).unwrap();
        let diag = assumption_diagnostics(&truth, corpus.lengths()).unwrap();

        // per-word envelope constant from the large-deviation bound shape
        let factor = 200.0 * 1000.0 * 1000f64.ln() / f64::from(doc_len);
        let envelope_const = (0..200)
            .map(|j| report.row_projected_norms[j] / (diag.h[j] * factor).sqrt())
            .fold(0.0f64, f64::max);

        let ratio = previous
            .map(|prev| format!("  (x{:.3} vs previous)", report.g_minus_g0_norm / prev))
            .unwrap_or_default();
        println!(
            "N={doc_len:<4} |G-G0| = {:.2}{ratio}   max row/envelope = {:.3}",
            report.g_minus_g0_norm, envelope_const
        );
        previous = Some(report.g_minus_g0_norm);
    }
    println!();
    println!("doubling N should shrink the norm by roughly 1/sqrt(2) = 0.707");
}
