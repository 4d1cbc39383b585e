//! Corpora, topic models, synthetic generation, and rare-word merging.
//!
//! A corpus is a sparse word-by-document count matrix with per-document
//! lengths. A topic model is a pair of column-stochastic matrices: topics
//! over words (p×K) and topic weights over documents (K×n). The generator
//! draws each document as a multinomial of its length over the mixed topic
//! distribution, so identical parameters and seed reproduce the corpus
//! exactly.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::{sample_multinomial, SplitMix64};

/// Tolerance used when validating that columns lie on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Sparse word-document count matrix with document lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Per document: sorted `(word, count)` pairs with `count > 0`.
    counts: Vec<Vec<(u32, u32)>>,
    lengths: Vec<u32>,
    vocab_size: usize,
}

impl Corpus {
    /// Builds a corpus and checks its invariants: positive dimensions,
    /// in-range word indices, positive lengths, and column sums equal to
    /// the declared lengths.
    pub fn new(vocab_size: usize, counts: Vec<Vec<(u32, u32)>>, lengths: Vec<u32>) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::InvalidParameter {
                name: "vocab_size",
                reason: "must be at least 1".into(),
            });
        }
        if counts.is_empty() || counts.len() != lengths.len() {
            return Err(Error::InvalidParameter {
                name: "counts",
                reason: format!(
                    "need one non-empty column per document ({} columns, {} lengths)",
                    counts.len(),
                    lengths.len()
                ),
            });
        }
        for (i, (col, &len)) in counts.iter().zip(&lengths).enumerate() {
            if len == 0 {
                return Err(Error::InvalidParameter {
                    name: "lengths",
                    reason: format!("document {i} has length 0"),
                });
            }
            let mut sum = 0u64;
            let mut prev: Option<u32> = None;
            for &(w, c) in col {
                if (w as usize) >= vocab_size {
                    return Err(Error::InvalidParameter {
                        name: "counts",
                        reason: format!("document {i} references word {w} >= vocab {vocab_size}"),
                    });
                }
                if let Some(p) = prev {
                    if w <= p {
                        return Err(Error::InvalidParameter {
                            name: "counts",
                            reason: format!("document {i} has unsorted or duplicate word {w}"),
                        });
                    }
                }
                prev = Some(w);
                sum += u64::from(c);
            }
            if sum != u64::from(len) {
                return Err(Error::LengthMismatch {
                    doc: i,
                    declared: u64::from(len),
                    actual: sum,
                });
            }
        }
        Ok(Self {
            counts,
            lengths,
            vocab_size,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn doc(&self, i: usize) -> &[(u32, u32)] {
        &self.counts[i]
    }

    pub fn mean_length(&self) -> f64 {
        self.lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / self.lengths.len() as f64
    }

    /// (min, mean, max) of document lengths.
    pub fn length_summary(&self) -> (u32, f64, u32) {
        let min = *self.lengths.iter().min().unwrap();
        let max = *self.lengths.iter().max().unwrap();
        (min, self.mean_length(), max)
    }

    /// Total word occurrences per word, summed over documents.
    pub fn word_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.vocab_size];
        for col in &self.counts {
            for &(w, c) in col {
                totals[w as usize] += u64::from(c);
            }
        }
        totals
    }
}

/// Column-stochastic topic matrix (p×K) and weight matrix (K×n).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    a: Mat,
    w: Mat,
}

impl TopicModel {
    pub fn new(a: Mat, w: Mat) -> Result<Self> {
        if a.cols() != w.rows() {
            return Err(Error::ShapeMismatch {
                what: "topic model",
                expected_rows: a.cols(),
                expected_cols: w.cols(),
                rows: w.rows(),
                cols: w.cols(),
            });
        }
        check_column_stochastic(&a, "A")?;
        check_column_stochastic(&w, "W")?;
        Ok(Self { a, w })
    }

    pub fn topics(&self) -> &Mat {
        &self.a
    }

    pub fn weights(&self) -> &Mat {
        &self.w
    }

    pub fn vocab_size(&self) -> usize {
        self.a.rows()
    }

    pub fn num_topics(&self) -> usize {
        self.a.cols()
    }

    pub fn num_docs(&self) -> usize {
        self.w.cols()
    }

    /// Expected word-frequency column for document `i`: the topic mixture
    /// applied to the topic vectors.
    pub fn expected_column(&self, i: usize) -> Vec<f64> {
        let p = self.a.rows();
        let k = self.a.cols();
        let mut out = vec![0.0; p];
        for t in 0..k {
            let wt = self.w[(t, i)];
            if wt == 0.0 {
                continue;
            }
            for j in 0..p {
                out[j] += wt * self.a[(j, t)];
            }
        }
        out
    }

    /// The noiseless frequency matrix (expected value of the empirical
    /// frequencies), stored densely.
    pub fn expected_frequencies(&self) -> FrequencyMatrix {
        let n = self.num_docs();
        let cols = (0..n)
            .map(|i| {
                self.expected_column(i)
                    .into_iter()
                    .enumerate()
                    .map(|(j, v)| (j as u32, v))
                    .collect()
            })
            .collect();
        FrequencyMatrix {
            vocab_size: self.vocab_size(),
            cols,
        }
    }
}

fn check_column_stochastic(m: &Mat, name: &'static str) -> Result<()> {
    for j in 0..m.cols() {
        let mut sum = 0.0;
        for i in 0..m.rows() {
            let v = m[(i, j)];
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "model",
                    reason: format!("{name} column {j} has entry {v} at row {i}"),
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter {
                name: "model",
                reason: format!("{name} column {j} sums to {sum}, not 1"),
            });
        }
    }
    Ok(())
}

/// Document-length law for the generator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum LengthLaw {
    Fixed(u32),
    Uniform(u32, u32),
}

impl LengthLaw {
    pub fn sample(&self, rng: &mut SplitMix64) -> u32 {
        match *self {
            LengthLaw::Fixed(n) => n,
            LengthLaw::Uniform(lo, hi) => rng.uniform_u32(lo, hi),
        }
    }

    /// The nominal document-length order used in rate formulas.
    pub fn nominal(&self) -> f64 {
        match *self {
            LengthLaw::Fixed(n) => f64::from(n),
            LengthLaw::Uniform(lo, hi) => (f64::from(lo) + f64::from(hi)) / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LengthLaw::Fixed(n) => n >= 1,
            LengthLaw::Uniform(lo, hi) => lo >= 1 && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "length_law",
                reason: format!("{self:?} does not describe positive lengths"),
            })
        }
    }
}

/// Parameters of the synthetic topic-model generator.
///
/// The topic matrix is deterministic given these parameters: every topic
/// owns `anchor_words_per_topic` exclusive rows spread evenly over the
/// vocabulary, all remaining rows are shared across topics, and row
/// magnitudes follow `t^(-zipf_exponent)` with `t` spaced linearly on
/// [1, 20] (so the word-frequency spread `h_max/h_min` is `20^z`). Weights
/// mix exactly pure documents with symmetric Dirichlet draws.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticParams {
    pub p: usize,
    pub n: usize,
    pub k: usize,
    pub length_law: LengthLaw,
    pub anchor_words_per_topic: usize,
    pub zipf_exponent: f64,
    pub pure_doc_fraction: f64,
    pub dirichlet_alpha: f64,
}

/// Dynamic range of the word-frequency profile at `zipf_exponent = 1`.
const ZIPF_RANGE: f64 = 20.0;

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            p: 300,
            n: 2000,
            k: 3,
            length_law: LengthLaw::Fixed(100),
            anchor_words_per_topic: 20,
            zipf_exponent: 1.0,
            pure_doc_fraction: 0.2,
            dirichlet_alpha: 0.3,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        fn reject(name: &'static str, reason: String) -> Result<()> {
            Err(Error::InvalidParameter { name, reason })
        }
        if self.p == 0 || self.n == 0 || self.k == 0 {
            return reject("dimensions", format!("p={}, n={}, k={} must all be positive", self.p, self.n, self.k));
        }
        if self.k > self.p {
            return reject("k", format!("k={} exceeds vocabulary size p={}", self.k, self.p));
        }
        if self.anchor_words_per_topic == 0 {
            return reject("anchor_words_per_topic", "must be positive".into());
        }
        if self.k * self.anchor_words_per_topic > self.p {
            return reject(
                "anchor_words_per_topic",
                format!(
                    "k * anchors = {} exceeds vocabulary size p={}",
                    self.k * self.anchor_words_per_topic,
                    self.p
                ),
            );
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return reject("zipf_exponent", format!("{} must be finite and >= 0", self.zipf_exponent));
        }
        if !(0.0..=1.0).contains(&self.pure_doc_fraction) {
            return reject("pure_doc_fraction", format!("{} must lie in [0, 1]", self.pure_doc_fraction));
        }
        if !self.dirichlet_alpha.is_finite() || self.dirichlet_alpha <= 0.0 {
            return reject("dirichlet_alpha", format!("{} must be finite and > 0", self.dirichlet_alpha));
        }
        self.length_law.validate()
    }

    /// The deterministic topic matrix described by these parameters.
    pub fn topic_matrix(&self) -> Mat {
        let (p, k) = (self.p, self.k);
        let ka = k * self.anchor_words_per_topic;
        // anchor slot t sits at row floor(t*p/ka) and belongs to topic t mod k;
        // even spacing keeps per-topic anchor mass independent of the Zipf
        // exponent
        let mut anchor_topic: Vec<Option<usize>> = vec![None; p];
        for t in 0..ka {
            let row = t * p / ka;
            anchor_topic[row] = Some(t % k);
        }
        let mut a = Mat::zeros(p, k);
        for j in 0..p {
            let t = if p == 1 {
                1.0
            } else {
                1.0 + (ZIPF_RANGE - 1.0) * j as f64 / (p - 1) as f64
            };
            let magnitude = t.powf(-self.zipf_exponent);
            match anchor_topic[j] {
                Some(topic) => a[(j, topic)] = magnitude * k as f64,
                None => {
                    for topic in 0..k {
                        a[(j, topic)] = magnitude;
                    }
                }
            }
        }
        for topic in 0..k {
            let sum: f64 = (0..p).map(|j| a[(j, topic)]).sum();
            for j in 0..p {
                a[(j, topic)] /= sum;
            }
        }
        a
    }
}

/// Draws a corpus and its generating model. Pure function of
/// `(params, seed)`.
pub fn generate_synthetic_corpus(
    params: &SyntheticParams,
    seed: u64,
) -> Result<(Corpus, TopicModel)> {
    params.validate()?;
    let mut rng = SplitMix64::new(seed);
    let (p, n, k) = (params.p, params.n, params.k);

    let a = params.topic_matrix();

    let n_pure = ((params.pure_doc_fraction * n as f64).round() as usize).min(n);
    let mut w = Mat::zeros(k, n);
    let mut lengths = vec![0u32; n];
    let mut counts: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n);
    let mut weight_buf = vec![0.0; k];
    let mut dense_counts = vec![0u32; p];

    for i in 0..n {
        lengths[i] = params.length_law.sample(&mut rng);
        if i < n_pure {
            weight_buf.iter_mut().for_each(|v| *v = 0.0);
            weight_buf[i % k] = 1.0;
        } else {
            rng.fill_dirichlet(params.dirichlet_alpha, &mut weight_buf);
        }
        for t in 0..k {
            w[(t, i)] = weight_buf[t];
        }
        // expected word distribution for this document
        let mut probs = vec![0.0; p];
        for t in 0..k {
            let wt = weight_buf[t];
            if wt == 0.0 {
                continue;
            }
            for j in 0..p {
                probs[j] += wt * a[(j, t)];
            }
        }
        sample_multinomial(&mut rng, lengths[i], &probs, &mut dense_counts);
        let col: Vec<(u32, u32)> = dense_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j as u32, c))
            .collect();
        counts.push(col);
    }

    let corpus = Corpus::new(p, counts, lengths)?;
    let model = TopicModel::new(a, w)?;
    Ok((corpus, model))
}

/// Column-stochastic frequency matrix, stored column-sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMatrix {
    vocab_size: usize,
    cols: Vec<Vec<(u32, f64)>>,
}

impl FrequencyMatrix {
    pub fn from_columns(vocab_size: usize, cols: Vec<Vec<(u32, f64)>>) -> Self {
        Self { vocab_size, cols }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, i: usize) -> &[(u32, f64)] {
        &self.cols[i]
    }

    pub fn col_dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.vocab_size];
        for &(j, v) in &self.cols[i] {
            out[j as usize] = v;
        }
        out
    }

    /// New matrix with row `j` multiplied by `scale[j]`.
    pub fn scale_rows(&self, scale: &[f64]) -> FrequencyMatrix {
        assert_eq!(scale.len(), self.vocab_size);
        let cols = self
            .cols
            .iter()
            .map(|col| col.iter().map(|&(j, v)| (j, v * scale[j as usize])).collect())
            .collect();
        FrequencyMatrix {
            vocab_size: self.vocab_size,
            cols,
        }
    }

    /// Permutes documents: column `i` of the result is column `perm[i]`.
    pub fn permute_docs(&self, perm: &[usize]) -> FrequencyMatrix {
        assert_eq!(perm.len(), self.cols.len());
        FrequencyMatrix {
            vocab_size: self.vocab_size,
            cols: perm.iter().map(|&i| self.cols[i].clone()).collect(),
        }
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.vocab_size, self.cols.len());
        for (i, col) in self.cols.iter().enumerate() {
            for &(j, v) in col {
                m[(j as usize, i)] = v;
            }
        }
        m
    }
}

/// Empirical word frequencies: each count divided by its document length.
/// The sparsity pattern matches the counts exactly.
pub fn empirical_frequencies(corpus: &Corpus) -> FrequencyMatrix {
    let cols = (0..corpus.num_docs())
        .map(|i| {
            let len = f64::from(corpus.lengths()[i]);
            corpus
                .doc(i)
                .iter()
                .map(|&(j, c)| (j, f64::from(c) / len))
                .collect()
        })
        .collect();
    FrequencyMatrix {
        vocab_size: corpus.vocab_size(),
        cols,
    }
}

/// The diagonal of the length-aware normalization: entry `j` is
/// `Σ_i (N̄ / (n·N_i)) · d_i(j)` with `N̄` the mean document length.
/// Shared by the normalizer builder and the rare-word scan.
pub fn normalization_diag(d: &FrequencyMatrix, lengths: &[u32]) -> Vec<f64> {
    assert_eq!(d.num_docs(), lengths.len());
    let n = lengths.len() as f64;
    let mean_len = lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / n;
    let mut diag = vec![0.0; d.vocab_size()];
    for (i, &len) in lengths.iter().enumerate() {
        let weight = mean_len / (n * f64::from(len));
        for &(j, v) in d.col(i) {
            diag[j as usize] += weight * v;
        }
    }
    diag
}

/// Provenance of a rare-word merge: which original rows were kept and
/// which were collapsed into a trailing meta-word row.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MergeMap {
    pub kept: Vec<usize>,
    pub merged: Vec<usize>,
    pub threshold: f64,
}

impl MergeMap {
    /// The identity map on a vocabulary of `p` words.
    pub fn identity(p: usize) -> Self {
        Self {
            kept: (0..p).collect(),
            merged: vec![],
            threshold: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.merged.is_empty()
    }

    pub fn new_vocab_size(&self) -> usize {
        self.kept.len() + usize::from(!self.merged.is_empty())
    }

    /// Applies the row merge to any p-row matrix: kept rows in order, then
    /// one row holding the sum of the merged rows.
    pub fn apply_to_rows(&self, m: &Mat) -> Mat {
        let cols = m.cols();
        let mut out = Mat::zeros(self.new_vocab_size(), cols);
        for (new_row, &old_row) in self.kept.iter().enumerate() {
            for c in 0..cols {
                out[(new_row, c)] = m[(old_row, c)];
            }
        }
        if !self.merged.is_empty() {
            let meta = self.kept.len();
            for &old_row in &self.merged {
                for c in 0..cols {
                    out[(meta, c)] += m[(old_row, c)];
                }
            }
        }
        out
    }

    /// The generating model on the merged vocabulary: merged topic rows
    /// summed, weights unchanged. Column sums are preserved, so the result
    /// is still a valid topic model.
    pub fn apply_to_model(&self, model: &TopicModel) -> Result<TopicModel> {
        TopicModel::new(self.apply_to_rows(model.topics()), model.weights().clone())
    }
}

/// Merges every word whose normalization diagonal falls below
/// `threshold_factor` times the diagonal mean into a single trailing
/// meta-word. With fewer than two such words the corpus is returned
/// unchanged. `k` is the number of topics the caller intends to fit; the
/// merge refuses to shrink the vocabulary below `k + 1` rows.
pub fn merge_rare_words(
    corpus: &Corpus,
    threshold_factor: f64,
    k: usize,
) -> Result<(Corpus, MergeMap)> {
    if !(threshold_factor > 0.0) || !threshold_factor.is_finite() {
        return Err(Error::InvalidParameter {
            name: "threshold_factor",
            reason: format!("{threshold_factor} must be positive and finite"),
        });
    }
    let p = corpus.vocab_size();
    let d = empirical_frequencies(corpus);
    let diag = normalization_diag(&d, corpus.lengths());
    let mean = diag.iter().sum::<f64>() / p as f64;
    let threshold = threshold_factor * mean;
    let merged: Vec<usize> = (0..p).filter(|&j| diag[j] < threshold).collect();

    if merged.len() <= 1 {
        return Ok((
            corpus.clone(),
            MergeMap {
                kept: (0..p).collect(),
                merged: vec![],
                threshold,
            },
        ));
    }

    let kept: Vec<usize> = (0..p).filter(|&j| diag[j] >= threshold).collect();
    let new_p = kept.len() + 1;
    if new_p < k + 1 {
        return Err(Error::VocabularyTooDegenerate {
            remaining: new_p,
            needed: k + 1,
        });
    }

    // old row -> new row (merged rows all land on the trailing meta row)
    let mut row_of = vec![0usize; p];
    for (new_row, &old_row) in kept.iter().enumerate() {
        row_of[old_row] = new_row;
    }
    let meta = kept.len();
    for &old_row in &merged {
        row_of[old_row] = meta;
    }

    let new_counts = (0..corpus.num_docs())
        .map(|i| {
            let mut col: Vec<(u32, u32)> = Vec::with_capacity(corpus.doc(i).len());
            let mut meta_count = 0u32;
            for &(w, c) in corpus.doc(i) {
                let nw = row_of[w as usize];
                if nw == meta && !merged.is_empty() {
                    // kept rows never map to `meta` because meta == kept.len()
                    meta_count += c;
                } else {
                    col.push((nw as u32, c));
                }
            }
            if meta_count > 0 {
                col.push((meta as u32, meta_count));
            }
            col
        })
        .collect();

    let new_corpus = Corpus::new(new_p, new_counts, corpus.lengths().to_vec())?;
    Ok((
        new_corpus,
        MergeMap {
            kept,
            merged,
            threshold,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_params() -> SyntheticParams {
        SyntheticParams {
            p: 12,
            n: 40,
            k: 2,
            length_law: LengthLaw::Fixed(30),
            anchor_words_per_topic: 2,
            zipf_exponent: 1.0,
            pure_doc_fraction: 0.5,
            dirichlet_alpha: 0.5,
        }
    }

    #[test]
    fn generated_corpus_column_sums_match_lengths() {
        let (corpus, model) = generate_synthetic_corpus(&tiny_params(), 7).unwrap();
        for i in 0..corpus.num_docs() {
            let sum: u64 = corpus.doc(i).iter().map(|&(_, c)| u64::from(c)).sum();
            assert_eq!(sum, u64::from(corpus.lengths()[i]));
        }
        // constructor re-validates stochasticity; spot-check h sums to K
        let a = model.topics();
        let h_sum: f64 = (0..a.rows())
            .map(|j| (0..a.cols()).map(|k| a[(j, k)]).sum::<f64>())
            .sum();
        assert!((h_sum - model.num_topics() as f64).abs() < 1e-10);
    }

    #[test]
    fn generation_is_deterministic() {
        let params = tiny_params();
        let (c1, m1) = generate_synthetic_corpus(&params, 42).unwrap();
        let (c2, m2) = generate_synthetic_corpus(&params, 42).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(m1, m2);
        let (c3, _) = generate_synthetic_corpus(&params, 43).unwrap();
        assert_ne!(c1, c3);
    }

    #[test]
    fn single_topic_uniform_distribution() {
        // K=1, p=4, zipf 0: A is the uniform pmf, every document draws from it
        let params = SyntheticParams {
            p: 4,
            n: 5,
            k: 1,
            length_law: LengthLaw::Fixed(12),
            anchor_words_per_topic: 1,
            zipf_exponent: 0.0,
            pure_doc_fraction: 1.0,
            dirichlet_alpha: 1.0,
        };
        let a = params.topic_matrix();
        for j in 0..4 {
            assert!((a[(j, 0)] - 0.25).abs() < 1e-15);
        }
        let (corpus, _) = generate_synthetic_corpus(&params, 1).unwrap();
        for i in 0..corpus.num_docs() {
            let sum: u32 = corpus.doc(i).iter().map(|&(_, c)| c).sum();
            assert_eq!(sum, 12);
        }
    }

    #[test]
    fn generator_rejects_bad_params() {
        let mut params = tiny_params();
        params.k = 20;
        assert!(generate_synthetic_corpus(&params, 0).is_err());
        let mut params = tiny_params();
        params.anchor_words_per_topic = 7; // 2*7 > 12
        assert!(generate_synthetic_corpus(&params, 0).is_err());
        let mut params = tiny_params();
        params.length_law = LengthLaw::Uniform(0, 5);
        assert!(generate_synthetic_corpus(&params, 0).is_err());
    }

    #[test]
    fn pure_doc_sample_mean_approaches_topic_vector() {
        // law-of-large-numbers oracle: the average empirical column over
        // topic-0-pure documents approaches A_0 within 3 binomial sigmas
        let params = SyntheticParams {
            p: 6,
            n: 2000,
            k: 2,
            length_law: LengthLaw::Fixed(200),
            anchor_words_per_topic: 1,
            zipf_exponent: 0.5,
            pure_doc_fraction: 1.0,
            dirichlet_alpha: 1.0,
        };
        let (corpus, model) = generate_synthetic_corpus(&params, 11).unwrap();
        let d = empirical_frequencies(&corpus);
        let n_pure = 1000; // docs 0, 2, 4, ... are topic-0 pure
        let mut mean = vec![0.0; 6];
        for i in (0..2000).step_by(2) {
            for &(j, v) in d.col(i) {
                mean[j as usize] += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n_pure as f64);
        let a = model.topics();
        for j in 0..6 {
            let aj = a[(j, 0)];
            let sigma = (aj * (1.0 - aj) / (200.0 * n_pure as f64)).sqrt();
            assert!(
                (mean[j] - aj).abs() <= 3.0 * sigma.max(1e-9),
                "word {j}: {} vs {} (sigma {})",
                mean[j],
                aj,
                sigma
            );
        }
    }

    #[test]
    fn empirical_frequencies_divide_counts() {
        let corpus = Corpus::new(
            3,
            vec![vec![(0, 2), (2, 2)], vec![(1, 3)]],
            vec![4, 3],
        )
        .unwrap();
        let d = empirical_frequencies(&corpus);
        assert_eq!(d.col(0), &[(0, 0.5), (2, 0.5)]);
        assert_eq!(d.col(1), &[(1, 1.0)]);
        // all-zero word rows stay absent from the pattern
        assert_eq!(d.col_dense(1)[0], 0.0);
    }

    #[test]
    fn empirical_frequencies_match_dense_division() {
        let (corpus, _) = generate_synthetic_corpus(
            &SyntheticParams {
                p: 5,
                n: 3,
                k: 2,
                length_law: LengthLaw::Uniform(4, 9),
                anchor_words_per_topic: 1,
                zipf_exponent: 0.0,
                pure_doc_fraction: 0.0,
                dirichlet_alpha: 1.0,
            },
            5,
        )
        .unwrap();
        let d = empirical_frequencies(&corpus);
        for i in 0..3 {
            let mut dense = vec![0.0f64; 5];
            for &(j, c) in corpus.doc(i) {
                dense[j as usize] = f64::from(c) / f64::from(corpus.lengths()[i]);
            }
            assert_eq!(d.col_dense(i), dense);
        }
    }

    #[test]
    fn merge_keeps_homogeneous_vocabulary() {
        // every word equally frequent: nothing falls below 0.05 * mean
        let corpus = Corpus::new(
            4,
            vec![vec![(0, 1), (1, 1), (2, 1), (3, 1)]; 3],
            vec![4, 4, 4],
        )
        .unwrap();
        let (merged, map) = merge_rare_words(&corpus, 0.05, 2).unwrap();
        assert!(map.is_identity());
        assert_eq!(merged, corpus);
    }

    #[test]
    fn merge_collapses_zero_frequency_rows() {
        // words 3 and 4 never occur -> merged into a trailing meta word
        let corpus = Corpus::new(
            5,
            vec![vec![(0, 2), (1, 1), (2, 1)], vec![(0, 1), (1, 2), (2, 1)]],
            vec![4, 4],
        )
        .unwrap();
        let (merged, map) = merge_rare_words(&corpus, 0.05, 2).unwrap();
        assert_eq!(map.merged, vec![3, 4]);
        assert_eq!(map.kept, vec![0, 1, 2]);
        assert_eq!(merged.vocab_size(), 4);
        for i in 0..2 {
            let sum: u32 = merged.doc(i).iter().map(|&(_, c)| c).sum();
            assert_eq!(sum, 4);
        }
    }

    #[test]
    fn merge_matches_direct_threshold_scan() {
        let (corpus, _) = generate_synthetic_corpus(
            &SyntheticParams {
                p: 40,
                n: 60,
                k: 2,
                length_law: LengthLaw::Fixed(8),
                anchor_words_per_topic: 2,
                zipf_exponent: 2.0,
                pure_doc_fraction: 0.3,
                dirichlet_alpha: 0.5,
            },
            3,
        )
        .unwrap();
        let d = empirical_frequencies(&corpus);
        let diag = normalization_diag(&d, corpus.lengths());
        let mean = diag.iter().sum::<f64>() / diag.len() as f64;
        let expect: Vec<usize> = (0..40).filter(|&j| diag[j] < 0.05 * mean).collect();
        let (_, map) = merge_rare_words(&corpus, 0.05, 2).unwrap();
        if expect.len() <= 1 {
            assert!(map.is_identity());
        } else {
            assert_eq!(map.merged, expect);
        }
    }

    #[test]
    fn merge_refuses_degenerate_vocabulary() {
        // huge threshold merges everything; must refuse to go below k+1 rows
        let corpus = Corpus::new(
            4,
            vec![vec![(0, 1), (1, 1), (2, 1), (3, 1)]; 2],
            vec![4, 4],
        )
        .unwrap();
        let err = merge_rare_words(&corpus, 1e6, 3).unwrap_err();
        assert!(matches!(err, Error::VocabularyTooDegenerate { .. }));
    }

    #[test]
    fn merge_map_applies_to_model_rows() {
        let a = Mat::from_rows(&[
            vec![0.5, 0.1],
            vec![0.3, 0.2],
            vec![0.1, 0.3],
            vec![0.1, 0.4],
        ]);
        let w = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let model = TopicModel::new(a, w).unwrap();
        let map = MergeMap {
            kept: vec![0, 1],
            merged: vec![2, 3],
            threshold: 0.1,
        };
        let merged = map.apply_to_model(&model).unwrap();
        assert_eq!(merged.vocab_size(), 3);
        assert!((merged.topics()[(2, 0)] - 0.2).abs() < 1e-15);
        assert!((merged.topics()[(2, 1)] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn corpus_validates_invariants() {
        assert!(matches!(
            Corpus::new(3, vec![vec![(0, 2)]], vec![3]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(Corpus::new(3, vec![vec![(4, 2)]], vec![2]).is_err());
        assert!(Corpus::new(3, vec![vec![(0, 2)]], vec![0]).is_err());
        assert!(Corpus::new(0, vec![], vec![]).is_err());
    }
}
