//! The spectral topic estimator: word embeddings from singular-vector
//! ratios, vertex hunting on the embedded cloud, barycentric decoding, and
//! the closed-form weighted least squares for document weights.
//!
//! The full pipeline is [`topic_score_fit`]; [`fit_from_frequencies`] is
//! the same pipeline starting after preprocessing, which also makes it the
//! entry point for noiseless runs that feed expected frequencies and the
//! population normalizer through the estimator.

use crate::corpus::{empirical_frequencies, merge_rare_words, Corpus, FrequencyMatrix, MergeMap};
use crate::error::{Error, Result};
use crate::mat::{svd_small, Lu, Mat};
use crate::spectral::{build_normalization, normalized_svd, Normalizer, SpectralDecomposition};

/// Options of a single fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitOptions {
    pub k: usize,
    /// Rare words below this multiple of the mean normalization entry are
    /// merged before fitting; zero or negative disables merging.
    pub merge_threshold_factor: f64,
    /// Floor applied to the leading-singular-vector denominator in the
    /// embedding ratios.
    pub clamp_epsilon: f64,
    pub vh_algorithm: VertexHunting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VertexHunting {
    /// Successive projection on the embedded rows.
    Spa,
}

impl FitOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            merge_threshold_factor: 0.05,
            clamp_epsilon: 1e-12,
            vh_algorithm: VertexHunting::Spa,
        }
    }

    /// Same options with merging disabled.
    pub fn without_merge(mut self) -> Self {
        self.merge_threshold_factor = 0.0;
        self
    }
}

/// Word embeddings: row `j` is the (K−1)-vector of ratios of the trailing
/// singular vectors to the leading one at word `j`.
#[derive(Debug, Clone)]
pub struct ScoreEmbedding {
    /// p×(K−1).
    pub r: Mat,
    /// The denominator vector (leading singular vector).
    pub xi1: Vec<f64>,
    /// How many denominator entries were clamped up to epsilon.
    pub clamp_count: usize,
}

/// Ordering applied to hunted vertices before decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum VertexOrder {
    /// As selected by the vertex-hunting algorithm.
    Selection,
    /// Rows sorted lexicographically, making repeated fits comparable.
    Lexicographic,
}

/// A hunted simplex and the barycentric coordinates of every word in it.
#[derive(Debug, Clone)]
pub struct SimplexFit {
    /// K×(K−1); row k is vertex k.
    pub vertices: Mat,
    /// p×K; row j is the decoded coordinate of word j on the K-simplex.
    pub pi: Mat,
    pub vertex_order: VertexOrder,
    /// Condition number of the linear system used for decoding.
    pub condition_number: f64,
}

/// Everything a fit produces, intermediates included.
#[derive(Debug, Clone)]
pub struct TopicScoreFit {
    /// p×K column-stochastic estimate of the topic matrix (on the merged
    /// vocabulary when merging occurred).
    pub a_hat: Mat,
    pub simplex: SimplexFit,
    pub decomposition: SpectralDecomposition,
    pub merge_map: MergeMap,
    pub clamp_count: usize,
}

/// Ratios of trailing to leading singular vectors, with the denominator
/// floored at `clamp_epsilon`. Errors when more than half the vocabulary
/// needed clamping, which means the leading vector is not behaving like a
/// Perron vector.
pub fn score_embedding(
    decomposition: &SpectralDecomposition,
    clamp_epsilon: f64,
) -> Result<ScoreEmbedding> {
    let k = decomposition.k;
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "embeddings need at least two components".into(),
        });
    }
    let p = decomposition.xi.rows();
    let mut clamp_count = 0;
    let xi1: Vec<f64> = (0..p).map(|j| decomposition.xi[(j, 0)]).collect();
    let mut r = Mat::zeros(p, k - 1);
    for j in 0..p {
        let denom = if xi1[j] < clamp_epsilon {
            clamp_count += 1;
            clamp_epsilon
        } else {
            xi1[j]
        };
        for t in 1..k {
            r[(j, t - 1)] = decomposition.xi[(j, t)] / denom;
        }
    }
    if clamp_count > p / 2 {
        return Err(Error::ClampedDenominators {
            clamped: clamp_count,
            vocab: p,
        });
    }
    Ok(ScoreEmbedding {
        r,
        xi1,
        clamp_count,
    })
}

/// Successive projection: repeatedly pick the row of maximum norm in
/// homogeneous coordinates (a leading constant 1 is prepended to every
/// row, so the pick is affine-aware), then project all rows onto the
/// orthogonal complement of the pick. Returns the selected rows in their
/// original coordinates, in selection order. Ties break toward the lowest
/// row index. On points that lie exactly in a simplex with its vertices
/// present, the selection is exactly those vertices.
pub fn successive_projection(points: &Mat, k: usize) -> Result<Mat> {
    let p = points.rows();
    let dim = points.cols() + 1;
    if k > p {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("cannot pick {k} vertices from {p} points"),
        });
    }
    // homogeneous rows (1, x_j)
    let mut work = Mat::from_fn(p, dim, |j, c| {
        if c == 0 {
            1.0
        } else {
            points[(j, c - 1)]
        }
    });
    let mut selected = Vec::with_capacity(k);
    for step in 0..k {
        let mut best = 0.0f64;
        let mut arg = None;
        for j in 0..p {
            let nrm2: f64 = work.row(j).iter().map(|v| v * v).sum();
            if nrm2 > best {
                best = nrm2;
                arg = Some(j);
            }
        }
        let arg = match arg {
            Some(j) if best.sqrt() > 1e-14 => j,
            _ => return Err(Error::DegenerateSimplex { picked: step }),
        };
        selected.push(arg);
        // project every row onto the complement of the picked direction
        let nrm = best.sqrt();
        let u: Vec<f64> = work.row(arg).iter().map(|v| v / nrm).collect();
        for j in 0..p {
            let proj = crate::mat::dot(work.row(j), &u);
            let row = work.row_mut(j);
            for (c, uc) in u.iter().enumerate() {
                row[c] -= proj * uc;
            }
        }
    }
    Ok(Mat::from_fn(k, points.cols(), |v, c| {
        points[(selected[v], c)]
    }))
}

/// Sorts vertex rows lexicographically so repeated fits order topics the
/// same way.
fn canonicalize_vertices(vertices: &Mat) -> Mat {
    let k = vertices.rows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        for c in 0..vertices.cols() {
            match vertices[(a, c)].partial_cmp(&vertices[(b, c)]).unwrap() {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        a.cmp(&b)
    });
    Mat::from_fn(k, vertices.cols(), |v, c| vertices[(order[v], c)])
}

/// Barycentric coordinates of every embedded word with respect to the
/// hunted vertices: solve for the affine combination, truncate negatives,
/// renormalize to the simplex. A row whose truncated coordinate vanishes
/// entirely falls back to the nearest vertex.
pub fn barycentric_coordinates(embedding: &ScoreEmbedding, vertices: &Mat) -> Result<SimplexFit> {
    decode_simplex(&embedding.r, vertices, VertexOrder::Selection)
}

fn decode_simplex(points: &Mat, vertices: &Mat, order: VertexOrder) -> Result<SimplexFit> {
    let k = vertices.rows();
    let p = points.rows();
    assert_eq!(points.cols(), k.saturating_sub(1), "embedding dimension");

    // K×K system: first row all ones, then vertex coordinates as columns
    let q = Mat::from_fn(k, k, |r, c| {
        if r == 0 {
            1.0
        } else {
            vertices[(c, r - 1)]
        }
    });
    let (_, sv, _) = svd_small(&q);
    let cond = if sv[k - 1] > 0.0 {
        sv[0] / sv[k - 1]
    } else {
        f64::INFINITY
    };
    if !(cond < 1e12) {
        let (a, b) = closest_vertex_pair(vertices);
        return Err(Error::IllConditionedVertices { cond, a, b });
    }
    let lu = Lu::new(&q).ok_or_else(|| {
        let (a, b) = closest_vertex_pair(vertices);
        Error::IllConditionedVertices {
            cond: f64::INFINITY,
            a,
            b,
        }
    })?;

    let mut pi = Mat::zeros(p, k);
    let mut rhs = vec![0.0; k];
    for j in 0..p {
        rhs[0] = 1.0;
        rhs[1..k].copy_from_slice(points.row(j));
        let raw = lu.solve(&rhs);
        let row = simplex_projection_or_nearest(&raw, vertices, points.row(j));
        pi.row_mut(j).copy_from_slice(&row);
    }
    Ok(SimplexFit {
        vertices: vertices.clone(),
        pi,
        vertex_order: order,
        condition_number: cond,
    })
}

/// Componentwise truncation at zero followed by l1 normalization; if
/// truncation wipes the vector out, the nearest vertex wins.
fn simplex_projection_or_nearest(raw: &[f64], vertices: &Mat, point: &[f64]) -> Vec<f64> {
    let truncated: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = truncated.iter().sum();
    if sum > 0.0 {
        return truncated.iter().map(|&v| v / sum).collect();
    }
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for v in 0..vertices.rows() {
        let dist2: f64 = vertices
            .row(v)
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if dist2 < best {
            best = dist2;
            arg = v;
        }
    }
    let mut out = vec![0.0; vertices.rows()];
    out[arg] = 1.0;
    out
}

fn closest_vertex_pair(vertices: &Mat) -> (usize, usize) {
    let k = vertices.rows();
    let mut best = f64::INFINITY;
    let mut pair = (0, 1.min(k.saturating_sub(1)));
    for a in 0..k {
        for b in (a + 1)..k {
            let dist2: f64 = vertices
                .row(a)
                .iter()
                .zip(vertices.row(b))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            if dist2 < best {
                best = dist2;
                pair = (a, b);
            }
        }
    }
    pair
}

/// Recovers the topic matrix from the normalizer, the leading singular
/// vector and the barycentric matrix: scale row j of pi by
/// `sqrt(M_jj)·xi1_j`, truncate negatives, then normalize each column to
/// a probability mass function.
pub fn estimate_topic_matrix(normalizer: &Normalizer, xi1: &[f64], pi: &Mat) -> Result<Mat> {
    let p = pi.rows();
    let k = pi.cols();
    assert_eq!(xi1.len(), p, "xi1 per word");
    assert_eq!(normalizer.len(), p, "normalizer per word");
    let sqrt_m = normalizer.sqrt();
    let mut a = Mat::zeros(p, k);
    for j in 0..p {
        let f = sqrt_m[j] * xi1[j];
        for t in 0..k {
            a[(j, t)] = (f * pi[(j, t)]).max(0.0);
        }
    }
    for t in 0..k {
        let sum: f64 = (0..p).map(|j| a[(j, t)]).sum();
        if !(sum > 0.0) {
            return Err(Error::CollapsedTopic { topic: t });
        }
        for j in 0..p {
            a[(j, t)] /= sum;
        }
    }
    Ok(a)
}

/// The pipeline after preprocessing: decomposition, embedding, vertex
/// hunting, decoding, topic recovery. The K = 1 case skips the simplex
/// machinery and returns the normalized leading direction.
pub fn fit_from_frequencies(
    d: &FrequencyMatrix,
    normalizer: &Normalizer,
    options: &FitOptions,
) -> Result<TopicScoreFit> {
    let k = options.k;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "need at least one topic".into(),
        });
    }
    let decomposition =
        normalized_svd(d, normalizer, k).map_err(|e| e.at_stage("svd"))?;

    if k == 1 {
        let p = d.vocab_size();
        let xi1: Vec<f64> = (0..p).map(|j| decomposition.xi[(j, 0)]).collect();
        let pi = Mat::from_fn(p, 1, |_, _| 1.0);
        let a_hat = estimate_topic_matrix(normalizer, &xi1, &pi)
            .map_err(|e| e.at_stage("topic matrix"))?;
        return Ok(TopicScoreFit {
            a_hat,
            simplex: SimplexFit {
                vertices: Mat::zeros(1, 0),
                pi,
                vertex_order: VertexOrder::Lexicographic,
                condition_number: 1.0,
            },
            decomposition,
            merge_map: MergeMap::identity(p),
            clamp_count: 0,
        });
    }

    let embedding = score_embedding(&decomposition, options.clamp_epsilon)
        .map_err(|e| e.at_stage("embedding"))?;
    let VertexHunting::Spa = options.vh_algorithm;
    let vertices = successive_projection(&embedding.r, k)
        .map_err(|e| e.at_stage("vertex hunting"))?;
    let vertices = canonicalize_vertices(&vertices);
    let mut simplex = decode_simplex(&embedding.r, &vertices, VertexOrder::Lexicographic)
        .map_err(|e| e.at_stage("barycentric"))?;
    let a_hat = estimate_topic_matrix(normalizer, &embedding.xi1, &simplex.pi)
        .map_err(|e| e.at_stage("topic matrix"))?;
    simplex.vertex_order = VertexOrder::Lexicographic;
    Ok(TopicScoreFit {
        a_hat,
        simplex,
        decomposition,
        merge_map: MergeMap::identity(d.vocab_size()),
        clamp_count: embedding.clamp_count,
    })
}

/// Full estimation from a raw corpus: merge rare words, form empirical
/// frequencies and the normalizer, then run the spectral pipeline. The
/// returned map records which words were merged; the topic estimate lives
/// on the merged vocabulary.
pub fn topic_score_fit(corpus: &Corpus, options: &FitOptions) -> Result<TopicScoreFit> {
    let (working, merge_map) = if options.merge_threshold_factor > 0.0 {
        merge_rare_words(corpus, options.merge_threshold_factor, options.k)
            .map_err(|e| e.at_stage("merge"))?
    } else {
        (corpus.clone(), MergeMap::identity(corpus.vocab_size()))
    };
    let d = empirical_frequencies(&working);
    let normalizer =
        build_normalization(&d, working.lengths()).map_err(|e| e.at_stage("normalize"))?;
    let mut fit = fit_from_frequencies(&d, &normalizer, options)?;
    fit.merge_map = merge_map;
    Ok(fit)
}

/// Weighted least-squares estimate of the document weights given a topic
/// matrix: the closed form `(AᵀM⁻¹A)⁻¹AᵀM⁻¹d_i` per document, negatives
/// truncated, renormalized onto the simplex (uniform fallback when the
/// whole vector truncates away).
pub fn estimate_weights(
    d: &FrequencyMatrix,
    normalizer: &Normalizer,
    a_hat: &Mat,
) -> Result<Mat> {
    let p = a_hat.rows();
    let k = a_hat.cols();
    assert_eq!(normalizer.len(), p, "normalizer per word");
    assert_eq!(d.vocab_size(), p, "frequencies per word");
    let n = d.num_docs();
    let inv_m = normalizer.diag().iter().map(|&v| 1.0 / v).collect::<Vec<_>>();

    // normal matrix AᵀM⁻¹A
    let mut normal = Mat::zeros(k, k);
    for j in 0..p {
        let w = inv_m[j];
        for t in 0..k {
            let atw = a_hat[(j, t)] * w;
            if atw == 0.0 {
                continue;
            }
            for u in 0..k {
                normal[(t, u)] += atw * a_hat[(j, u)];
            }
        }
    }
    let (_, sv, _) = svd_small(&normal);
    if sv[k - 1] <= 0.0 || sv[0] / sv[k - 1] > 1e12 {
        return Err(Error::CollinearTopics);
    }
    let lu = Lu::new(&normal).ok_or(Error::CollinearTopics)?;

    let mut w_hat = Mat::zeros(k, n);
    for i in 0..n {
        let mut rhs = vec![0.0; k];
        for &(j, v) in d.col(i) {
            let jw = inv_m[j as usize] * v;
            for t in 0..k {
                rhs[t] += a_hat[(j as usize, t)] * jw;
            }
        }
        let raw = lu.solve(&rhs);
        let w = truncate_to_simplex_or_uniform(&raw);
        for t in 0..k {
            w_hat[(t, i)] = w[t];
        }
    }
    Ok(w_hat)
}

fn truncate_to_simplex_or_uniform(raw: &[f64]) -> Vec<f64> {
    let truncated: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = truncated.iter().sum();
    if sum > 0.0 {
        truncated.iter().map(|&v| v / sum).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}
