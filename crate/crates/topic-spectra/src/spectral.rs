//! Pre-SVD normalization and the spectral objects on both the empirical
//! and population sides.
//!
//! The data matrix is left-scaled by the inverse square root of a diagonal
//! normalizer before any decomposition. The empirical normalizer weights
//! each document by the ratio of the mean length to its own length, which
//! is what makes the noise Gram expectation isotropic when lengths are
//! unequal. The population counterpart replaces observed frequencies with
//! their expectations.

use crate::corpus::{normalization_diag, FrequencyMatrix, TopicModel};
use crate::error::{Error, Result};
use crate::mat::{cholesky, dot, symmetric_eigen, Mat};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum NormalizerKind {
    Empirical,
    Population,
}

/// Strictly positive diagonal used to scale the frequency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    diag: Vec<f64>,
    kind: NormalizerKind,
}

impl Normalizer {
    pub fn new(diag: Vec<f64>, kind: NormalizerKind) -> Result<Self> {
        for (j, &v) in diag.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ZeroNormalizerEntry { word: j });
            }
        }
        Ok(Self { diag, kind })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn kind(&self) -> NormalizerKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn inv_sqrt(&self) -> Vec<f64> {
        self.diag.iter().map(|&v| 1.0 / v.sqrt()).collect()
    }

    pub fn sqrt(&self) -> Vec<f64> {
        self.diag.iter().map(|&v| v.sqrt()).collect()
    }
}

/// Builds the empirical normalizer from observed frequencies: entry `j`
/// is `Σ_i (N̄/(n·N_i))·d_i(j)`. Errors on any zero entry, which is the
/// signal to merge rare words first.
pub fn build_normalization(d: &FrequencyMatrix, lengths: &[u32]) -> Result<Normalizer> {
    Normalizer::new(normalization_diag(d, lengths), NormalizerKind::Empirical)
}

/// The expectation of the empirical normalizer under a model: entry `j`
/// is `Σ_i (N̄/(n·N_i))·(A w_i)(j)`.
pub fn build_population_normalization(model: &TopicModel, lengths: &[u32]) -> Result<Normalizer> {
    assert_eq!(model.num_docs(), lengths.len(), "lengths per document");
    let n = lengths.len() as f64;
    let mean_len = lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / n;
    // Σ_i c_i·(A w_i) = A·(Σ_i c_i w_i): accumulate the weighted topic
    // mixture first, then one pass over A
    let k = model.num_topics();
    let mut mix = vec![0.0; k];
    for (i, &len) in lengths.iter().enumerate() {
        let c = mean_len / (n * f64::from(len));
        for t in 0..k {
            mix[t] += c * model.weights()[(t, i)];
        }
    }
    let a = model.topics();
    let diag: Vec<f64> = (0..a.rows())
        .map(|j| (0..k).map(|t| a[(j, t)] * mix[t]).sum())
        .collect();
    Normalizer::new(diag, NormalizerKind::Population)
}

/// Top-K left singular pairs of the normalized data matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// p×K, columns ordered by descending singular value.
    pub xi: Mat,
    /// Singular values, non-increasing.
    pub sigma: Vec<f64>,
    pub normalizer: Normalizer,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GramSide {
    Documents,
    Words,
}

/// Top-K left singular vectors and values of `M^{-1/2} D`, computed by a
/// symmetric eigendecomposition of the smaller Gram matrix. Columns carry
/// a fixed sign convention: the leading vector has nonnegative sum, every
/// other one has its largest-magnitude entry positive.
pub fn normalized_svd(
    d: &FrequencyMatrix,
    normalizer: &Normalizer,
    k: usize,
) -> Result<SpectralDecomposition> {
    if d.num_docs().min(d.vocab_size()) > DENSE_GRAM_LIMIT {
        return randomized_svd(d, normalizer, k, RANDOMIZED_SVD_SEED);
    }
    let side = if d.num_docs() <= d.vocab_size() {
        GramSide::Documents
    } else {
        GramSide::Words
    };
    normalized_svd_with_side(d, normalizer, k, side)
}

/// Above this size the smaller Gram matrix is no longer eigendecomposed
/// densely; the seeded randomized subspace iteration takes over.
pub const DENSE_GRAM_LIMIT: usize = 4096;

/// Fixed seed of the randomized fallback, so the full pipeline stays a
/// pure function of its inputs.
pub const RANDOMIZED_SVD_SEED: u64 = 0x5EED;

pub(crate) fn normalized_svd_with_side(
    d: &FrequencyMatrix,
    normalizer: &Normalizer,
    k: usize,
    side: GramSide,
) -> Result<SpectralDecomposition> {
    let p = d.vocab_size();
    let n = d.num_docs();
    if normalizer.len() != p {
        return Err(Error::ShapeMismatch {
            what: "normalizer",
            expected_rows: p,
            expected_cols: 1,
            rows: normalizer.len(),
            cols: 1,
        });
    }
    if k == 0 || k > p.min(n) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("k={k} must be in 1..=min(p={p}, n={n})"),
        });
    }
    let y = d.scale_rows(&normalizer.inv_sqrt());

    let (mut xi, sigma) = match side {
        GramSide::Documents => {
            let gram = gram_documents(&y);
            let eig = symmetric_eigen(&gram)?;
            let sigma = top_sigmas(&eig.values, k, n)?;
            // map right singular vectors back: xi_k = Y v_k / sigma_k
            let mut xi = Mat::zeros(p, k);
            for t in 0..k {
                let v = eig.vectors.col_vec(t);
                let col = apply(&y, &v);
                for j in 0..p {
                    xi[(j, t)] = col[j] / sigma[t];
                }
            }
            // one re-orthonormalization pass; the mapping loses bits when
            // the spectrum is spread
            gram_schmidt_in_place(&mut xi);
            (xi, sigma)
        }
        GramSide::Words => {
            let gram = gram_words(&y);
            let eig = symmetric_eigen(&gram)?;
            let sigma = top_sigmas(&eig.values, k, p)?;
            let mut xi = Mat::zeros(p, k);
            for t in 0..k {
                for j in 0..p {
                    xi[(j, t)] = eig.vectors[(j, t)];
                }
            }
            (xi, sigma)
        }
    };

    apply_sign_convention(&mut xi);

    let defect = xi.orthonormality_defect();
    if defect > 1e-10 {
        return Err(Error::EigenNoConvergence {
            what: format!("singular vectors lost orthonormality (defect {defect:.3e})"),
        });
    }

    residual_check(&y, &xi, &sigma)?;

    Ok(SpectralDecomposition {
        xi,
        sigma,
        normalizer: normalizer.clone(),
        k,
    })
}

/// Verifies `‖Y·Yᵀ·ξ_t − σ_t²·ξ_t‖ ≤ 1e-8·σ_1²` for every retained pair.
fn residual_check(y: &FrequencyMatrix, xi: &Mat, sigma: &[f64]) -> Result<()> {
    let p = xi.rows();
    let bound = 1e-8 * sigma[0] * sigma[0];
    for (t, &s) in sigma.iter().enumerate() {
        let v = xi.col_vec(t);
        let yty = apply_transpose(y, &v);
        let yyt = apply(y, &yty);
        let s2 = s * s;
        let mut resid = 0.0;
        for j in 0..p {
            let r = yyt[j] - s2 * v[j];
            resid += r * r;
        }
        let resid = resid.sqrt();
        if resid > bound {
            return Err(Error::ResidualCheck {
                k: t + 1,
                residual: resid,
                bound,
            });
        }
    }
    Ok(())
}

fn top_sigmas(values: &[f64], k: usize, gram_dim: usize) -> Result<Vec<f64>> {
    let sigma: Vec<f64> = values
        .iter()
        .take(k)
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    let ratio = if sigma[0] > 0.0 { sigma[k - 1] / sigma[0] } else { 0.0 };
    // the Gram eigenvalues carry fp noise of order eps·dim·lambda_1, so an
    // eigenvalue ratio at that floor is indistinguishable from exact rank
    // deficiency
    let lambda_floor = f64::EPSILON * gram_dim as f64;
    if sigma[0] <= 0.0
        || ratio < 1e-12
        || values[k - 1] <= values[0].max(f64::MIN_POSITIVE) * lambda_floor
    {
        return Err(Error::RankDeficient { k, ratio });
    }
    Ok(sigma)
}

/// n×n Gram matrix YᵀY from sparse columns.
fn gram_documents(y: &FrequencyMatrix) -> Mat {
    let n = y.num_docs();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = sparse_dot(y.col(i), y.col(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// p×p Gram matrix YYᵀ accumulated from sparse column outer products.
fn gram_words(y: &FrequencyMatrix) -> Mat {
    let p = y.vocab_size();
    let mut g = Mat::zeros(p, p);
    for i in 0..y.num_docs() {
        let col = y.col(i);
        for &(r, vr) in col {
            let row = g.row_mut(r as usize);
            for &(c, vc) in col {
                row[c as usize] += vr * vc;
            }
        }
    }
    g
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let mut s = 0.0;
    let (mut ia, mut ib) = (0, 0);
    while ia < a.len() && ib < b.len() {
        match a[ia].0.cmp(&b[ib].0) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                s += a[ia].1 * b[ib].1;
                ia += 1;
                ib += 1;
            }
        }
    }
    s
}

/// Y·v for v of length n.
pub(crate) fn apply(y: &FrequencyMatrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.vocab_size()];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for &(j, x) in y.col(i) {
            out[j as usize] += vi * x;
        }
    }
    out
}

/// Yᵀ·u for u of length p.
pub(crate) fn apply_transpose(y: &FrequencyMatrix, u: &[f64]) -> Vec<f64> {
    (0..y.num_docs())
        .map(|i| y.col(i).iter().map(|&(j, x)| x * u[j as usize]).sum())
        .collect()
}

fn gram_schmidt_in_place(m: &mut Mat) {
    let (rows, cols) = (m.rows(), m.cols());
    for c in 0..cols {
        for prev in 0..c {
            let mut proj = 0.0;
            for r in 0..rows {
                proj += m[(r, prev)] * m[(r, c)];
            }
            for r in 0..rows {
                let delta = proj * m[(r, prev)];
                m[(r, c)] -= delta;
            }
        }
        let mut nrm = 0.0;
        for r in 0..rows {
            nrm += m[(r, c)] * m[(r, c)];
        }
        let nrm = nrm.sqrt();
        if nrm > 0.0 {
            for r in 0..rows {
                m[(r, c)] /= nrm;
            }
        }
    }
}

/// Fixed sign convention: first column has nonnegative sum, later columns
/// have their largest-magnitude entry positive (ties keep the lowest
/// index).
pub(crate) fn apply_sign_convention(xi: &mut Mat) {
    let (p, k) = (xi.rows(), xi.cols());
    if k == 0 {
        return;
    }
    let sum: f64 = (0..p).map(|j| xi[(j, 0)]).sum();
    if sum < 0.0 {
        for j in 0..p {
            xi[(j, 0)] = -xi[(j, 0)];
        }
    }
    for c in 1..k {
        let mut arg = 0;
        let mut best = 0.0;
        for j in 0..p {
            let v = xi[(j, c)].abs();
            if v > best {
                best = v;
                arg = j;
            }
        }
        if xi[(arg, c)] < 0.0 {
            for j in 0..p {
                xi[(j, c)] = -xi[(j, c)];
            }
        }
    }
}

/// Population spectral objects: the eigenpairs of the rank-K matrix
/// `n·M₀^{-1/2} A Σ_W Aᵀ M₀^{-1/2}`, built from its p×K factor without
/// ever materializing a p×p matrix.
#[derive(Debug, Clone)]
pub struct PopulationSpectra {
    /// p×K eigenvector matrix.
    pub xi: Mat,
    /// Eigenvalues, descending; all strictly positive.
    pub lambda: Vec<f64>,
    /// Operator norm of the population matrix, i.e. the top eigenvalue.
    pub g0_norm: f64,
}

/// The topic-topic concurrence matrix `(1/n)·Σ_i (1 − 1/N_i) w_i w_iᵀ`.
pub fn concurrence_matrix(model: &TopicModel, lengths: &[u32]) -> Mat {
    let k = model.num_topics();
    let n = lengths.len() as f64;
    let mut s = Mat::zeros(k, k);
    for (i, &len) in lengths.iter().enumerate() {
        let c = (1.0 - 1.0 / f64::from(len)) / n;
        for t in 0..k {
            let wt = model.weights()[(t, i)];
            if wt == 0.0 {
                continue;
            }
            for u in 0..k {
                s[(t, u)] += c * wt * model.weights()[(u, i)];
            }
        }
    }
    s
}

pub fn population_spectra(model: &TopicModel, lengths: &[u32]) -> Result<PopulationSpectra> {
    assert_eq!(model.num_docs(), lengths.len(), "lengths per document");
    let k = model.num_topics();
    let p = model.vocab_size();
    let n = lengths.len() as f64;

    let sigma_w = concurrence_matrix(model, lengths);
    let chol = cholesky(&sigma_w).ok_or(Error::SingularConcurrence)?;

    let m0 = build_population_normalization(model, lengths)?;
    let inv_sqrt = m0.inv_sqrt();

    // B = sqrt(n) · M0^{-1/2} · A · L, so the population matrix is B·Bᵀ
    let mut b = model.topics().mul(&chol);
    let scale = n.sqrt();
    for j in 0..p {
        let f = scale * inv_sqrt[j];
        for t in 0..k {
            b[(j, t)] *= f;
        }
    }

    let small = b.transpose().mul(&b);
    let eig = symmetric_eigen(&small)?;
    let lambda = eig.values.clone();
    if lambda[k - 1] <= 1e-12 * lambda[0].max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficientTopics {
            k,
            value: lambda[k - 1],
        });
    }

    // eigenvectors of B·Bᵀ: B · P · Λ^{-1/2}
    let mut xi = b.mul(&eig.vectors);
    for t in 0..k {
        let inv = 1.0 / lambda[t].sqrt();
        for j in 0..p {
            xi[(j, t)] *= inv;
        }
    }
    gram_schmidt_in_place(&mut xi);
    apply_sign_convention(&mut xi);

    Ok(PopulationSpectra {
        xi,
        lambda: lambda[..k].to_vec(),
        g0_norm: lambda[0],
    })
}

/// Seeded randomized subspace iteration for the top-K left singular pairs,
/// the fallback path when the smaller Gram side is too large to
/// eigendecompose densely. Block size K+4, two power passes, then refined
/// until the subspace residual falls below 1e-10 (relative).
pub fn randomized_svd(
    d: &FrequencyMatrix,
    normalizer: &Normalizer,
    k: usize,
    seed: u64,
) -> Result<SpectralDecomposition> {
    let p = d.vocab_size();
    let n = d.num_docs();
    if k == 0 || k > p.min(n) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("k={k} must be in 1..=min(p={p}, n={n})"),
        });
    }
    let y = d.scale_rows(&normalizer.inv_sqrt());
    let block = (k + 4).min(p.min(n));
    let mut rng = SplitMix64::new(seed);
    // start from a random block in document space, power-iterate on Y·Yᵀ
    let mut q = Mat::from_fn(p, block, |_, _| rng.next_normal());
    gram_schmidt_in_place(&mut q);
    let passes = 2;
    let max_refine = 50;
    let mut small_eig = None;
    for pass in 0..(passes + max_refine) {
        // Z = Yᵀ Q (n×block), Q' = Y Z column-orthonormalized
        let mut z = Mat::zeros(n, block);
        for c in 0..block {
            let u = q.col_vec(c);
            let col = apply_transpose(&y, &u);
            z.set_col(c, &col);
        }
        let mut next = Mat::zeros(p, block);
        for c in 0..block {
            let v = z.col_vec(c);
            let col = apply(&y, &v);
            next.set_col(c, &col);
        }
        gram_schmidt_in_place(&mut next);
        q = next;
        if pass + 1 < passes {
            continue;
        }
        // Rayleigh-Ritz on the block: T = Qᵀ (Y Yᵀ) Q
        let mut t = Mat::zeros(block, block);
        let mut yyq = Mat::zeros(p, block);
        for c in 0..block {
            let u = q.col_vec(c);
            let tmp = apply_transpose(&y, &u);
            let col = apply(&y, &tmp);
            yyq.set_col(c, &col);
        }
        for r in 0..block {
            let qr = q.col_vec(r);
            for c in 0..block {
                t[(r, c)] = dot(&qr, &yyq.col_vec(c));
            }
        }
        // symmetrize fp noise
        for r in 0..block {
            for c in (r + 1)..block {
                let v = 0.5 * (t[(r, c)] + t[(c, r)]);
                t[(r, c)] = v;
                t[(c, r)] = v;
            }
        }
        let eig = symmetric_eigen(&t)?;
        // subspace residual on the top-k Ritz pairs
        let mut worst = 0.0f64;
        for tk in 0..k {
            let w = eig.vectors.col_vec(tk);
            let ritz: Vec<f64> = (0..p)
                .map(|j| (0..block).map(|c| q[(j, c)] * w[c]).sum())
                .collect();
            let tmp = apply_transpose(&y, &ritz);
            let img = apply(&y, &tmp);
            let mut resid = 0.0;
            for j in 0..p {
                let r = img[j] - eig.values[tk] * ritz[j];
                resid += r * r;
            }
            worst = worst.max(resid.sqrt() / eig.values[0].max(f64::MIN_POSITIVE));
        }
        if worst <= 1e-10 || pass + 1 == passes + max_refine {
            small_eig = Some(eig);
            if worst <= 1e-10 {
                break;
            }
        }
    }
    let eig = small_eig.expect("refinement loop always sets the eigensolution");
    let sigma = top_sigmas(&eig.values, k, block)?;
    let mut xi = Mat::zeros(p, k);
    for tk in 0..k {
        let w = eig.vectors.col_vec(tk);
        for j in 0..p {
            xi[(j, tk)] = (0..block).map(|c| q[(j, c)] * w[c]).sum();
        }
    }
    gram_schmidt_in_place(&mut xi);
    apply_sign_convention(&mut xi);
    residual_check(&y, &xi, &sigma)?;
    Ok(SpectralDecomposition {
        xi,
        sigma,
        normalizer: normalizer.clone(),
        k,
    })
}
