//! Losses and diagnostics: permutation-aligned l1 losses, orthogonal
//! Procrustes alignment of singular frames, per-word deviation against the
//! theoretical envelope, perturbation norms of the normalized Gram
//! difference, and the model-assumption summary.

use crate::corpus::{empirical_frequencies, Corpus, FrequencyMatrix, TopicModel};
use crate::error::{Error, Result};
use crate::mat::{
    norm2, spectral_norm_symmetric, subspace_sin_theta, svd_small, symmetric_eigen, Mat,
};
use crate::spectral::{
    build_normalization, build_population_normalization, concurrence_matrix, population_spectra,
    PopulationSpectra,
};

/// Exhaustive permutation search is capped here; beyond this a proper
/// assignment solver would be needed.
pub const MAX_EXHAUSTIVE_K: usize = 10;

/// Fixed start-vector seed for the power iterations in this module.
const POWER_SEED: u64 = 0xD1A6;

/// l1 topic loss under the best column permutation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AlignmentResult {
    /// `permutation[t]` is the estimate column matched to truth column t.
    pub permutation: Vec<usize>,
    pub total_l1: f64,
    pub per_topic_l1: Vec<f64>,
    pub per_word_l1: Vec<f64>,
}

fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize])) {
    // Heap's algorithm, fixed visiting order
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0usize; k];
    f(&perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Minimizes the summed column-wise l1 distance over all K! permutations.
pub fn align_columns(a_hat: &Mat, a: &Mat) -> Result<AlignmentResult> {
    if a_hat.rows() != a.rows() || a_hat.cols() != a.cols() {
        return Err(Error::ShapeMismatch {
            what: "topic alignment",
            expected_rows: a.rows(),
            expected_cols: a.cols(),
            rows: a_hat.rows(),
            cols: a_hat.cols(),
        });
    }
    let k = a.cols();
    let p = a.rows();
    if k > MAX_EXHAUSTIVE_K {
        return Err(Error::AlignmentTooLarge {
            k,
            max: MAX_EXHAUSTIVE_K,
        });
    }
    // cost[e][t] = l1 distance between estimate column e and truth column t
    let mut cost = Mat::zeros(k, k);
    for j in 0..p {
        for e in 0..k {
            let est = a_hat[(j, e)];
            for t in 0..k {
                cost[(e, t)] += (est - a[(j, t)]).abs();
            }
        }
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_permutation(k, |perm| {
        let total: f64 = (0..k).map(|t| cost[(perm[t], t)]).sum();
        match &best {
            Some((cur, _)) if total >= *cur => {}
            _ => best = Some((total, perm.to_vec())),
        }
    });
    let (total_l1, permutation) = best.expect("at least one permutation");
    let per_topic_l1: Vec<f64> = (0..k).map(|t| cost[(permutation[t], t)]).collect();
    let per_word_l1: Vec<f64> = (0..p)
        .map(|j| {
            (0..k)
                .map(|t| (a_hat[(j, permutation[t])] - a[(j, t)]).abs())
                .sum()
        })
        .collect();
    Ok(AlignmentResult {
        permutation,
        total_l1,
        per_topic_l1,
        per_word_l1,
    })
}

/// Orthogonal Procrustes alignment of two orthonormal frames.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RotationAlignment {
    /// K×K orthogonal matrix with `xi_hat ≈ xi · oᵀ`.
    pub o: Mat,
    /// Smallest cosine of the principal angles; near zero means the
    /// subspaces are close to orthogonal and the alignment is unreliable.
    pub min_cosine: f64,
    pub reliable: bool,
}

/// The polar factor of `xi_hatᵀ·xi`: the Frobenius-optimal orthogonal
/// alignment. Identical frames give the identity.
pub fn rotation_align(xi_hat: &Mat, xi: &Mat) -> Result<RotationAlignment> {
    if xi_hat.rows() != xi.rows() || xi_hat.cols() != xi.cols() {
        return Err(Error::ShapeMismatch {
            what: "rotation alignment",
            expected_rows: xi.rows(),
            expected_cols: xi.cols(),
            rows: xi_hat.rows(),
            cols: xi_hat.cols(),
        });
    }
    let c = xi_hat.transpose().mul(xi);
    let (u, s, v) = svd_small(&c);
    let o = u.mul(&v.transpose());
    let min_cosine = s.last().copied().unwrap_or(0.0);
    Ok(RotationAlignment {
        o,
        min_cosine,
        reliable: min_cosine >= 1e-8,
    })
}

/// Per-word deviation of the empirical singular frame from the rotated
/// population frame, next to the theoretical envelope
/// `sqrt(h_j · p · ln(n) / (n · N))`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationReport {
    pub o: Mat,
    pub row_dev: Vec<f64>,
    pub envelope: Vec<f64>,
    pub ratio_max: f64,
    pub ratio_median: f64,
    pub sin_theta: f64,
    pub alignment_reliable: bool,
}

pub fn entrywise_deviation(
    xi_hat: &Mat,
    pop: &PopulationSpectra,
    diagnostics: &AssumptionDiagnostics,
    n: usize,
    doc_length: f64,
) -> Result<DeviationReport> {
    let alignment = rotation_align(xi_hat, &pop.xi)?;
    let p = xi_hat.rows();
    if diagnostics.h.len() != p {
        return Err(Error::ShapeMismatch {
            what: "deviation diagnostics",
            expected_rows: p,
            expected_cols: 1,
            rows: diagnostics.h.len(),
            cols: 1,
        });
    }
    let rotated = pop.xi.mul(&alignment.o.transpose());
    let row_dev: Vec<f64> = (0..p)
        .map(|j| {
            xi_hat
                .row(j)
                .iter()
                .zip(rotated.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let factor = (p as f64) * (n as f64).ln() / (n as f64 * doc_length);
    let envelope: Vec<f64> = diagnostics.h.iter().map(|&h| (h * factor).sqrt()).collect();
    let ratios: Vec<f64> = row_dev
        .iter()
        .zip(&envelope)
        .map(|(d, e)| d / e)
        .collect();
    let ratio_max = ratios.iter().fold(0.0f64, |m, &v| m.max(v));
    let ratio_median = median(&ratios);
    let sin_theta = subspace_sin_theta(&pop.xi, xi_hat);
    Ok(DeviationReport {
        o: alignment.o,
        row_dev,
        envelope,
        ratio_max,
        ratio_median,
        sin_theta,
        alignment_reliable: alignment.reliable,
    })
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Spearman rank correlation (no tie correction; inputs here are
/// continuous).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap().then(i.cmp(&j)));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        let x = ra[i] - mean;
        let y = rb[i] - mean;
        num += x * y;
        da += x * x;
        db += y * y;
    }
    if da == 0.0 || db == 0.0 {
        return 0.0;
    }
    num / (da.sqrt() * db.sqrt())
}

/// Norms of the difference between the empirical and population
/// normalized Gram matrices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PerturbationReport {
    /// Spectral norm of the p×p difference.
    pub g_minus_g0_norm: f64,
    /// Per word: the norm of the row of the difference projected onto the
    /// population eigenvector frame.
    pub row_projected_norms: Vec<f64>,
}

/// Dense-matrix ceiling for [`perturbation_norms`].
pub const PERTURBATION_DENSE_LIMIT: usize = 2000;

/// Forms both Gram matrices densely and measures their difference. The
/// corpus must be the one the model generated (after any shared merging).
pub fn perturbation_norms(corpus: &Corpus, model: &TopicModel) -> Result<PerturbationReport> {
    if corpus.vocab_size() > PERTURBATION_DENSE_LIMIT {
        return Err(Error::MatrixTooLarge {
            p: corpus.vocab_size(),
            max: PERTURBATION_DENSE_LIMIT,
        });
    }
    let d = empirical_frequencies(corpus);
    let m = build_normalization(&d, corpus.lengths())?;
    perturbation_norms_from_frequencies(&d, &m.diag().to_vec(), corpus.lengths(), model)
}

/// Same measurement with the frequency matrix and normalizer diagonal
/// supplied directly, which is how noiseless injections are exercised.
pub fn perturbation_norms_from_frequencies(
    d: &FrequencyMatrix,
    m_diag: &[f64],
    lengths: &[u32],
    model: &TopicModel,
) -> Result<PerturbationReport> {
    let p = d.vocab_size();
    if p > PERTURBATION_DENSE_LIMIT {
        return Err(Error::MatrixTooLarge {
            p,
            max: PERTURBATION_DENSE_LIMIT,
        });
    }
    if model.vocab_size() != p {
        return Err(Error::ShapeMismatch {
            what: "perturbation model",
            expected_rows: p,
            expected_cols: model.num_topics(),
            rows: model.vocab_size(),
            cols: model.num_topics(),
        });
    }
    let n = d.num_docs();
    let mean_len = lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64;

    // empirical side: G = Y Yᵀ − (n/N̄) I
    let inv_sqrt: Vec<f64> = m_diag.iter().map(|&v| 1.0 / v.sqrt()).collect();
    let y = d.scale_rows(&inv_sqrt);
    let mut e = Mat::zeros(p, p);
    for i in 0..n {
        let col = y.col(i);
        for &(r, vr) in col {
            let row = e.row_mut(r as usize);
            for &(c, vc) in col {
                row[c as usize] += vr * vc;
            }
        }
    }
    let shift = n as f64 / mean_len;
    for j in 0..p {
        e[(j, j)] -= shift;
    }

    // population side subtracted from its p×K factor: G0 = B Bᵀ
    let sigma_w = concurrence_matrix(model, lengths);
    let chol = crate::mat::cholesky(&sigma_w).ok_or(Error::SingularConcurrence)?;
    let m0 = build_population_normalization(model, lengths)?;
    let m0_inv_sqrt = m0.inv_sqrt();
    let mut b = model.topics().mul(&chol);
    let scale = (n as f64).sqrt();
    for j in 0..p {
        let f = scale * m0_inv_sqrt[j];
        for t in 0..model.num_topics() {
            b[(j, t)] *= f;
        }
    }
    for r in 0..p {
        let br = b.row(r).to_vec();
        let row = e.row_mut(r);
        for c in 0..p {
            let mut dotv = 0.0;
            for (t, &brt) in br.iter().enumerate() {
                dotv += brt * b[(c, t)];
            }
            row[c] -= dotv;
        }
    }

    let g_minus_g0_norm = spectral_norm_symmetric(&e, 1e-8, 500, POWER_SEED);

    let pop = population_spectra(model, lengths)?;
    let projected = e.mul(&pop.xi);
    let row_projected_norms: Vec<f64> = (0..p).map(|j| norm2(projected.row(j))).collect();

    Ok(PerturbationReport {
        g_minus_g0_norm,
        row_projected_norms,
    })
}

/// Observable summary of the model assumptions: word-mass profile, the
/// topic-topic overlap and concurrence matrices, and the length spread.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionDiagnostics {
    /// Per-word total topic mass `h_j`.
    pub h: Vec<f64>,
    pub h_min_over_mean: f64,
    pub lambda_min_sigma_w: f64,
    /// Smallest eigenvalue of the overlap matrix; the observable proxy for
    /// the signal-strength sequence.
    pub lambda_min_sigma_a: f64,
    pub min_sigma_a_entry: f64,
    /// max length / min length.
    pub length_ratio: f64,
}

pub fn assumption_diagnostics(
    model: &TopicModel,
    lengths: &[u32],
) -> Result<AssumptionDiagnostics> {
    let a = model.topics();
    let (p, k) = (a.rows(), a.cols());
    let h: Vec<f64> = (0..p)
        .map(|j| (0..k).map(|t| a[(j, t)]).sum())
        .collect();
    for (j, &hj) in h.iter().enumerate() {
        if !(hj > 0.0) {
            return Err(Error::ZeroWordMass { word: j });
        }
    }
    let h_mean = h.iter().sum::<f64>() / p as f64;
    let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);

    // overlap matrix AᵀH⁻¹A
    let mut sigma_a = Mat::zeros(k, k);
    for j in 0..p {
        let inv_h = 1.0 / h[j];
        for t in 0..k {
            let atj = a[(j, t)] * inv_h;
            if atj == 0.0 {
                continue;
            }
            for u in 0..k {
                sigma_a[(t, u)] += atj * a[(j, u)];
            }
        }
    }
    let min_sigma_a_entry = (0..k)
        .flat_map(|t| (0..k).map(move |u| (t, u)))
        .map(|(t, u)| sigma_a[(t, u)])
        .fold(f64::INFINITY, f64::min);
    let eig_a = symmetric_eigen(&sigma_a)?;
    let sigma_w = concurrence_matrix(model, lengths);
    let eig_w = symmetric_eigen(&sigma_w)?;

    let max_len = lengths.iter().max().copied().unwrap_or(1);
    let min_len = lengths.iter().min().copied().unwrap_or(1);

    Ok(AssumptionDiagnostics {
        h,
        h_min_over_mean: h_min / h_mean,
        lambda_min_sigma_w: *eig_w.values.last().unwrap(),
        lambda_min_sigma_a: *eig_a.values.last().unwrap(),
        min_sigma_a_entry,
        length_ratio: f64::from(max_len) / f64::from(min_len),
    })
}

/// Weight-recovery loss under a row permutation of the estimate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightLoss {
    pub max_l1: f64,
    pub mean_l1: f64,
    /// `permutation[t]` is the estimate row matched to truth row t.
    pub permutation: Vec<usize>,
}

/// Worst-document and mean l1 weight error. When the topic permutation is
/// already known (from aligning the topic matrices) pass it in; otherwise
/// all K! permutations are searched for the one minimizing the worst
/// document error (ties broken by the mean).
pub fn weight_loss(
    w_hat: &Mat,
    w: &Mat,
    permutation: Option<&[usize]>,
) -> Result<WeightLoss> {
    if w_hat.rows() != w.rows() || w_hat.cols() != w.cols() {
        return Err(Error::ShapeMismatch {
            what: "weight loss",
            expected_rows: w.rows(),
            expected_cols: w.cols(),
            rows: w_hat.rows(),
            cols: w_hat.cols(),
        });
    }
    let k = w.rows();
    let n = w.cols();
    let eval = |perm: &[usize]| -> (f64, f64) {
        let mut max_l1 = 0.0f64;
        let mut sum = 0.0f64;
        for i in 0..n {
            let mut l1 = 0.0;
            for t in 0..k {
                l1 += (w_hat[(perm[t], i)] - w[(t, i)]).abs();
            }
            max_l1 = max_l1.max(l1);
            sum += l1;
        }
        (max_l1, sum / n as f64)
    };
    if let Some(perm) = permutation {
        assert_eq!(perm.len(), k, "permutation length");
        let (max_l1, mean_l1) = eval(perm);
        return Ok(WeightLoss {
            max_l1,
            mean_l1,
            permutation: perm.to_vec(),
        });
    }
    if k > MAX_EXHAUSTIVE_K {
        return Err(Error::AlignmentTooLarge {
            k,
            max: MAX_EXHAUSTIVE_K,
        });
    }
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for_each_permutation(k, |perm| {
        let (max_l1, mean_l1) = eval(perm);
        let better = match &best {
            None => true,
            Some((bm, bmean, _)) => {
                max_l1 < *bm || (max_l1 == *bm && mean_l1 < *bmean)
            }
        };
        if better {
            best = Some((max_l1, mean_l1, perm.to_vec()));
        }
    });
    let (max_l1, mean_l1, permutation) = best.expect("at least one permutation");
    Ok(WeightLoss {
        max_l1,
        mean_l1,
        permutation,
    })
}
