//! Independent test oracles. Everything here is written from first
//! principles against plain `Vec<Vec<f64>>` data, deliberately sharing no
//! code with the library paths it is used to check.

/// Dense SVD by one-sided Jacobi rotations on a row-major matrix.
/// Returns (u, sigma, v) with `a = u·diag(sigma)·vᵀ`, sigma descending;
/// u is m×r and v is n×r with r = min(m, n).
pub fn jacobi_svd(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let m = a.len();
    let n = a[0].len();
    if m < n {
        let t: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
        let (u, s, v) = jacobi_svd(&t);
        return (v, s, u);
    }
    // columns of `work` converge to u_i * sigma_i
    let mut work: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha: f64 = work[i].iter().map(|x| x * x).sum();
                let beta: f64 = work[j].iter().map(|x| x * x).sum();
                let gamma: f64 = work[i].iter().zip(&work[j]).map(|(x, y)| x * y).sum();
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                if gamma.abs() <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let x = work[i][r];
                    let y = work[j][r];
                    work[i][r] = c * x - s * y;
                    work[j][r] = s * x + c * y;
                }
                for r in 0..n {
                    let x = v[i][r];
                    let y = v[j][r];
                    v[i][r] = c * x - s * y;
                    v[j][r] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = work
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let u: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            order
                .iter()
                .map(|&i| if norms[i] > 0.0 { work[i][r] / norms[i] } else { 0.0 })
                .collect()
        })
        .collect();
    let v_sorted: Vec<Vec<f64>> = (0..n)
        .map(|r| order.iter().map(|&i| v[i][r]).collect())
        .collect();
    (u, sigma, v_sorted)
}

/// Area of the triangle spanned by three 2-d points.
fn triangle_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

/// Barycentric coordinates of `p` with respect to a 2-d triangle, solved
/// by Cramer's rule.
fn triangle_barycentric(v0: &[f64], v1: &[f64], v2: &[f64], p: &[f64]) -> Option<[f64; 3]> {
    let det = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]);
    if det.abs() < 1e-14 {
        return None;
    }
    let l1 = ((p[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (p[1] - v0[1])) / det;
    let l2 = ((v1[0] - v0[0]) * (p[1] - v0[1]) - (p[0] - v0[0]) * (v1[1] - v0[1])) / det;
    Some([1.0 - l1 - l2, l1, l2])
}

/// Exhaustive vertex hunt for K = 3 in two dimensions: among all point
/// triples whose triangle contains every point (tolerance 1e-9), return
/// the index set with maximum area.
pub fn exhaustive_triangle_vertices(points: &[Vec<f64>]) -> Option<[usize; 3]> {
    let p = points.len();
    let mut best: Option<([usize; 3], f64)> = None;
    for a in 0..p {
        for b in (a + 1)..p {
            for c in (b + 1)..p {
                let area = triangle_area(&points[a], &points[b], &points[c]);
                if area < 1e-12 {
                    continue;
                }
                let all_inside = points.iter().all(|q| {
                    match triangle_barycentric(&points[a], &points[b], &points[c], q) {
                        Some(l) => l.iter().all(|&x| x >= -1e-9),
                        None => false,
                    }
                });
                if !all_inside {
                    continue;
                }
                match best {
                    Some((_, best_area)) if area <= best_area => {}
                    _ => best = Some(([a, b, c], area)),
                }
            }
        }
    }
    best.map(|(idx, _)| idx)
}

/// Exhaustive column alignment, written recursively (the library uses
/// Heap's algorithm over a precomputed cost matrix): minimizes the summed
/// l1 distance between estimate columns and truth columns over all
/// permutations. Matrices are row-major `Vec<Vec<f64>>`.
pub fn exhaustive_align(est: &[Vec<f64>], truth: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let k = est[0].len();
    let mut used = vec![false; k];
    let mut perm = vec![0usize; k];
    let mut best_total = f64::INFINITY;
    let mut best_perm = vec![0usize; k];
    fn l1_cols(est: &[Vec<f64>], truth: &[Vec<f64>], e: usize, t: usize) -> f64 {
        est.iter()
            .zip(truth)
            .map(|(er, tr)| (er[e] - tr[t]).abs())
            .sum()
    }
    fn recurse(
        t: usize,
        k: usize,
        est: &[Vec<f64>],
        truth: &[Vec<f64>],
        used: &mut [bool],
        perm: &mut [usize],
        best_total: &mut f64,
        best_perm: &mut [usize],
    ) {
        if t == k {
            let total: f64 = (0..k).map(|t| l1_cols(est, truth, perm[t], t)).sum();
            if total < *best_total {
                *best_total = total;
                best_perm.copy_from_slice(perm);
            }
            return;
        }
        for e in 0..k {
            if !used[e] {
                used[e] = true;
                perm[t] = e;
                recurse(t + 1, k, est, truth, used, perm, best_total, best_perm);
                used[e] = false;
            }
        }
    }
    recurse(
        0,
        k,
        est,
        truth,
        &mut used,
        &mut perm,
        &mut best_total,
        &mut best_perm,
    );
    (best_total, best_perm)
}

/// Simple deterministic generator for oracle-side randomness, independent
/// of the library's stream.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        // Knuth MMIX constants
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn next_normal(&mut self) -> f64 {
        // Box-Muller on two uniforms
        let u = self.next_f64().max(1e-12);
        let v = self.next_f64();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}
