//! Dense complex linear algebra kernels.
//!
//! Least squares run through a Householder QR with column pivoting; when the
//! pivoted-R diagonal suggests a condition number above [`QR_COND_LIMIT`] the
//! solve falls back to an SVD minimum-norm solution. Eigendecompositions and
//! SVDs are LAPACK via `ndarray-linalg`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition estimate above which the pivoted-QR path defers to SVD.
pub const QR_COND_LIMIT: f64 = 1e12;

/// Householder QR factorization with column pivoting of an m-by-n matrix,
/// m >= n. Stores the reflectors in-place for applying `Q^H` to right-hand
/// sides.
pub struct PivotedQr {
    /// Transformed matrix: upper triangle holds R, lower part the reflectors.
    packed: Array2<Complex64>,
    taus: Vec<f64>,
    alphas: Vec<Complex64>,
    /// `perm[j]` is the original column stored at pivot position `j`.
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn factor(a: &Array2<Complex64>) -> Result<Self> {
        let (m, n) = a.dim();
        if m < n {
            return Err(Error::DimMismatch(format!(
                "pivoted QR expects at least as many rows as columns, got {m}x{n}"
            )));
        }
        let mut packed = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut taus = Vec::with_capacity(n);
        let mut alphas = Vec::with_capacity(n);

        for k in 0..n {
            // Pivot: bring the column with the largest remaining norm to front.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let norm: f64 = (k..m).map(|i| packed[(i, j)].norm_sqr()).sum();
                if norm > best_norm {
                    best_norm = norm;
                    best = j;
                }
            }
            if best != k {
                perm.swap(k, best);
                for i in 0..m {
                    let tmp = packed[(i, k)];
                    packed[(i, k)] = packed[(i, best)];
                    packed[(i, best)] = tmp;
                }
            }

            let norm_x = best_norm.max(0.0).sqrt();
            if norm_x == 0.0 {
                taus.push(0.0);
                alphas.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let x0 = packed[(k, k)];
            let alpha = if x0.norm() == 0.0 {
                Complex64::new(norm_x, 0.0)
            } else {
                -(x0 / x0.norm()) * norm_x
            };
            // v = x - alpha*e1, stored below the diagonal with v0 kept aside.
            packed[(k, k)] = x0 - alpha;
            let vnorm_sqr: f64 = (k..m).map(|i| packed[(i, k)].norm_sqr()).sum();
            let tau = 2.0 / vnorm_sqr;
            // Apply H = I - tau v v^H to the trailing columns.
            for j in (k + 1)..n {
                let mut w = Complex64::new(0.0, 0.0);
                for i in k..m {
                    w += packed[(i, k)].conj() * packed[(i, j)];
                }
                let w = w * tau;
                for i in k..m {
                    let vk = packed[(i, k)];
                    packed[(i, j)] -= w * vk;
                }
            }
            taus.push(tau);
            alphas.push(alpha);
        }

        Ok(Self {
            packed,
            taus,
            alphas,
            perm,
        })
    }

    /// Ratio of the largest to the smallest pivoted R diagonal, a cheap
    /// condition estimate.
    pub fn cond_estimate(&self) -> f64 {
        let n = self.alphas.len();
        if n == 0 {
            return 1.0;
        }
        let mut hi = 0.0f64;
        let mut lo = f64::INFINITY;
        for alpha in &self.alphas {
            let d = alpha.norm();
            hi = hi.max(d);
            lo = lo.min(d);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Least-squares solve for a block of right-hand sides.
    pub fn solve(&self, b: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        let (m, n) = self.packed.dim();
        if b.nrows() != m {
            return Err(Error::DimMismatch(format!(
                "right-hand side has {} rows, matrix has {m}",
                b.nrows()
            )));
        }
        let p = b.ncols();
        let mut c = b.clone();
        // c <- Q^H b, reflector by reflector.
        for k in 0..n {
            let tau = self.taus[k];
            if tau == 0.0 {
                continue;
            }
            for j in 0..p {
                let mut w = Complex64::new(0.0, 0.0);
                for i in k..m {
                    w += self.packed[(i, k)].conj() * c[(i, j)];
                }
                let w = w * tau;
                for i in k..m {
                    let vk = self.packed[(i, k)];
                    c[(i, j)] -= w * vk;
                }
            }
        }
        // Back substitution on the n-by-n triangle; diagonal entries are the
        // stored alphas.
        let mut y = Array2::zeros((n, p));
        for j in 0..p {
            for i in (0..n).rev() {
                let mut acc = c[(i, j)];
                for t in (i + 1)..n {
                    acc -= self.packed[(i, t)] * y[(t, j)];
                }
                y[(i, j)] = acc / self.alphas[i];
            }
        }
        // Undo the column permutation.
        let mut x = Array2::zeros((n, p));
        for i in 0..n {
            for j in 0..p {
                x[(self.perm[i], j)] = y[(i, j)];
            }
        }
        Ok(x)
    }
}

/// Result of a least-squares solve.
pub struct Lstsq {
    pub solution: Array2<Complex64>,
    /// Frobenius norm of `A X - B`.
    pub residual: f64,
    /// Whether the SVD minimum-norm path was taken.
    pub svd_fallback: bool,
}

/// Minimum-residual solve of `A X = B`; minimum-norm solution when `A` is
/// numerically rank-deficient.
pub fn lstsq(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<Lstsq> {
    let qr = PivotedQr::factor(a)?;
    let (solution, svd_fallback) = if qr.cond_estimate() > QR_COND_LIMIT {
        (svd_min_norm_solve(a, b, None)?, true)
    } else {
        (qr.solve(b)?, false)
    };
    let residual = fro_norm(&(a.dot(&solution) - b));
    Ok(Lstsq {
        solution,
        residual,
        svd_fallback,
    })
}

/// SVD-based minimum-norm least squares. Singular values below
/// `rcond * sigma_max` are treated as zero; `rcond` defaults to
/// `eps * max(m, n)`.
pub fn svd_min_norm_solve(
    a: &Array2<Complex64>,
    b: &Array2<Complex64>,
    rcond: Option<f64>,
) -> Result<Array2<Complex64>> {
    let (m, n) = a.dim();
    let rcond = rcond.unwrap_or(f64::EPSILON * m.max(n) as f64);
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| Error::SvdFailure(e.to_string()))?;
    let u = u.expect("svd requested u");
    let vt = vt.expect("svd requested vt");
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let cut = rcond * smax;
    // x = V diag(1/s) U^H b over the retained singular values.
    let uhb = conj_transpose(&u).dot(b);
    let k = s.len();
    let mut scaled = Array2::zeros((k, b.ncols()));
    for i in 0..k {
        if s[i] > cut {
            for j in 0..b.ncols() {
                scaled[(i, j)] = uhb[(i, j)] / s[i];
            }
        }
    }
    Ok(conj_transpose(&vt).dot(&scaled))
}

/// Eigendecomposition of a general complex square matrix with a canonical
/// ordering: eigenpairs sorted by descending real part, ties by descending
/// imaginary part; eigenvector columns normalized to unit 2-norm.
pub fn eig_sorted(a: &Array2<Complex64>) -> Result<(Vec<Complex64>, Array2<Complex64>)> {
    let (vals, vecs) = a.eig().map_err(|e| Error::EigFailure(e.to_string()))?;
    let r = vals.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (vals[i], vals[j]);
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let mut sorted_vals = Vec::with_capacity(r);
    let mut sorted_vecs = Array2::zeros((r, r));
    for (pos, &idx) in order.iter().enumerate() {
        sorted_vals.push(vals[idx]);
        let col = vecs.column(idx);
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..r {
            sorted_vecs[(i, pos)] = if norm > 0.0 { col[i] / norm } else { col[i] };
        }
    }
    Ok((sorted_vals, sorted_vecs))
}

/// Singular values of a matrix, descending.
pub fn singular_values(a: &Array2<Complex64>) -> Result<Vec<f64>> {
    let (_, s, _) = a
        .svd(false, false)
        .map_err(|e| Error::SvdFailure(e.to_string()))?;
    Ok(s.to_vec())
}

/// Count of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(svals: &[f64], rel_tol: f64) -> usize {
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s / smax > rel_tol).count()
}

/// Dominant singular triple `(sigma, u, w)` such that
/// `A ~ sigma * outer(u, w)` with the plain (unconjugated) outer product.
pub fn dominant_triple(a: &Array2<Complex64>) -> Result<(f64, Array1<Complex64>, Array1<Complex64>)> {
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| Error::SvdFailure(e.to_string()))?;
    let u = u.expect("svd requested u");
    let vt = vt.expect("svd requested vt");
    let sigma = s[0];
    let u1 = u.column(0).to_owned();
    let w1 = vt.row(0).to_owned();
    Ok((sigma, u1, w1))
}

/// 2-norm condition number.
pub fn cond2(a: &Array2<Complex64>) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smin == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

pub fn conj_transpose(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

pub fn fro_norm(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product of two vectors, row-major convention:
/// `out[i * len(b) + j] = a[i] * b[j]`.
pub fn kron_vec(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Array1<Complex64> {
    let mut out = Array1::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Kronecker product chain over a list of vectors (left factor slowest).
pub fn kron_chain(vecs: &[Array1<Complex64>]) -> Array1<Complex64> {
    assert!(!vecs.is_empty());
    let mut acc = vecs[0].clone();
    for v in &vecs[1..] {
        acc = kron_vec(&acc, v);
    }
    acc
}

/// Khatri-Rao product: column `s` of the output is the Kronecker chain of
/// column `s` of each input matrix.
pub fn khatri_rao(mats: &[ArrayView2<Complex64>]) -> Array2<Complex64> {
    assert!(!mats.is_empty());
    let r = mats[0].ncols();
    let rows: usize = mats.iter().map(|m| m.nrows()).product();
    let mut out = Array2::zeros((rows, r));
    for s in 0..r {
        let cols: Vec<Array1<Complex64>> = mats
            .iter()
            .map(|m| m.index_axis(Axis(1), s).to_owned())
            .collect();
        let col = kron_chain(&cols);
        for i in 0..rows {
            out[(i, s)] = col[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use ndarray::array;

    fn random_matrix(rng: &mut SeededRng, m: usize, n: usize) -> Array2<Complex64> {
        Array2::from_shape_fn((m, n), |_| rng.complex_normal())
    }

    #[test]
    fn qr_matches_svd_solution_on_full_rank() {
        let mut rng = SeededRng::new(3);
        for trial in 0..10 {
            let m = 6 + trial % 4;
            let n = 3 + trial % 3;
            let a = random_matrix(&mut rng, m, n);
            let b = random_matrix(&mut rng, m, 2);
            let qr_sol = PivotedQr::factor(&a).unwrap().solve(&b).unwrap();
            let svd_sol = svd_min_norm_solve(&a, &b, None).unwrap();
            let diff = fro_norm(&(&qr_sol - &svd_sol));
            assert!(diff < 1e-10 * fro_norm(&svd_sol).max(1.0), "diff {diff}");
        }
    }

    #[test]
    fn lstsq_residual_is_orthogonal_to_range() {
        let mut rng = SeededRng::new(5);
        let a = random_matrix(&mut rng, 9, 4);
        let b = random_matrix(&mut rng, 9, 3);
        let sol = lstsq(&a, &b).unwrap();
        assert!(!sol.svd_fallback);
        let resid = a.dot(&sol.solution) - &b;
        let normal = conj_transpose(&a).dot(&resid);
        assert!(fro_norm(&normal) < 1e-10 * fro_norm(&b));
    }

    #[test]
    fn lstsq_exact_system_recovers_solution() {
        let mut rng = SeededRng::new(7);
        let a = random_matrix(&mut rng, 8, 5);
        let x_true = random_matrix(&mut rng, 5, 2);
        let b = a.dot(&x_true);
        let sol = lstsq(&a, &b).unwrap();
        assert!(fro_norm(&(&sol.solution - &x_true)) < 1e-10);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn rank_deficient_falls_back_to_min_norm() {
        let mut rng = SeededRng::new(11);
        let base = random_matrix(&mut rng, 8, 2);
        // Third column duplicates the first: rank 2 out of 3.
        let mut a = Array2::zeros((8, 3));
        for i in 0..8 {
            a[(i, 0)] = base[(i, 0)];
            a[(i, 1)] = base[(i, 1)];
            a[(i, 2)] = base[(i, 0)];
        }
        let b = random_matrix(&mut rng, 8, 1);
        let sol = lstsq(&a, &b).unwrap();
        assert!(sol.svd_fallback);
        let direct = svd_min_norm_solve(&a, &b, None).unwrap();
        assert!(fro_norm(&(&sol.solution - &direct)) < 1e-10);
        // Minimum-norm solution splits the weight across colinear columns.
        let resid = a.dot(&sol.solution) - &b;
        let normal = conj_transpose(&a).dot(&resid);
        assert!(fro_norm(&normal) < 1e-9 * fro_norm(&b));
    }

    #[test]
    fn eig_sorted_recovers_planted_spectrum() {
        let mut rng = SeededRng::new(13);
        let n = 5;
        let p = random_matrix(&mut rng, n, n);
        let vals: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(n as f64 - i as f64, 0.3 * i as f64))
            .collect();
        let d = Array2::from_diag(&Array1::from_vec(vals.clone()));
        let p_inv = svd_min_norm_solve(&p, &Array2::eye(n), None).unwrap();
        let a = p.dot(&d).dot(&p_inv);
        let (ev, vecs) = eig_sorted(&a).unwrap();
        for i in 0..n {
            assert!((ev[i] - vals[i]).norm() < 1e-8, "eig {i}: {} vs {}", ev[i], vals[i]);
            let col = vecs.column(i).to_owned();
            let av = a.dot(&col);
            let lv = col.mapv(|z| z * ev[i]);
            let err: f64 = (&av - &lv).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn dominant_triple_reconstructs_rank1() {
        let u = array![
            Complex64::new(1.0, 0.5),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.0, 1.0)
        ];
        let w = array![Complex64::new(2.0, -1.0), Complex64::new(0.5, 0.25)];
        let mut a = Array2::zeros((3, 2));
        for i in 0..3 {
            for j in 0..2 {
                a[(i, j)] = u[i] * w[j];
            }
        }
        let (sigma, u1, w1) = dominant_triple(&a).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let approx = sigma * u1[i] * w1[j];
                assert!((approx - a[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn khatri_rao_hand_case() {
        let a = array![
            [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
            [Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)]
        ];
        let b = array![
            [Complex64::new(5.0, 0.0), Complex64::new(6.0, 0.0)],
            [Complex64::new(7.0, 0.0), Complex64::new(8.0, 0.0)]
        ];
        let kr = khatri_rao(&[a.view(), b.view()]);
        assert_eq!(kr.dim(), (4, 2));
        assert_eq!(kr[(0, 0)], Complex64::new(5.0, 0.0));
        assert_eq!(kr[(1, 0)], Complex64::new(7.0, 0.0));
        assert_eq!(kr[(2, 0)], Complex64::new(15.0, 0.0));
        assert_eq!(kr[(3, 1)], Complex64::new(32.0, 0.0));
    }

    #[test]
    fn numerical_rank_thresholds() {
        assert_eq!(numerical_rank(&[1.0, 0.5, 1e-9], 1e-8), 2);
        assert_eq!(numerical_rank(&[1.0, 0.5, 1e-7], 1e-8), 3);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-8), 0);
    }
}
