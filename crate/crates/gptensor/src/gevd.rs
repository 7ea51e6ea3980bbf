//! Classical slice-pencil (generalized eigenvalue) decomposition of cubic
//! tensors, used as a cross-validation baseline for exact decompositions
//! with rank at most the second dimension.

use ndarray::Array2;
use num_complex::Complex64;

use crate::decompose::{descending_mode_permutation, inverse_permutation};
use crate::error::{Error, Result};
use crate::linalg::{cond2, dominant_triple, eig_sorted, khatri_rao, lstsq};
use crate::parallel::par_map;
use crate::rng::SeededRng;
use crate::tensor::{CPDecomposition, DenseTensor};

/// Condition limit for accepting the pencil eigenvector basis.
const PENCIL_COND_LIMIT: f64 = 1e10;

/// Intermediate state of the pencil method, exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct GevdWorkspace {
    /// Leading r-by-r block of the first two third-mode slices (in the
    /// internally sorted mode order).
    pub f1: Array2<Complex64>,
    pub f2: Array2<Complex64>,
    /// Eigenvector basis of the pencil `(f1^T, f2^T)`.
    pub pencil_eigvecs: Array2<Complex64>,
    /// Transformed tensor whose mode-0 slices are rank-1 on exact input.
    pub fhat: DenseTensor,
}

/// Pencil eigenvectors via a random unit-modulus combination: eigenvectors
/// of `(alpha A + beta B)^{-1} A` are exactly the generalized eigenvectors
/// of `(A, B)` for a regular pencil, and the combination is invertible for
/// generic weights.
fn pencil_eigvecs(
    a: &Array2<Complex64>,
    b: &Array2<Complex64>,
    rng: &mut SeededRng,
) -> Result<Array2<Complex64>> {
    let r = a.nrows();
    let mut last_cond = f64::INFINITY;
    for _ in 0..3 {
        let alpha = rng.unit_phase_right_half();
        let beta = rng.unit_phase_right_half();
        let mut comb = Array2::zeros((r, r));
        comb.scaled_add(alpha, a);
        comb.scaled_add(beta, b);
        let cond = cond2(&comb)?;
        if cond > PENCIL_COND_LIMIT {
            last_cond = cond;
            continue;
        }
        let inv_a = lstsq(&comb, a)?.solution;
        let (vals, vecs) = eig_sorted(&inv_a)?;
        // A repeated generalized eigenvalue leaves the eigenvectors
        // undetermined within the eigenspace; no (alpha, beta) separates
        // them, so report the pencil as unusable and let the caller
        // recombine slices.
        let scale = vals.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let mut min_gap = f64::INFINITY;
        for i in 0..r {
            for j in (i + 1)..r {
                min_gap = min_gap.min((vals[i] - vals[j]).norm());
            }
        }
        if r > 1 && min_gap < 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::PencilIllConditioned {
                cond: f64::INFINITY,
            });
        }
        let vec_cond = cond2(&vecs)?;
        if vec_cond > PENCIL_COND_LIMIT {
            last_cond = vec_cond;
            continue;
        }
        return Ok(vecs);
    }
    Err(Error::PencilIllConditioned { cond: last_cond })
}

/// Rank-`r` decomposition of an order-3 tensor via the slice pencil. On an
/// ill-conditioned pencil the second slice is replaced once by a random
/// combination of all third-mode slices before giving up.
pub fn gevd_decompose(t: &DenseTensor, r: usize) -> Result<CPDecomposition> {
    Ok(gevd_decompose_full(t, r)?.0)
}

/// As [`gevd_decompose`], also returning the workspace.
pub fn gevd_decompose_full(t: &DenseTensor, r: usize) -> Result<(CPDecomposition, GevdWorkspace)> {
    if t.order() != 3 {
        return Err(Error::OrderTooSmall {
            order: t.order(),
            context: "the pencil method applies to order-3 tensors",
        });
    }
    let perm = descending_mode_permutation(t.dims());
    let ts = t.permute_modes(&perm)?;
    let dims = ts.dims().to_vec();
    if r == 0 || r > dims[1] {
        return Err(Error::RankOutOfRange {
            rank: r,
            bound: format!("1 <= r <= n_2 = {} for the pencil method", dims[1]),
        });
    }
    if dims[2] < 2 {
        return Err(Error::DimMismatch(
            "pencil method needs at least two third-mode slices".into(),
        ));
    }

    let slice_block = |k: usize| -> Array2<Complex64> {
        Array2::from_shape_fn((r, r), |(i, j)| ts.get(&[i, j, k]))
    };
    let f1 = slice_block(0);
    let mut f2 = slice_block(1);

    let mut rng = SeededRng::new(0x9e3779b97f4a7c15);
    let f1t = f1.t().to_owned();
    let w = match pencil_eigvecs(&f1t, &f2.t().to_owned(), &mut rng) {
        Ok(w) => w,
        Err(Error::PencilIllConditioned { .. }) => {
            // One retry: recombine all third-mode slices into the second
            // pencil matrix.
            let mut recombined = Array2::zeros((r, r));
            for k in 0..dims[2] {
                recombined.scaled_add(rng.unit_phase_right_half(), &slice_block(k));
            }
            f2 = recombined;
            pencil_eigvecs(&f1t, &f2.t().to_owned(), &mut rng)?
        }
        Err(other) => return Err(other),
    };

    // Transform the leading slices; each mode-0 slice of the result is
    // rank-1 on exact input.
    let leading = ts.slice_mode0(0, r)?;
    let fhat = leading.mode_product(&w.t().to_owned(), 0)?;

    let slices: Vec<Array2<Complex64>> = (0..r)
        .map(|s| {
            Array2::from_shape_fn((dims[1], dims[2]), |(i, j)| fhat.get(&[s, i, j]))
        })
        .collect();
    let triples = par_map(slices, |slice| dominant_triple(&slice));
    let mut u2 = Array2::zeros((dims[1], r));
    let mut u3 = Array2::zeros((dims[2], r));
    for (s, triple) in triples.into_iter().enumerate() {
        let (sigma, u, v) = triple?;
        for i in 0..dims[1] {
            u2[(i, s)] = sigma * u[i];
        }
        for i in 0..dims[2] {
            u3[(i, s)] = v[i];
        }
    }

    // Mode-0 factor from the full linear system, row by row.
    let kr = khatri_rao(&[u2.view(), u3.view()]);
    let rhs = ts.unfold(0).t().to_owned();
    let u1 = lstsq(&kr, &rhs)?.solution.t().to_owned();

    let cp = CPDecomposition::new(vec![u1, u2, u3])?
        .permute_modes(&inverse_permutation(&perm))?
        .normalize_first_entries();
    let workspace = GevdWorkspace {
        f1,
        f2,
        pencil_eigvecs: w,
        fhat,
    };
    Ok((cp, workspace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::cp_equivalent;
    use crate::linalg::singular_values;
    use crate::reference;

    fn random_cp(rng: &mut SeededRng, dims: &[usize], r: usize) -> CPDecomposition {
        let factors: Vec<Array2<Complex64>> = dims
            .iter()
            .map(|&n| Array2::from_shape_fn((n, r), |_| rng.complex_normal()))
            .collect();
        CPDecomposition::new(factors).unwrap()
    }

    #[test]
    fn rank1_exact_recovery() {
        let mut rng = SeededRng::new(7);
        let truth = random_cp(&mut rng, &[3, 2, 2], 1);
        let t = truth.expand();
        let cp = gevd_decompose(&t, 1).unwrap();
        let resid = t.sub(&cp.expand()).unwrap().hs_norm();
        assert!(resid <= 1e-10 * t.hs_norm());
    }

    #[test]
    fn agrees_with_generating_polynomial_route() {
        let t = reference::cubic_rank4();
        let via_pencil = gevd_decompose(&t, 4).unwrap();
        let via_blocks = crate::decompose::decompose(&t, 4, 3).unwrap();
        assert!(cp_equivalent(&via_pencil, &via_blocks, 1e-6));
        let resid = t.sub(&via_pencil.expand()).unwrap().hs_norm();
        assert!(resid <= 1e-8 * t.hs_norm());
    }

    #[test]
    fn transformed_slices_are_rank1_on_exact_input() {
        let mut rng = SeededRng::new(17);
        let truth = random_cp(&mut rng, &[6, 5, 4], 4);
        let t = truth.expand();
        let (_, ws) = gevd_decompose_full(&t, 4).unwrap();
        for s in 0..4 {
            let slice = Array2::from_shape_fn((5, 4), |(i, j)| ws.fhat.get(&[s, i, j]));
            let svals = singular_values(&slice).unwrap();
            assert!(
                svals[1] <= 1e-8 * svals[0],
                "slice {s} ratio {}",
                svals[1] / svals[0]
            );
        }
    }

    #[test]
    fn seeded_exact_instances_reconstruct() {
        for seed in 0..8u64 {
            let mut rng = SeededRng::new(4000 + seed);
            let dims = [8usize, 6, 5];
            let r = 2 + (seed as usize % 4);
            let truth = random_cp(&mut rng, &dims, r);
            let t = truth.expand();
            let cp = gevd_decompose(&t, r).unwrap();
            let resid = t.sub(&cp.expand()).unwrap().hs_norm();
            assert!(resid <= 1e-8 * t.hs_norm(), "seed {seed} resid {resid}");
        }
    }

    #[test]
    fn rank_bound_and_order_checks() {
        let t = reference::cubic_rank4();
        assert!(matches!(
            gevd_decompose(&t, 5),
            Err(Error::RankOutOfRange { .. })
        ));
        let order4 = DenseTensor::zeros(vec![2, 2, 2, 2]).unwrap();
        assert!(matches!(
            gevd_decompose(&order4, 1),
            Err(Error::OrderTooSmall { .. })
        ));
    }
}
