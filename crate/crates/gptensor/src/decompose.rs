//! Exact CP decomposition through simultaneous diagonalization of the
//! solved generating blocks, plus the order-3 reshaping route.
//!
//! A random unit-modulus combination of the blocks is diagonalized once; the
//! eigenvector matrix simultaneously diagonalizes every block, the diagonals
//! give the factor entries for modes three onward, and the remaining two
//! factor matrices come from structured least squares against the observed
//! tensor.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::genpoly::{build_system, solve_blocks, GenPolySystem};
use crate::linalg::{cond2, fro_norm, kron_chain, lstsq, numerical_rank, singular_values};
use crate::parallel::par_map;
use crate::reshape::{choose_reshape_plan, reshape3};
use crate::rng::SeededRng;
use crate::tensor::{increment_index, CPDecomposition, DenseTensor};

/// Relative eigenvalue-gap threshold below which the spectrum counts as
/// degenerate and the combination weights are redrawn.
const EIG_GAP_REL_TOL: f64 = 1e-10;

/// Acceptance bound on the eigendecomposition residual.
const EIG_RESIDUAL_REL_TOL: f64 = 1e-8;

/// Number of derived-seed redraws on a degenerate spectrum.
pub const DEFAULT_XI_REDRAWS: usize = 5;

/// A weighted combination of the solved blocks together with its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct EigenCombination {
    /// Weight per `upsilon` pair.
    pub xi: Vec<((usize, usize), Complex64)>,
    /// The normalized weighted combination of the blocks.
    pub y_combined: Array2<Complex64>,
    /// Eigenvector matrix, unit-norm columns, eigenpairs sorted by
    /// descending real part (ties by imaginary part).
    pub p: Array2<Complex64>,
    pub eigvals: Vec<Complex64>,
    /// Smallest pairwise eigenvalue distance.
    pub min_eig_gap: f64,
    /// 2-norm condition number of the eigenvector matrix.
    pub p_condition: f64,
}

/// Draw one unit-modulus weight per label pair, phase uniform in
/// `(-pi/2, pi/2)`. Every weight has positive real part, so the weight sum
/// stays bounded away from zero. Deterministic in the seed.
pub fn draw_xi(upsilon: &[(usize, usize)], seed: u64) -> Vec<((usize, usize), Complex64)> {
    let mut rng = SeededRng::new(seed);
    upsilon
        .iter()
        .map(|&pair| (pair, rng.unit_phase_right_half()))
        .collect()
}

/// Combine the solved blocks with the given weights and diagonalize.
/// Rejects spectra whose smallest eigenvalue gap falls below 1e-10 of the
/// combined matrix norm; the caller may redraw the weights.
pub fn combine_and_diagonalize(
    sys: &GenPolySystem,
    xi: &[((usize, usize), Complex64)],
) -> Result<EigenCombination> {
    assert!(sys.is_solved(), "blocks must be solved before combining");
    assert_eq!(xi.len(), sys.upsilon().len(), "one weight per label pair");
    let r = sys.rank();
    let sum: Complex64 = xi.iter().map(|&(_, w)| w).sum();
    let mut y = Array2::<Complex64>::zeros((r, r));
    for (pair_index, &(_, w)) in xi.iter().enumerate() {
        y.scaled_add(w / sum, sys.y_block(pair_index));
    }
    let (eigvals, p) = crate::linalg::eig_sorted(&y)?;
    let y_norm = fro_norm(&y);
    let mut min_gap = f64::INFINITY;
    for i in 0..r {
        for j in (i + 1)..r {
            min_gap = min_gap.min((eigvals[i] - eigvals[j]).norm());
        }
    }
    let threshold = EIG_GAP_REL_TOL * y_norm;
    if min_gap < threshold {
        return Err(Error::DegenerateSpectrum {
            gap: min_gap,
            threshold,
        });
    }
    let lambda = Array2::from_diag(&Array1::from_vec(eigvals.clone()));
    let resid = fro_norm(&(y.dot(&p) - p.dot(&lambda)));
    if resid > EIG_RESIDUAL_REL_TOL * y_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::EigFailure(format!(
            "diagonalization residual {resid:.3e} exceeds {EIG_RESIDUAL_REL_TOL:.0e} of the matrix norm"
        )));
    }
    let p_condition = cond2(&p)?;
    Ok(EigenCombination {
        xi: xi.to_vec(),
        y_combined: y,
        p,
        eigvals,
        min_eig_gap: min_gap,
        p_condition,
    })
}

/// Factor matrices for modes 2.. (0-based) read off the simultaneously
/// diagonalized blocks, plus the largest off-diagonal mass ratio seen (a
/// diagnosability measure: zero for exactly rank-r tensors).
pub fn extract_modes(
    sys: &GenPolySystem,
    eig: &EigenCombination,
) -> Result<(Vec<Array2<Complex64>>, f64)> {
    let r = sys.rank();
    let dims = sys.dims().to_vec();
    let m = dims.len();
    let eye = Array2::eye(r);
    let p_inv = lstsq(&eig.p, &eye)?.solution;

    let tasks: Vec<usize> = (0..sys.upsilon().len()).collect();
    let per_pair: Vec<(Vec<Complex64>, f64)> = par_map(tasks, |pair_index| {
        let y = sys.y_block(pair_index);
        let transformed = p_inv.dot(y).dot(&eig.p);
        let mut diag = Vec::with_capacity(r);
        let mut offdiag_sq = 0.0f64;
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    diag.push(transformed[(i, i)]);
                } else {
                    offdiag_sq += transformed[(i, j)].norm_sqr();
                }
            }
        }
        let y_norm = fro_norm(y);
        let ratio = if y_norm > 0.0 {
            offdiag_sq.sqrt() / y_norm
        } else {
            0.0
        };
        (diag, ratio)
    });

    let mut factors: Vec<Array2<Complex64>> = (2..m)
        .map(|j| {
            let mut f = Array2::zeros((dims[j], r));
            for s in 0..r {
                f[(0, s)] = Complex64::new(1.0, 0.0);
            }
            f
        })
        .collect();
    let mut offdiag_max = 0.0f64;
    for (pair_index, &(j, k)) in sys.upsilon().iter().enumerate() {
        let (diag, ratio) = &per_pair[pair_index];
        offdiag_max = offdiag_max.max(*ratio);
        for s in 0..r {
            factors[j - 2][(k, s)] = diag[s];
        }
    }
    Ok((factors, offdiag_max))
}

/// Stack the Kronecker chains `p_s (x) v_{s,3} (x) ... (x) v_{s,m}` as the
/// columns of a coefficient matrix.
fn mode2_coefficients(
    p: &Array2<Complex64>,
    tails: &[Array2<Complex64>],
) -> Array2<Complex64> {
    let r = p.ncols();
    let rows: usize = p.nrows() * tails.iter().map(|f| f.nrows()).product::<usize>();
    let mut k_mat = Array2::zeros((rows, r));
    for s in 0..r {
        let mut chain: Vec<Array1<Complex64>> = vec![p.column(s).to_owned()];
        for f in tails {
            chain.push(f.column(s).to_owned());
        }
        let col = kron_chain(&chain);
        for i in 0..rows {
            k_mat[(i, s)] = col[i];
        }
    }
    k_mat
}

/// Solve the leading sub-tensor equation for the mode-1 factor: the first
/// `r` mode-0 slices must equal the weighted sum of `p_s` outer the unknown
/// vectors outer the extracted tail factors.
pub fn solve_mode2(
    t_sorted: &DenseTensor,
    eig: &EigenCombination,
    tails: &[Array2<Complex64>],
) -> Result<Array2<Complex64>> {
    let dims = t_sorted.dims().to_vec();
    let m = dims.len();
    let r = eig.p.ncols();
    let leading = t_sorted.slice_mode0(0, r)?;
    let k_mat = mode2_coefficients(&eig.p, tails);
    let svals = singular_values(&k_mat)?;
    let k_rank = numerical_rank(&svals, 1e-10);
    if k_rank < r {
        return Err(Error::RankDeficientBlock {
            mode: 1,
            numerical_rank: k_rank,
            required: r,
        });
    }
    // Right-hand side: one column per mode-1 index, rows linearized over
    // (mode 0, modes 2..) in row-major order.
    let rest: usize = dims.iter().enumerate().skip(2).map(|(_, &n)| n).product();
    let mut rhs = Array2::zeros((r * rest, dims[1]));
    let lead_dims = leading.dims().to_vec();
    let mut idx = vec![0usize; m];
    let mut flat = 0usize;
    loop {
        let mut row = idx[0];
        for (j, &n) in dims.iter().enumerate().skip(2) {
            row = row * n + idx[j];
        }
        rhs[(row, idx[1])] = leading.data()[flat];
        flat += 1;
        if !increment_index(&mut idx, &lead_dims) {
            break;
        }
    }
    let solved = lstsq(&k_mat, &rhs)?;
    Ok(solved.solution.t().to_owned())
}

/// Solve for the trailing rows of the mode-0 factor. Empty when the first
/// dimension equals the rank.
pub fn solve_mode1_tail(
    t_sorted: &DenseTensor,
    mode2_factor: &Array2<Complex64>,
    tails: &[Array2<Complex64>],
) -> Result<Array2<Complex64>> {
    let dims = t_sorted.dims().to_vec();
    let r = mode2_factor.ncols();
    let n1 = dims[0];
    if n1 == r {
        return Ok(Array2::zeros((0, r)));
    }
    let l_mat = mode2_coefficients(mode2_factor, tails);
    let svals = singular_values(&l_mat)?;
    let l_rank = numerical_rank(&svals, 1e-10);
    if l_rank < r {
        return Err(Error::RankDeficientBlock {
            mode: 0,
            numerical_rank: l_rank,
            required: r,
        });
    }
    let tail = t_sorted.slice_mode0(r, n1)?;
    let block: usize = dims.iter().skip(1).product();
    let mut rhs = Array2::zeros((block, n1 - r));
    for a in 0..(n1 - r) {
        for i in 0..block {
            rhs[(i, a)] = tail.data()[a * block + i];
        }
    }
    let solved = lstsq(&l_mat, &rhs)?;
    Ok(solved.solution.t().to_owned())
}

/// Numerical health indicators of one pipeline run. Block label pairs are
/// in the internal descending-dimension mode order.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GpDiagnostics {
    /// Least-squares residual norm per solved block.
    pub block_residuals: Vec<BlockResidual>,
    /// Largest off-diagonal mass ratio left by the simultaneous
    /// diagonalization; zero for exactly rank-r input.
    pub offdiag_max: f64,
    /// Condition number of the eigenvector matrix.
    pub p_condition: f64,
    /// Smallest pairwise eigenvalue distance of the accepted combination.
    pub min_eig_gap: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BlockResidual {
    pub mode: usize,
    pub entry: usize,
    pub residual: f64,
}

/// Everything the generating-polynomial pipeline produces on a tensor whose
/// modes are already sorted descending.
pub(crate) struct PipelineOutput {
    pub cp_sorted: CPDecomposition,
    pub diagnostics: GpDiagnostics,
}

/// Run blocks, combination eigendecomposition (with redraws on degenerate
/// spectra), diagonal extraction, and the two structured least squares.
pub(crate) fn run_pipeline_sorted(
    t_sorted: &DenseTensor,
    r: usize,
    seed: u64,
    redraws: usize,
) -> Result<PipelineOutput> {
    let sys = solve_blocks(build_system(t_sorted, r)?)?;
    let mut eig = None;
    let mut last_err = None;
    for attempt in 0..=redraws {
        let xi = draw_xi(sys.upsilon(), seed.wrapping_add(attempt as u64));
        match combine_and_diagonalize(&sys, &xi) {
            Ok(found) => {
                eig = Some(found);
                break;
            }
            Err(e @ Error::DegenerateSpectrum { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let eig = match eig {
        Some(e) => e,
        None => {
            return Err(Error::RedrawsExhausted {
                redraws,
                last: last_err
                    .map(|e| e.to_string())
                    .unwrap_or_else(|| "no attempts".into()),
            })
        }
    };
    let (tails, offdiag_max) = extract_modes(&sys, &eig)?;
    let mode2 = solve_mode2(t_sorted, &eig, &tails)?;
    let ztail = solve_mode1_tail(t_sorted, &mode2, &tails)?;
    let n1 = t_sorted.dims()[0];
    let mut factor0 = Array2::zeros((n1, r));
    for s in 0..r {
        for i in 0..r {
            factor0[(i, s)] = eig.p[(i, s)];
        }
        for i in r..n1 {
            factor0[(i, s)] = ztail[(i - r, s)];
        }
    }
    let mut factors = vec![factor0, mode2];
    factors.extend(tails);
    let cp_sorted = CPDecomposition::new(factors)?;
    let block_residuals = sys
        .upsilon()
        .iter()
        .zip(sys.residuals())
        .map(|(&(mode, entry), &residual)| BlockResidual {
            mode,
            entry,
            residual,
        })
        .collect();
    Ok(PipelineOutput {
        cp_sorted,
        diagnostics: GpDiagnostics {
            block_residuals,
            offdiag_max,
            p_condition: eig.p_condition,
            min_eig_gap: eig.min_eig_gap,
        },
    })
}

/// Permutation sorting dimensions descending (stable on ties).
pub(crate) fn descending_mode_permutation(dims: &[usize]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..dims.len()).collect();
    perm.sort_by_key(|&j| (std::cmp::Reverse(dims[j]), j));
    perm
}

pub(crate) fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (pos, &src) in perm.iter().enumerate() {
        inv[src] = pos;
    }
    inv
}

/// Rank-`r` decomposition of an exact rank-`r` tensor. Modes are internally
/// permuted to descending dimensions and the factors permuted back; output
/// columns carry the first-entry-1 normalization on every mode but the
/// first.
pub fn decompose(t: &DenseTensor, r: usize, seed: u64) -> Result<CPDecomposition> {
    Ok(decompose_with_diagnostics(t, r, seed)?.0)
}

/// As [`decompose`], also returning the pipeline diagnostics.
pub fn decompose_with_diagnostics(
    t: &DenseTensor,
    r: usize,
    seed: u64,
) -> Result<(CPDecomposition, GpDiagnostics)> {
    let perm = descending_mode_permutation(t.dims());
    let t_sorted = t.permute_modes(&perm)?;
    let out = run_pipeline_sorted(&t_sorted, r, seed, DEFAULT_XI_REDRAWS)?;
    let cp = out.cp_sorted.permute_modes(&inverse_permutation(&perm))?;
    Ok((cp.normalize_first_entries(), out.diagnostics))
}

/// Split a grouped factor vector into per-mode vectors along the Kronecker
/// structure, peeling one dominant singular triple per mode. Errors when a
/// peel leaves more than `rel_tol` of the grouped vector's norm behind.
pub(crate) fn split_kronecker_rank1(
    w: &Array1<Complex64>,
    group_dims: &[usize],
    group_modes: &[usize],
    rel_tol: f64,
) -> Result<Vec<Array1<Complex64>>> {
    let top_norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut parts = Vec::with_capacity(group_dims.len());
    let mut current = w.clone();
    for (level, &n) in group_dims.iter().enumerate() {
        if level + 1 == group_dims.len() {
            parts.push(current.clone());
            break;
        }
        let rest = current.len() / n;
        let mat = Array2::from_shape_fn((n, rest), |(i, j)| current[i * rest + j]);
        let (sigma, u, v) = crate::linalg::dominant_triple(&mat)?;
        let mut resid_sq = 0.0f64;
        for i in 0..n {
            for j in 0..rest {
                resid_sq += (mat[(i, j)] - sigma * u[i] * v[j]).norm_sqr();
            }
        }
        if resid_sq.sqrt() > rel_tol * top_norm {
            return Err(Error::ReshapeNotRankOne {
                modes: group_modes.to_vec(),
                resid: resid_sq.sqrt() / top_norm.max(f64::MIN_POSITIVE),
            });
        }
        parts.push(u.mapv(|z| z * sigma));
        current = v;
    }
    Ok(parts)
}

/// Assemble order-m factor matrices from grouped order-3 factors by rank-1
/// splitting each grouped column.
pub(crate) fn ungroup_factors(
    cp3: &CPDecomposition,
    plan: &crate::reshape::ReshapePlan,
    dims: &[usize],
    rel_tol: f64,
) -> Result<Vec<Array2<Complex64>>> {
    let r = cp3.rank();
    let mut factors: Vec<Array2<Complex64>> = dims.iter().map(|&n| Array2::zeros((n, r))).collect();
    for s in 0..r {
        for (block, group) in plan.groups.iter().enumerate() {
            let w = cp3.factors()[block].column(s).to_owned();
            let group_dims: Vec<usize> = group.iter().map(|&mode| dims[mode]).collect();
            let parts = split_kronecker_rank1(&w, &group_dims, group, rel_tol)?;
            for (pos, &mode) in group.iter().enumerate() {
                for i in 0..dims[mode] {
                    factors[mode][(i, s)] = parts[pos][i];
                }
            }
        }
    }
    Ok(factors)
}

/// Decomposition through order-3 reshaping: group modes, decompose the
/// reshaped tensor, and split every grouped factor back into rank-1
/// Kronecker parts. A split failing its rank-1 check means the reshaping
/// does not produce a decomposition, reported as a structured error.
pub fn decompose_reshaped(t: &DenseTensor, r: usize, seed: u64) -> Result<CPDecomposition> {
    let m = t.order();
    if m <= 3 {
        return Err(Error::OrderTooSmall {
            order: m,
            context: "reshaped decomposition applies to order above 3",
        });
    }
    let plan = choose_reshape_plan(t.dims(), r)?;
    let t3 = reshape3(t, &plan)?;
    let cp3 = decompose(&t3, r, seed)?;
    let factors = ungroup_factors(&cp3, &plan, t.dims(), 1e-6)?;
    Ok(CPDecomposition::new(factors)?.normalize_first_entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::cp_equivalent;
    use crate::reference;
    use crate::rng::SeededRng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn relative_residual(t: &DenseTensor, cp: &CPDecomposition) -> f64 {
        t.sub(&cp.expand()).unwrap().hs_norm() / t.hs_norm()
    }

    #[test]
    fn draw_xi_deterministic_and_unit() {
        let upsilon = vec![(2usize, 1usize), (2, 2), (3, 1)];
        let a = draw_xi(&upsilon, 99);
        let b = draw_xi(&upsilon, 99);
        assert_eq!(a.len(), 3);
        for ((pa, wa), (pb, wb)) in a.iter().zip(&b) {
            assert_eq!(pa, pb);
            assert_eq!(wa, wb);
            assert!((wa.norm() - 1.0).abs() < 1e-14);
            assert!(wa.re > 0.0);
        }
        assert_ne!(draw_xi(&upsilon, 100)[0].1, a[0].1);
    }

    /// A solved system with given blocks; only rank, upsilon and the solved
    /// blocks are read by the combination step.
    fn synthetic_system(y_blocks: Vec<Array2<Complex64>>) -> GenPolySystem {
        let r = y_blocks[0].nrows();
        let upsilon = (0..y_blocks.len()).map(|k| (2usize, k + 1)).collect();
        crate::genpoly::synthetic_solved_system(vec![r.max(2), r.max(2), 2], r, upsilon, y_blocks)
    }

    #[test]
    fn single_pair_combination_equals_block() {
        let y = Array2::from_shape_fn((3, 3), |(i, j)| c((i * 3 + j) as f64) + c(if i == j { 5.0 * i as f64 } else { 0.0 }));
        let sys = synthetic_system(vec![y.clone()]);
        let xi = draw_xi(sys.upsilon(), 7);
        let eig = combine_and_diagonalize(&sys, &xi).unwrap();
        // One weight: the normalization cancels it exactly.
        assert!(fro_norm(&(&eig.y_combined - &y)) < 1e-12 * fro_norm(&y));
    }

    #[test]
    fn diagonal_block_gives_axis_eigenvectors() {
        let d = Array2::from_diag(&Array1::from_vec(vec![c(3.0), c(1.0), c(-2.0)]));
        let sys = synthetic_system(vec![d]);
        let xi = vec![((2usize, 1usize), c(1.0))];
        let eig = combine_and_diagonalize(&sys, &xi).unwrap();
        assert_eq!(eig.eigvals.len(), 3);
        assert!((eig.eigvals[0] - c(3.0)).norm() < 1e-12);
        assert!((eig.eigvals[2] - c(-2.0)).norm() < 1e-12);
        // Eigenvector matrix is a permutation of the identity up to scaling.
        for s in 0..3 {
            let col = eig.p.column(s);
            let big: usize = (0..3).max_by(|&a, &b| col[a].norm().partial_cmp(&col[b].norm()).unwrap()).unwrap();
            for i in 0..3 {
                if i != big {
                    assert!(col[i].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn degenerate_spectrum_is_reported() {
        let eye: Array2<Complex64> = Array2::eye(3);
        let sys = synthetic_system(vec![eye]);
        let xi = vec![((2usize, 1usize), c(1.0))];
        assert!(matches!(
            combine_and_diagonalize(&sys, &xi),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn combination_on_exact_rank4_has_distinct_spectrum() {
        let t = reference::cubic_rank4();
        let sys = solve_blocks(build_system(&t, 4).unwrap()).unwrap();
        let xi = draw_xi(sys.upsilon(), 0);
        let eig = combine_and_diagonalize(&sys, &xi).unwrap();
        assert_eq!(eig.eigvals.len(), 4);
        assert!(eig.min_eig_gap > 0.0);
        assert!(eig.p_condition.is_finite());
        // 100 draws all give a clean gap on this instance.
        for seed in 0..100u64 {
            let xi = draw_xi(sys.upsilon(), seed);
            let eig = combine_and_diagonalize(&sys, &xi).unwrap();
            assert!(eig.min_eig_gap > 0.0, "seed {seed}");
        }
    }

    #[test]
    fn decompose_matches_printed_rank4_factors() {
        let t = reference::cubic_rank4();
        let cp = decompose(&t, 4, 7).unwrap();
        assert!(relative_residual(&t, &cp) <= 1e-8);
        assert!(cp_equivalent(&cp, &reference::cubic_rank4_factors(), 1e-6));
    }

    #[test]
    fn decompose_rank1_any_dims() {
        let mut rng = SeededRng::new(3);
        let factors: Vec<Array2<Complex64>> = [4usize, 2, 3, 2]
            .iter()
            .map(|&n| Array2::from_shape_fn((n, 1), |_| rng.complex_normal()))
            .collect();
        let cp_true = CPDecomposition::new(factors).unwrap();
        let t = cp_true.expand();
        let cp = decompose(&t, 1, 5).unwrap();
        assert!(relative_residual(&t, &cp) <= 1e-10);
    }

    #[test]
    fn decompose_seeded_roundtrip_with_unsorted_modes() {
        let mut rng = SeededRng::new(8);
        // Dimensions deliberately out of order; the driver must sort and
        // un-sort the modes.
        let dims = [3usize, 6, 4];
        let r = 3;
        let factors: Vec<Array2<Complex64>> = dims
            .iter()
            .map(|&n| Array2::from_shape_fn((n, r), |_| rng.complex_normal()))
            .collect();
        let cp_true = CPDecomposition::new(factors).unwrap();
        let t = cp_true.expand();
        let cp = decompose(&t, r, 11).unwrap();
        assert_eq!(cp.dims(), vec![3, 6, 4]);
        assert!(relative_residual(&t, &cp) <= 1e-8);
        assert!(cp_equivalent(&cp, &cp_true, 1e-6));
    }

    #[test]
    fn decompose_order4_printed_instance_direct() {
        let t = reference::order4_rank5();
        let cp = decompose(&t, 5, 1).unwrap();
        assert!(relative_residual(&t, &cp) <= 1e-8);
        assert!(cp_equivalent(&cp, &reference::order4_rank5_expected_factors(), 1e-6));
    }

    #[test]
    fn decompose_reshaped_order4_printed_instance() {
        let t = reference::order4_rank5();
        let cp = decompose_reshaped(&t, 5, 3).unwrap();
        assert!(relative_residual(&t, &cp) <= 1e-8);
        assert!(cp_equivalent(&cp, &reference::order4_rank5_expected_factors(), 1e-6));
    }

    #[test]
    fn decompose_reshaped_rank1_order4() {
        let mut rng = SeededRng::new(21);
        let factors: Vec<Array2<Complex64>> = [3usize, 2, 2, 2]
            .iter()
            .map(|&n| Array2::from_shape_fn((n, 1), |_| rng.complex_normal()))
            .collect();
        let cp_true = CPDecomposition::new(factors).unwrap();
        let t = cp_true.expand();
        let cp = decompose_reshaped(&t, 1, 0).unwrap();
        assert!(relative_residual(&t, &cp) <= 1e-10);
    }

    #[test]
    fn mode_tail_empty_when_first_dim_equals_rank() {
        let mut rng = SeededRng::new(33);
        let dims = [3usize, 3, 2];
        let r = 3;
        let factors: Vec<Array2<Complex64>> = dims
            .iter()
            .map(|&n| Array2::from_shape_fn((n, r), |_| rng.complex_normal()))
            .collect();
        let cp_true = CPDecomposition::new(factors).unwrap();
        let t = cp_true.expand();
        let cp = decompose(&t, r, 2).unwrap();
        assert!(relative_residual(&t, &cp) <= 1e-8);
    }

    #[test]
    fn split_kronecker_exact_and_failing() {
        let mut rng = SeededRng::new(51);
        let a = Array1::from_shape_fn(3, |_| rng.complex_normal());
        let b = Array1::from_shape_fn(2, |_| rng.complex_normal());
        let w = kron_chain(&[a.clone(), b.clone()]);
        let parts = split_kronecker_rank1(&w, &[3, 2], &[1, 2], 1e-6).unwrap();
        let rebuilt = kron_chain(&parts);
        let err: f64 = (&rebuilt - &w).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10);
        // A generic vector is far from rank-1.
        let generic = Array1::from_shape_fn(6, |_| rng.complex_normal());
        assert!(matches!(
            split_kronecker_rank1(&generic, &[3, 2], &[1, 2], 1e-6),
            Err(Error::ReshapeNotRankOne { .. })
        ));
    }
}
