//! Generating-polynomial linear systems.
//!
//! Tensor entries are labelled by multilinear monomials, one variable per
//! mode. For a low-rank tensor there are polynomials whose pairing with
//! every complementary monomial vanishes; their coefficient blocks satisfy
//! linear systems read directly off the tensor entries. Solving those
//! systems (exactly for exact-rank tensors, in least squares otherwise)
//! yields one `r x r` block per label pair, and the blocks share their
//! eigenvectors with the first factor matrix.
//!
//! All indices in this module are 0-based. The label pair set `upsilon`
//! holds `(j, k)` with mode `j >= 2` and entry `k >= 1`, and block systems
//! are assembled only for those modes: the skipped mode-1 systems may be
//! underdetermined, and its factor is recovered downstream instead. The
//! tensor must have its dimensions sorted in descending order before these
//! routines apply; the top-level drivers handle that permutation.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, svd_min_norm_solve, PivotedQr, QR_COND_LIMIT};
use crate::parallel::par_map;
use crate::tensor::{increment_index, CPDecomposition, DenseTensor};

/// A multilinear monomial, identified with a tensor entry position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonomialLabel {
    pub indices: Vec<usize>,
}

impl MonomialLabel {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.indices.len() != dims.len()
            || self.indices.iter().zip(dims).any(|(&i, &n)| i >= n)
        {
            return Err(Error::LabelOutOfRange {
                label: self.indices.clone(),
                dims: dims.to_vec(),
            });
        }
        Ok(())
    }
}

/// Bilinear pairing of a polynomial (a coefficient map over monomial labels)
/// with a tensor: the coefficient-weighted sum of the labelled entries.
pub fn pairing(terms: &[(MonomialLabel, Complex64)], t: &DenseTensor) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (label, coeff) in terms {
        label.validate(t.dims())?;
        acc += *coeff * t.get(&label.indices);
    }
    Ok(acc)
}

/// Whether the polynomial is generating for the tensor on the mode set
/// `modes`: its support must fix index 0 outside `modes`, and its pairing
/// with every complementary monomial must vanish within `tol * hs_norm(t)`.
pub fn is_generating_poly(
    terms: &[(MonomialLabel, Complex64)],
    modes: &[usize],
    t: &DenseTensor,
    tol: f64,
) -> Result<bool> {
    let m = t.order();
    for (label, _) in terms {
        label.validate(t.dims())?;
        for mode in 0..m {
            if !modes.contains(&mode) && label.indices[mode] != 0 {
                return Err(Error::SupportOutsideModes {
                    mode,
                    allowed: modes.to_vec(),
                });
            }
        }
    }
    let complement: Vec<usize> = (0..m).filter(|mode| !modes.contains(mode)).collect();
    let comp_dims: Vec<usize> = complement.iter().map(|&mode| t.dims()[mode]).collect();
    let bound = tol * t.hs_norm();
    let mut comp_idx = vec![0usize; complement.len()];
    let mut merged = vec![0usize; m];
    loop {
        let mut total = Complex64::new(0.0, 0.0);
        for (label, coeff) in terms {
            merged.copy_from_slice(&label.indices);
            for (pos, &mode) in complement.iter().enumerate() {
                merged[mode] = comp_idx[pos];
            }
            total += *coeff * t.get(&merged);
        }
        if total.norm() > bound {
            return Ok(false);
        }
        if complement.is_empty() || !increment_index(&mut comp_idx, &comp_dims) {
            break;
        }
    }
    Ok(true)
}

/// Number of rows of the block system for mode `j`: the product of every
/// dimension except the first and the `j`th.
pub fn block_rows(dims: &[usize], j: usize) -> usize {
    dims.iter()
        .enumerate()
        .skip(1)
        .filter(|&(t, _)| t != j)
        .map(|(_, &n)| n)
        .product()
}

/// The assembled (and optionally solved) generating-polynomial systems of a
/// tensor at a target rank.
#[derive(Debug, Clone)]
pub struct GenPolySystem {
    dims: Vec<usize>,
    rank: usize,
    upsilon: Vec<(usize, usize)>,
    /// Coefficient matrix per mode `j >= 2`, indexed by `j - 2`.
    a_blocks: Vec<Array2<Complex64>>,
    /// Right-hand-side matrix per `upsilon` pair.
    b_blocks: Vec<Array2<Complex64>>,
    /// Solved blocks, parallel to `upsilon`; empty until `solve_blocks`.
    y_blocks: Vec<Array2<Complex64>>,
    /// Least-squares residual norms, parallel to `upsilon`.
    residuals: Vec<f64>,
}

impl GenPolySystem {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn upsilon(&self) -> &[(usize, usize)] {
        &self.upsilon
    }

    pub fn a_block(&self, j: usize) -> &Array2<Complex64> {
        &self.a_blocks[j - 2]
    }

    pub fn b_block(&self, pair_index: usize) -> &Array2<Complex64> {
        &self.b_blocks[pair_index]
    }

    pub fn is_solved(&self) -> bool {
        !self.y_blocks.is_empty()
    }

    pub fn y_block(&self, pair_index: usize) -> &Array2<Complex64> {
        &self.y_blocks[pair_index]
    }

    pub fn y_blocks(&self) -> &[Array2<Complex64>] {
        &self.y_blocks
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

/// Test-support constructor: a system in the solved state with given blocks.
#[cfg(test)]
pub(crate) fn synthetic_solved_system(
    dims: Vec<usize>,
    rank: usize,
    upsilon: Vec<(usize, usize)>,
    y_blocks: Vec<Array2<Complex64>>,
) -> GenPolySystem {
    GenPolySystem {
        dims,
        rank,
        upsilon,
        a_blocks: Vec::new(),
        b_blocks: y_blocks.clone(),
        y_blocks,
        residuals: Vec::new(),
    }
}

/// Assemble the coefficient and right-hand-side blocks by direct indexing.
/// Requires dimensions sorted descending, order at least 3, and
/// `r <= min(n_1, N_3)`.
pub fn build_system(t: &DenseTensor, r: usize) -> Result<GenPolySystem> {
    let dims = t.dims().to_vec();
    let m = dims.len();
    if m < 3 {
        return Err(Error::OrderTooSmall {
            order: m,
            context: "generating-polynomial systems need order at least 3",
        });
    }
    if dims.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::DimMismatch(format!(
            "dims must be sorted descending, got {dims:?}"
        )));
    }
    if r == 0 || r > dims[0] {
        return Err(Error::RankOutOfRange {
            rank: r,
            bound: format!("1 <= r <= n_1 = {}", dims[0]),
        });
    }
    let n3_rows = block_rows(&dims, 2);
    if r > n3_rows {
        return Err(Error::RankOutOfRange {
            rank: r,
            bound: format!("r <= N_3 = {n3_rows} (rows of the mode-2 block system)"),
        });
    }
    if dims[2] < 2 {
        return Err(Error::DimMismatch(
            "all modes beyond the second have dimension 1; no block systems exist".into(),
        ));
    }

    let mut upsilon = Vec::new();
    for (j, &n) in dims.iter().enumerate().skip(2) {
        for k in 1..n {
            upsilon.push((j, k));
        }
    }

    let mut a_blocks = Vec::with_capacity(m - 2);
    let mut b_blocks = Vec::with_capacity(upsilon.len());
    for j in 2..m {
        let free_modes: Vec<usize> = (1..m).filter(|&t| t != j).collect();
        let free_dims: Vec<usize> = free_modes.iter().map(|&t| dims[t]).collect();
        let rows = block_rows(&dims, j);
        let mut a = Array2::zeros((rows, r));
        let mut bs: Vec<Array2<Complex64>> = (1..dims[j]).map(|_| Array2::zeros((rows, r))).collect();
        let mut mu = vec![0usize; free_modes.len()];
        let mut idx = vec![0usize; m];
        let mut row = 0usize;
        loop {
            for (pos, &mode) in free_modes.iter().enumerate() {
                idx[mode] = mu[pos];
            }
            idx[j] = 0;
            for col in 0..r {
                idx[0] = col;
                a[(row, col)] = t.get(&idx);
            }
            for k in 1..dims[j] {
                idx[j] = k;
                for col in 0..r {
                    idx[0] = col;
                    bs[k - 1][(row, col)] = t.get(&idx);
                }
            }
            idx[j] = 0;
            row += 1;
            if free_modes.is_empty() || !increment_index(&mut mu, &free_dims) {
                break;
            }
        }
        a_blocks.push(a);
        b_blocks.extend(bs);
    }

    Ok(GenPolySystem {
        dims,
        rank: r,
        upsilon,
        a_blocks,
        b_blocks,
        y_blocks: Vec::new(),
        residuals: Vec::new(),
    })
}

/// Solve every block in least squares: `Y` transposed minimizes
/// `|| A (Y)^T - B ||`. Blocks are independent and solved in parallel; each
/// mode's coefficient matrix is factored once and must have full column
/// rank (checked at a relative threshold of 1e-10).
pub fn solve_blocks(sys: GenPolySystem) -> Result<GenPolySystem> {
    let mut sys = sys;
    let r = sys.rank;
    enum Solver {
        Qr(PivotedQr),
        Svd(Array2<Complex64>),
    }
    let mut solvers: Vec<Solver> = Vec::with_capacity(sys.a_blocks.len());
    for (offset, a) in sys.a_blocks.iter().enumerate() {
        let svals = singular_values(a)?;
        let num_rank = numerical_rank(&svals, 1e-10);
        if num_rank < r {
            return Err(Error::RankDeficientBlock {
                mode: offset + 2,
                numerical_rank: num_rank,
                required: r,
            });
        }
        let qr = PivotedQr::factor(a)?;
        if qr.cond_estimate() > QR_COND_LIMIT {
            solvers.push(Solver::Svd(a.clone()));
        } else {
            solvers.push(Solver::Qr(qr));
        }
    }

    let tasks: Vec<usize> = (0..sys.upsilon.len()).collect();
    let solved: Vec<Result<(Array2<Complex64>, f64)>> = {
        let sys_ref = &sys;
        let solvers_ref = &solvers;
        par_map(tasks, move |pair_index| {
            let (j, _) = sys_ref.upsilon[pair_index];
            let a = &sys_ref.a_blocks[j - 2];
            let b = &sys_ref.b_blocks[pair_index];
            let yt = match &solvers_ref[j - 2] {
                Solver::Qr(qr) => qr.solve(b)?,
                Solver::Svd(a) => svd_min_norm_solve(a, b, None)?,
            };
            let residual = crate::linalg::fro_norm(&(a.dot(&yt) - b));
            Ok((yt.t().to_owned(), residual))
        })
    };

    let mut y_blocks = Vec::with_capacity(solved.len());
    let mut residuals = Vec::with_capacity(solved.len());
    for item in solved {
        let (y, resid) = item?;
        y_blocks.push(y);
        residuals.push(resid);
    }
    sys.y_blocks = y_blocks;
    sys.residuals = residuals;
    Ok(sys)
}

/// Verify the eigenvector relation between the solved blocks and a known
/// decomposition: for every pair `(j, k)` and every column `s`, the first
/// `r` entries of the mode-0 column must be an eigenvector of the block with
/// eigenvalue equal to the normalized mode-`j` factor entry `k`. Returns
/// false when the decomposition violates the hypotheses (dependent leading
/// rows are not checked here, vanishing first entries are).
pub fn eigen_relation_check(sys: &GenPolySystem, cp: &CPDecomposition, tol: f64) -> bool {
    if !sys.is_solved() || cp.dims() != sys.dims || cp.rank() != sys.rank {
        return false;
    }
    let r = sys.rank;
    // Normalization: eigenvalues of the blocks are factor entries scaled to
    // first-entry-1 columns.
    for factor in cp.factors().iter().skip(2) {
        for s in 0..r {
            let col_norm: f64 = factor
                .column(s)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            if factor[(0, s)].norm() <= 1e-12 * col_norm {
                return false;
            }
        }
    }
    let normalized = cp.normalize_first_entries();
    for (pair_index, &(j, k)) in sys.upsilon.iter().enumerate() {
        let y = &sys.y_blocks[pair_index];
        for s in 0..r {
            let u1r: Array1<Complex64> = normalized.factors()[0]
                .column(s)
                .iter()
                .take(r)
                .cloned()
                .collect();
            let u1r_norm = u1r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let lambda = normalized.factors()[j][(k, s)];
            let lhs = y.dot(&u1r);
            let mut err = 0.0f64;
            for i in 0..r {
                err += (lhs[i] - lambda * u1r[i]).norm_sqr();
            }
            if err.sqrt() > tol * u1r_norm {
                return false;
            }
        }
    }
    true
}
