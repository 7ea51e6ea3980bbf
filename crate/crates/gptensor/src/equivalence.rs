//! Factor comparison up to the inherent CP ambiguities, and Kruskal ranks.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values};
use crate::tensor::CPDecomposition;

/// Exact Kruskal rank computation is limited to this many columns; subset
/// enumeration beyond that is too expensive to be a diagnostic.
pub const KRUSKAL_COLUMN_LIMIT: usize = 12;

const KRUSKAL_RANK_TOL: f64 = 1e-10;

/// Largest `k` such that every set of `k` columns is linearly independent
/// (numerical rank with a relative threshold of 1e-10).
pub fn kruskal_rank(a: &Array2<Complex64>) -> Result<usize> {
    let (rows, cols) = a.dim();
    if cols > KRUSKAL_COLUMN_LIMIT {
        return Err(Error::KruskalTooLarge {
            cols,
            limit: KRUSKAL_COLUMN_LIMIT,
        });
    }
    if cols == 0 {
        return Ok(0);
    }
    let max_k = rows.min(cols);
    for k in 1..=max_k {
        if !all_subsets_independent(a, k)? {
            return Ok(k - 1);
        }
    }
    Ok(max_k)
}

fn all_subsets_independent(a: &Array2<Complex64>, k: usize) -> Result<bool> {
    let cols = a.ncols();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let sub = Array2::from_shape_fn((a.nrows(), k), |(i, j)| a[(i, subset[j])]);
        let svals = singular_values(&sub)?;
        if numerical_rank(&svals, KRUSKAL_RANK_TOL) < k {
            return Ok(false);
        }
        // Next k-combination in lexicographic order.
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(true);
            }
            pos -= 1;
            if subset[pos] != cols - k + pos {
                break;
            }
        }
        if subset[pos] == cols - k + pos {
            return Ok(true);
        }
        subset[pos] += 1;
        for t in pos + 1..k {
            subset[t] = subset[t - 1] + 1;
        }
    }
}

/// Scale columns to a comparable form: for every mode past the first, divide
/// by the first entry (or the largest-modulus entry when the first entry is
/// below 1e-12 of the column norm) and absorb the scale into mode one.
fn canonical_for_compare(cp: &CPDecomposition) -> CPDecomposition {
    let mut factors = cp.factors().to_vec();
    let m = factors.len();
    for s in 0..cp.rank() {
        let mut scale = Complex64::new(1.0, 0.0);
        for factor in factors.iter_mut().take(m).skip(1) {
            let col_norm: f64 = factor
                .column(s)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            if col_norm == 0.0 {
                continue;
            }
            let mut pivot = factor[(0, s)];
            if pivot.norm() <= 1e-12 * col_norm {
                let mut best = 0;
                for i in 1..factor.nrows() {
                    if factor[(i, s)].norm() > factor[(best, s)].norm() {
                        best = i;
                    }
                }
                pivot = factor[(best, s)];
            }
            for i in 0..factor.nrows() {
                factor[(i, s)] /= pivot;
            }
            scale *= pivot;
        }
        for i in 0..factors[0].nrows() {
            factors[0][(i, s)] *= scale;
        }
    }
    CPDecomposition::new(factors).expect("same shapes")
}

fn columns_match(a: &CPDecomposition, b: &CPDecomposition, s: usize, t: usize, tol: f64) -> bool {
    for j in 0..a.order() {
        let fa = &a.factors()[j];
        let fb = &b.factors()[j];
        for i in 0..fa.nrows() {
            let (x, y) = (fa[(i, s)], fb[(i, t)]);
            if (x - y).norm() > tol * (1.0 + x.norm().max(y.norm())) {
                return false;
            }
        }
    }
    true
}

/// Whether two decompositions agree up to column permutation and the
/// per-column scaling ambiguity, entrywise within `tol` (relative, with an
/// absolute floor of `tol` for small entries).
pub fn cp_equivalent(a: &CPDecomposition, b: &CPDecomposition, tol: f64) -> bool {
    if a.rank() != b.rank() || a.dims() != b.dims() {
        return false;
    }
    let r = a.rank();
    if r == 0 {
        return true;
    }
    let ca = canonical_for_compare(a);
    let cb = canonical_for_compare(b);
    // Bipartite matching between compatible column pairs.
    let mut adjacency: Vec<Vec<usize>> = Vec::with_capacity(r);
    for s in 0..r {
        let row: Vec<usize> = (0..r)
            .filter(|&t| columns_match(&ca, &cb, s, t, tol))
            .collect();
        if row.is_empty() {
            return false;
        }
        adjacency.push(row);
    }
    let mut matched_to: Vec<Option<usize>> = vec![None; r];
    for s in 0..r {
        let mut visited = vec![false; r];
        if !augment(s, &adjacency, &mut matched_to, &mut visited) {
            return false;
        }
    }
    true
}

fn augment(
    s: usize,
    adjacency: &[Vec<usize>],
    matched_to: &mut Vec<Option<usize>>,
    visited: &mut Vec<bool>,
) -> bool {
    for &t in &adjacency[s] {
        if visited[t] {
            continue;
        }
        visited[t] = true;
        if matched_to[t].is_none() || augment(matched_to[t].unwrap(), adjacency, matched_to, visited)
        {
            matched_to[t] = Some(s);
            return true;
        }
    }
    false
}
