//! Flattening (matricization) and flattening-based rank estimation.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values};
use crate::tensor::{increment_index, DenseTensor};

/// A two-block partition of the modes, chosen to make the flattening matrix
/// as square as possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlattenPlan {
    pub group1: Vec<usize>,
    pub group2: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
}

/// Flattening matrix for an explicit mode partition: the row index is the
/// row-major linearization of the `group1` indices (ascending mode order),
/// the column index likewise over `group2`.
pub fn flatten(t: &DenseTensor, group1: &[usize], group2: &[usize]) -> Result<Array2<Complex64>> {
    let m = t.order();
    let mut seen = vec![false; m];
    for &g in group1.iter().chain(group2) {
        if g >= m || std::mem::replace(&mut seen[g], true) {
            return Err(Error::InvalidModePartition {
                groups: vec![group1.to_vec(), group2.to_vec()],
                order: m,
            });
        }
    }
    if seen.iter().any(|&s| !s) || group1.is_empty() || group2.is_empty() {
        return Err(Error::InvalidModePartition {
            groups: vec![group1.to_vec(), group2.to_vec()],
            order: m,
        });
    }
    let rows: usize = group1.iter().map(|&g| t.dims()[g]).product();
    let cols: usize = group2.iter().map(|&g| t.dims()[g]).product();
    let mut out = Array2::zeros((rows, cols));
    let dims = t.dims().to_vec();
    let mut idx = vec![0usize; m];
    let mut flat = 0usize;
    loop {
        let mut r = 0usize;
        for &g in group1 {
            r = r * dims[g] + idx[g];
        }
        let mut c = 0usize;
        for &g in group2 {
            c = c * dims[g] + idx[g];
        }
        out[(r, c)] = t.data()[flat];
        flat += 1;
        if !increment_index(&mut idx, &dims) {
            break;
        }
    }
    Ok(out)
}

/// The most square flattening: over all two-block partitions, minimize
/// `|rows - cols|`. Ties pick the lexicographically smallest `group1`
/// containing mode 0, so the result is deterministic.
pub fn most_square_flatten(t: &DenseTensor) -> Result<(FlattenPlan, Array2<Complex64>)> {
    let m = t.order();
    if m < 2 {
        return Err(Error::OrderTooSmall {
            order: m,
            context: "flattening needs at least two modes",
        });
    }
    let dims = t.dims();
    let mut best: Option<(i64, Vec<usize>)> = None;
    // Canonical orientation: group1 always contains mode 0.
    for mask in 0..(1u32 << (m - 1)) {
        let mut group1 = vec![0usize];
        for j in 1..m {
            if mask & (1 << (j - 1)) != 0 {
                group1.push(j);
            }
        }
        if group1.len() == m {
            continue;
        }
        let rows: usize = group1.iter().map(|&g| dims[g]).product();
        let cols: usize = t.len() / rows;
        let gap = (rows as i64 - cols as i64).abs();
        let better = match &best {
            None => true,
            Some((best_gap, best_group)) => {
                gap < *best_gap || (gap == *best_gap && group1 < *best_group)
            }
        };
        if better {
            best = Some((gap, group1));
        }
    }
    let (_, group1) = best.expect("m >= 2 guarantees a partition");
    let group2: Vec<usize> = (0..m).filter(|j| !group1.contains(j)).collect();
    let rows: usize = group1.iter().map(|&g| dims[g]).product();
    let cols: usize = group2.iter().map(|&g| dims[g]).product();
    let matrix = flatten(t, &group1, &group2)?;
    Ok((
        FlattenPlan {
            group1,
            group2,
            rows,
            cols,
        },
        matrix,
    ))
}

/// Rank estimate: the number of singular values of the most square
/// flattening above `rel_tol` times the largest. Returns 0 for the zero
/// tensor; an order-1 tensor reports 1 when nonzero.
pub fn estimate_rank(t: &DenseTensor, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidTolerance {
            value: rel_tol,
            context: "rank threshold must lie in (0, 1)",
        });
    }
    if t.hs_norm() == 0.0 {
        return Ok(0);
    }
    if t.order() == 1 {
        return Ok(1);
    }
    let (_, matrix) = most_square_flatten(t)?;
    let svals = singular_values(&matrix)?;
    Ok(numerical_rank(&svals, rel_tol))
}
