//! Dense complex tensors and CP (canonical polyadic) decompositions.
//!
//! Storage is row-major throughout: the last index varies fastest, and every
//! grouped or linearized index in the crate follows the same convention.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::linalg::kron_chain;

/// Dense tensor of order `m` with complex double entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

/// Advance a row-major multi-index; returns false after the last index.
pub(crate) fn increment_index(idx: &mut [usize], dims: &[usize]) -> bool {
    for j in (0..dims.len()).rev() {
        idx[j] += 1;
        if idx[j] < dims[j] {
            return true;
        }
        idx[j] = 0;
    }
    false
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&n| n == 0) {
            return Err(Error::DimMismatch(format!(
                "dims must be nonempty positive integers, got {dims:?}"
            )));
        }
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::DimMismatch(format!(
                "data length {} does not match dims product {expected}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len: usize = dims.iter().product();
        Self::new(dims, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_real(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(dims, data.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    }

    /// Build from a function of the (0-based) multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Result<Self> {
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        loop {
            data.push(f(&idx));
            if !increment_index(&mut idx, &dims) {
                break;
            }
        }
        Self::new(dims, data)
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Row-major flat offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (j, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[j]);
            off = off * self.dims[j] + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Complex64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    /// Hilbert-Schmidt norm: square root of the sum of squared entry moduli.
    /// The sum is accumulated exactly, so any reordering of the entries
    /// (e.g. a reshape) leaves the norm bit-identical.
    pub fn hs_norm(&self) -> f64 {
        let mut acc = ExactSum::new();
        for z in &self.data {
            acc.add(z.re * z.re);
            acc.add(z.im * z.im);
        }
        acc.value().sqrt()
    }

    /// Matrix-tensor product on one mode: every mode-`mode` fiber is
    /// multiplied by `v`, replacing that dimension with `v.nrows()`.
    pub fn mode_product(&self, v: &Array2<Complex64>, mode: usize) -> Result<DenseTensor> {
        if mode >= self.order() {
            return Err(Error::DimMismatch(format!(
                "mode {mode} out of range for order {}",
                self.order()
            )));
        }
        if v.ncols() != self.dims[mode] {
            return Err(Error::DimMismatch(format!(
                "matrix has {} columns but mode {mode} has dimension {}",
                v.ncols(),
                self.dims[mode]
            )));
        }
        let outer: usize = self.dims[..mode].iter().product();
        let inner: usize = self.dims[mode + 1..].iter().product();
        let n_old = self.dims[mode];
        let n_new = v.nrows();
        let mut dims = self.dims.clone();
        dims[mode] = n_new;
        let mut data = vec![Complex64::new(0.0, 0.0); outer * n_new * inner];
        for o in 0..outer {
            for p in 0..n_new {
                for q in 0..n_old {
                    let coeff = v[(p, q)];
                    if coeff == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let src_base = (o * n_old + q) * inner;
                    let dst_base = (o * n_new + p) * inner;
                    for i in 0..inner {
                        data[dst_base + i] += coeff * self.data[src_base + i];
                    }
                }
            }
        }
        DenseTensor::new(dims, data)
    }

    /// Reorder modes: output axis `k` is input axis `perm[k]`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<DenseTensor> {
        let m = self.order();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::DimMismatch(format!(
                "{perm:?} is not a permutation of 0..{m}"
            )));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut out = DenseTensor::zeros(dims.clone())?;
        let mut out_idx = vec![0usize; m];
        let mut src_idx = vec![0usize; m];
        let mut flat = 0usize;
        loop {
            for k in 0..m {
                src_idx[perm[k]] = out_idx[k];
            }
            out.data[flat] = self.data[self.offset(&src_idx)];
            flat += 1;
            if !increment_index(&mut out_idx, &dims) {
                break;
            }
        }
        Ok(out)
    }

    /// Contiguous sub-tensor over a range of the first mode.
    pub fn slice_mode0(&self, lo: usize, hi: usize) -> Result<DenseTensor> {
        if lo >= hi || hi > self.dims[0] {
            return Err(Error::DimMismatch(format!(
                "mode-0 range {lo}..{hi} invalid for dimension {}",
                self.dims[0]
            )));
        }
        let inner: usize = self.dims[1..].iter().product();
        let mut dims = self.dims.clone();
        dims[0] = hi - lo;
        DenseTensor::new(dims, self.data[lo * inner..hi * inner].to_vec())
    }

    /// Mode-`mode` unfolding: rows indexed by the mode, columns by the
    /// row-major linearization of the remaining modes in ascending order.
    pub fn unfold(&self, mode: usize) -> Array2<Complex64> {
        let n = self.dims[mode];
        let rest: usize = self.len() / n;
        let mut out = Array2::zeros((n, rest));
        let m = self.order();
        let rest_dims: Vec<usize> = (0..m).filter(|&j| j != mode).map(|j| self.dims[j]).collect();
        let mut idx = vec![0usize; m];
        let mut rest_idx = vec![0usize; m - 1];
        loop {
            let mut col = 0usize;
            let mut t = 0;
            for j in 0..m {
                if j != mode {
                    rest_idx[t] = idx[j];
                    col = col * rest_dims[t] + idx[j];
                    t += 1;
                }
            }
            out[(idx[mode], col)] = self.data[self.offset(&idx)];
            if !increment_index(&mut idx, &self.dims) {
                break;
            }
        }
        out
    }

    /// Order-2 tensor as a matrix.
    pub fn as_matrix(&self) -> Result<Array2<Complex64>> {
        if self.order() != 2 {
            return Err(Error::OrderTooSmall {
                order: self.order(),
                context: "as_matrix needs an order-2 tensor",
            });
        }
        Ok(Array2::from_shape_fn((self.dims[0], self.dims[1]), |(i, j)| {
            self.data[i * self.dims[1] + j]
        }))
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &DenseTensor,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        DenseTensor::new(self.dims.clone(), data)
    }
}

/// CP decomposition: rank `r` and one `n_j x r` factor matrix per mode.
#[derive(Debug, Clone)]
pub struct CPDecomposition {
    rank: usize,
    factors: Vec<Array2<Complex64>>,
}

impl CPDecomposition {
    pub fn new(factors: Vec<Array2<Complex64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::DimMismatch("no factor matrices".into()));
        }
        let rank = factors[0].ncols();
        for (j, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::DimMismatch(format!(
                    "factor {j} has {} columns, expected rank {rank}",
                    f.ncols()
                )));
            }
            if f.nrows() == 0 {
                return Err(Error::DimMismatch(format!("factor {j} has zero rows")));
            }
        }
        Ok(Self { rank, factors })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn factors(&self) -> &[Array2<Complex64>] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [Array2<Complex64>] {
        &mut self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Column `s` of every factor, as owned vectors.
    pub fn column(&self, s: usize) -> Vec<Array1<Complex64>> {
        self.factors.iter().map(|f| f.column(s).to_owned()).collect()
    }

    /// Evaluate the CP model as a dense tensor: entry `(i_1, ..., i_m)` is
    /// the sum over `s` of the products of factor entries.
    pub fn expand(&self) -> DenseTensor {
        let dims = self.dims();
        let len: usize = dims.iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); len];
        for s in 0..self.rank {
            let cols: Vec<Array1<Complex64>> = self.column(s);
            let term = kron_chain(&cols);
            for (d, t) in data.iter_mut().zip(term.iter()) {
                *d += *t;
            }
        }
        DenseTensor::new(dims, data).expect("factor dims are valid")
    }

    /// Reorder modes: output factor `k` is input factor `perm[k]`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<CPDecomposition> {
        let m = self.order();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::DimMismatch(format!(
                "{perm:?} is not a permutation of 0..{m}"
            )));
        }
        let factors = perm.iter().map(|&p| self.factors[p].clone()).collect();
        CPDecomposition::new(factors)
    }

    /// Scale columns so that every mode except the first has first entry 1,
    /// absorbing the scale into the first mode. Columns whose first entry is
    /// below `1e-12` of the column norm are left untouched.
    pub fn normalize_first_entries(&self) -> CPDecomposition {
        let mut factors = self.factors.clone();
        let m = factors.len();
        for s in 0..self.rank {
            let mut scale = Complex64::new(1.0, 0.0);
            for factor in factors.iter_mut().take(m).skip(1) {
                let col_norm: f64 = factor
                    .column(s)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let pivot = factor[(0, s)];
                if pivot.norm() > 1e-12 * col_norm {
                    for i in 0..factor.nrows() {
                        factor[(i, s)] /= pivot;
                    }
                    scale *= pivot;
                }
            }
            for i in 0..factors[0].nrows() {
                factors[0][(i, s)] *= scale;
            }
        }
        CPDecomposition {
            rank: self.rank,
            factors,
        }
    }
}
