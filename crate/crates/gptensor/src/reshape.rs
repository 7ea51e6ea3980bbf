//! Grouping an order-m tensor into an order-3 tensor and back.
//!
//! A plan partitions the modes into three blocks; each block's indices are
//! linearized row-major (ascending mode order), which matches the Kronecker
//! product convention for the grouped factor vectors. The plan also carries
//! the largest rank for which the reshaped decomposition is generically
//! unique.

use crate::error::{Error, Result};
use crate::tensor::{increment_index, DenseTensor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReshapePlan {
    /// Mode blocks, ascending within each block, ordered so the dimension
    /// products are descending.
    pub groups: [Vec<usize>; 3],
    /// Products `p1 >= p2 >= p3` of the block dimensions.
    pub dim_products: [usize; 3],
    /// `p2 + p3 - p1 - 2`.
    pub delta: i64,
    /// `p1 + min(floor(delta / 2), delta)`: the largest rank with a
    /// generically unique reshaped decomposition.
    pub max_unique_rank: usize,
}

impl ReshapePlan {
    /// Build a plan from an explicit partition of `0..dims.len()` into three
    /// nonempty blocks. Blocks are reordered by descending dimension product
    /// (ties by smallest leading mode).
    pub fn from_groups(dims: &[usize], groups: [Vec<usize>; 3]) -> Result<ReshapePlan> {
        let m = dims.len();
        let mut seen = vec![false; m];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidModePartition {
                    groups: groups.to_vec(),
                    order: m,
                });
            }
            for &mode in g {
                if mode >= m || std::mem::replace(&mut seen[mode], true) {
                    return Err(Error::InvalidModePartition {
                        groups: groups.to_vec(),
                        order: m,
                    });
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidModePartition {
                groups: groups.to_vec(),
                order: m,
            });
        }
        let mut sorted: Vec<Vec<usize>> = groups.to_vec();
        for g in &mut sorted {
            g.sort_unstable();
        }
        sorted.sort_by_key(|g| {
            let p: usize = g.iter().map(|&j| dims[j]).product();
            (std::cmp::Reverse(p), g[0])
        });
        let products: Vec<usize> = sorted
            .iter()
            .map(|g| g.iter().map(|&j| dims[j]).product())
            .collect();
        let (p1, p2, p3) = (products[0] as i64, products[1] as i64, products[2] as i64);
        let delta = p2 + p3 - p1 - 2;
        let max_unique_rank = (p1 + delta.div_euclid(2).min(delta)).max(0) as usize;
        Ok(ReshapePlan {
            groups: [sorted[0].clone(), sorted[1].clone(), sorted[2].clone()],
            dim_products: [products[0], products[1], products[2]],
            delta,
            max_unique_rank,
        })
    }

    /// Whether a rank-`r` decomposition can be computed and converted back
    /// through this plan: the uniqueness bound must cover `r`, and the
    /// order-3 algorithm needs `r` at most the second dimension product.
    pub fn supports_rank(&self, r: usize) -> bool {
        r <= self.max_unique_rank && r <= self.dim_products[1]
    }
}

/// Pick a reshape plan for the given rank: enumerate all three-block
/// partitions, keep those that support `r`, and prefer the largest
/// `max_unique_rank` (ties by lexicographic block list).
pub fn choose_reshape_plan(dims: &[usize], r: usize) -> Result<ReshapePlan> {
    let m = dims.len();
    if m < 3 {
        return Err(Error::OrderTooSmall {
            order: m,
            context: "reshaping needs at least three modes",
        });
    }
    let mut best: Option<ReshapePlan> = None;
    // Canonical set-partition enumeration: mode 0 is always in block 0, and
    // a mode may open block b only after block b-1 is nonempty.
    let mut labels = vec![0usize; m];
    enumerate_partitions(&mut labels, 1, 1, &mut |labels| {
        let mut groups: [Vec<usize>; 3] = [vec![], vec![], vec![]];
        for (mode, &b) in labels.iter().enumerate() {
            groups[b].push(mode);
        }
        if groups.iter().any(|g| g.is_empty()) {
            return;
        }
        let plan = ReshapePlan::from_groups(dims, groups).expect("enumerated partition is valid");
        if !plan.supports_rank(r) {
            return;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                plan.max_unique_rank > b.max_unique_rank
                    || (plan.max_unique_rank == b.max_unique_rank && plan.groups < b.groups)
            }
        };
        if better {
            best = Some(plan);
        }
    });
    best.ok_or(Error::RankTooLargeForReshape {
        rank: r,
        dims: dims.to_vec(),
    })
}

fn enumerate_partitions(
    labels: &mut Vec<usize>,
    mode: usize,
    used: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if mode == labels.len() {
        visit(labels);
        return;
    }
    for b in 0..used.min(3) {
        labels[mode] = b;
        enumerate_partitions(labels, mode + 1, used, visit);
    }
    if used < 3 {
        labels[mode] = used;
        enumerate_partitions(labels, mode + 1, used + 1, visit);
    }
}

/// Regroup the tensor per the plan into an order-3 tensor of dimensions
/// `(p1, p2, p3)`. Entrywise bijective.
pub fn reshape3(t: &DenseTensor, plan: &ReshapePlan) -> Result<DenseTensor> {
    validate_plan(t, plan)?;
    let dims = t.dims().to_vec();
    let out_dims = plan.dim_products.to_vec();
    let mut out = DenseTensor::zeros(out_dims)?;
    let mut idx = vec![0usize; dims.len()];
    let mut flat = 0usize;
    loop {
        let mut grouped = [0usize; 3];
        for (b, group) in plan.groups.iter().enumerate() {
            let mut lin = 0usize;
            for &mode in group {
                lin = lin * dims[mode] + idx[mode];
            }
            grouped[b] = lin;
        }
        out.set(&grouped, t.data()[flat]);
        flat += 1;
        if !increment_index(&mut idx, &dims) {
            break;
        }
    }
    Ok(out)
}

/// Inverse of [`reshape3`]: scatter the order-3 entries back into the
/// original shape.
pub fn reshape3_inverse(
    t3: &DenseTensor,
    plan: &ReshapePlan,
    dims: &[usize],
) -> Result<DenseTensor> {
    if t3.dims() != plan.dim_products {
        return Err(Error::DimMismatch(format!(
            "order-3 dims {:?} do not match plan products {:?}",
            t3.dims(),
            plan.dim_products
        )));
    }
    let mut out = DenseTensor::zeros(dims.to_vec())?;
    let mut idx = vec![0usize; dims.len()];
    let mut flat = 0usize;
    let out_dims = dims.to_vec();
    loop {
        let mut grouped = [0usize; 3];
        for (b, group) in plan.groups.iter().enumerate() {
            let mut lin = 0usize;
            for &mode in group {
                lin = lin * dims[mode] + idx[mode];
            }
            grouped[b] = lin;
        }
        out.data_mut()[flat] = t3.get(&grouped);
        flat += 1;
        if !increment_index(&mut idx, &out_dims) {
            break;
        }
    }
    Ok(out)
}

fn validate_plan(t: &DenseTensor, plan: &ReshapePlan) -> Result<()> {
    let m = t.order();
    let mut seen = vec![false; m];
    for g in &plan.groups {
        for &mode in g {
            if mode >= m || std::mem::replace(&mut seen[mode], true) {
                return Err(Error::InvalidModePartition {
                    groups: plan.groups.to_vec(),
                    order: m,
                });
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::InvalidModePartition {
            groups: plan.groups.to_vec(),
            order: m,
        });
    }
    for (b, g) in plan.groups.iter().enumerate() {
        let p: usize = g.iter().map(|&j| t.dims()[j]).product();
        if p != plan.dim_products[b] {
            return Err(Error::DimMismatch(format!(
                "plan product {} does not match dims for block {b}",
                plan.dim_products[b]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron_vec;
    use crate::rng::SeededRng;
    use crate::tensor::CPDecomposition;
    use ndarray::{Array1, Array2};
    use num_complex::Complex64;

    fn random_vec(rng: &mut SeededRng, n: usize) -> Array1<Complex64> {
        Array1::from_shape_fn(n, |_| rng.complex_normal())
    }

    /// Exhaustive oracle over all three-block partitions.
    fn best_unique_rank_oracle(dims: &[usize]) -> usize {
        let m = dims.len();
        let mut best = 0usize;
        let mut labels = vec![0usize; m];
        enumerate_partitions(&mut labels, 1, 1, &mut |labels| {
            let mut groups: [Vec<usize>; 3] = [vec![], vec![], vec![]];
            for (mode, &b) in labels.iter().enumerate() {
                groups[b].push(mode);
            }
            if groups.iter().any(|g| g.is_empty()) {
                return;
            }
            let plan = ReshapePlan::from_groups(dims, groups).unwrap();
            best = best.max(plan.max_unique_rank);
        });
        best
    }

    #[test]
    fn identity_reshape_on_cubic() {
        let mut rng = SeededRng::new(3);
        let t = DenseTensor::from_fn(vec![2, 2, 2], |_| rng.complex_normal()).unwrap();
        let plan = ReshapePlan::from_groups(&[2, 2, 2], [vec![0], vec![1], vec![2]]).unwrap();
        let r = reshape3(&t, &plan).unwrap();
        assert_eq!(r, t);
    }

    #[test]
    fn rank1_reshape_matches_kronecker_oracle() {
        let mut rng = SeededRng::new(7);
        let (a, b, c, d) = (
            random_vec(&mut rng, 2),
            random_vec(&mut rng, 3),
            random_vec(&mut rng, 2),
            random_vec(&mut rng, 2),
        );
        let cp = CPDecomposition::new(vec![
            a.clone().insert_axis(ndarray::Axis(1)),
            b.clone().insert_axis(ndarray::Axis(1)),
            c.clone().insert_axis(ndarray::Axis(1)),
            d.clone().insert_axis(ndarray::Axis(1)),
        ])
        .unwrap();
        let t = cp.expand();
        let plan =
            ReshapePlan::from_groups(&[2, 3, 2, 2], [vec![0, 1], vec![2], vec![3]]).unwrap();
        let t3 = reshape3(&t, &plan).unwrap();
        // Oracle: order-3 rank-1 tensor with the grouped Kronecker vector.
        let ab = kron_vec(&a, &b);
        let cp3 = CPDecomposition::new(vec![
            ab.insert_axis(ndarray::Axis(1)),
            c.insert_axis(ndarray::Axis(1)),
            d.insert_axis(ndarray::Axis(1)),
        ])
        .unwrap();
        let want = cp3.expand();
        assert!(t3.sub(&want).unwrap().hs_norm() < 1e-12 * want.hs_norm());
    }

    #[test]
    fn reshape_preserves_entry_multiset_and_norm() {
        let t = crate::reference::order4_rank5();
        let plan =
            ReshapePlan::from_groups(&[5, 4, 3, 3], [vec![0, 3], vec![1], vec![2]]).unwrap();
        let t3 = reshape3(&t, &plan).unwrap();
        let mut a: Vec<(f64, f64)> = t.data().iter().map(|z| (z.re, z.im)).collect();
        let mut b: Vec<(f64, f64)> = t3.data().iter().map(|z| (z.re, z.im)).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
        // Exact-summation norm is bit-identical under the permutation.
        assert_eq!(t.hs_norm().to_bits(), t3.hs_norm().to_bits());
        // Round trip restores the input exactly.
        let back = reshape3_inverse(&t3, &plan, t.dims()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn plan_quantities_for_5x4x3x3() {
        let plan = choose_reshape_plan(&[5, 4, 3, 3], 5).unwrap();
        let [p1, p2, p3] = plan.dim_products;
        assert!(p1 >= p2 && p2 >= p3);
        assert!(plan.max_unique_rank >= 5);
        assert!(plan.supports_rank(5));
        assert_eq!(plan.max_unique_rank, best_unique_rank_oracle(&[5, 4, 3, 3]));
        assert_eq!(plan.delta, p2 as i64 + p3 as i64 - p1 as i64 - 2);
    }

    #[test]
    fn rank_too_large_for_tiny_tensor() {
        assert!(matches!(
            choose_reshape_plan(&[2, 2, 2], 100),
            Err(Error::RankTooLargeForReshape { .. })
        ));
    }

    #[test]
    fn table_scale_order5_plan_exists() {
        let plan = choose_reshape_plan(&[20, 20, 20, 20, 10], 24).unwrap();
        assert!(plan.max_unique_rank >= 24);
        assert!(plan.supports_rank(24));
    }

    #[test]
    fn invalid_partition_rejected() {
        let t = DenseTensor::zeros(vec![2, 2, 2, 2]).unwrap();
        let bad = ReshapePlan {
            groups: [vec![0], vec![1], vec![2]],
            dim_products: [2, 2, 2],
            delta: 0,
            max_unique_rank: 2,
        };
        assert!(matches!(
            reshape3(&t, &bad),
            Err(Error::InvalidModePartition { .. })
        ));
        assert!(ReshapePlan::from_groups(&[2, 2, 2], [vec![0], vec![1], vec![]]).is_err());
        assert!(
            ReshapePlan::from_groups(&[2, 2, 2, 2], [vec![0, 1], vec![1, 2], vec![3]]).is_err()
        );
    }

    #[test]
    fn grouped_factor_expand_commutes_with_reshape() {
        // expand(grouped rank-1 factors) equals reshape3(expand(original)).
        let mut rng = SeededRng::new(41);
        let dims = [3usize, 2, 2, 3];
        let r = 2;
        let factors: Vec<Array2<Complex64>> = dims
            .iter()
            .map(|&n| Array2::from_shape_fn((n, r), |_| rng.complex_normal()))
            .collect();
        let cp = CPDecomposition::new(factors.clone()).unwrap();
        let plan = ReshapePlan::from_groups(&dims, [vec![0, 2], vec![1], vec![3]]).unwrap();
        let lhs = reshape3(&cp.expand(), &plan).unwrap();
        // Grouped factors: Kronecker chains per block, in block order.
        let mut grouped: Vec<Array2<Complex64>> = Vec::new();
        for g in &plan.groups {
            let rows: usize = g.iter().map(|&j| dims[j]).product();
            let mut mat = Array2::zeros((rows, r));
            for s in 0..r {
                let chain: Vec<Array1<Complex64>> =
                    g.iter().map(|&j| factors[j].column(s).to_owned()).collect();
                let v = crate::linalg::kron_chain(&chain);
                for i in 0..rows {
                    mat[(i, s)] = v[i];
                }
            }
            grouped.push(mat);
        }
        let rhs = CPDecomposition::new(grouped).unwrap().expand();
        let rel = lhs.sub(&rhs).unwrap().hs_norm() / rhs.hs_norm();
        assert!(rel < 1e-12, "rel {rel}");
    }
}
