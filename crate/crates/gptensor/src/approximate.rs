//! Low-rank approximation: the generating-polynomial estimate, optional ALS
//! refinement, rank-1 approximation, and the reshaped variant.

use std::time::Instant;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::decompose::{
    descending_mode_permutation, inverse_permutation, run_pipeline_sorted, GpDiagnostics,
    DEFAULT_XI_REDRAWS,
};
use crate::error::{Error, Result};
use crate::linalg::{dominant_triple, fro_norm, khatri_rao, PivotedQr, QR_COND_LIMIT};
use crate::reshape::{choose_reshape_plan, reshape3};
use crate::tensor::{CPDecomposition, DenseTensor};

#[derive(Debug, Clone)]
pub struct ApproxOptions {
    pub seed: u64,
    /// Run ALS refinement after the generating-polynomial estimate.
    pub refine: bool,
    pub max_als_iters: usize,
    /// Stop ALS when the relative decrease of the squared residual falls
    /// below this.
    pub als_rel_tol: f64,
    /// Combination redraw budget on degenerate spectra.
    pub xi_redraws: usize,
    /// Try a safeguarded extrapolation after each ALS sweep; only iterates
    /// that lower the objective are accepted, so monotonicity is kept.
    pub als_line_search: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            refine: true,
            max_als_iters: 500,
            als_rel_tol: 1e-10,
            xi_redraws: DEFAULT_XI_REDRAWS,
            als_line_search: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlsStats {
    /// Full sweeps performed.
    pub sweeps: usize,
    /// Relative squared residual after each sweep; the first entry is the
    /// starting point's value.
    pub objective_trace: Vec<f64>,
    /// Solves that needed ridge re-regularization.
    pub ridge_solves: usize,
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub x_gp: CPDecomposition,
    pub x_opt: Option<CPDecomposition>,
    /// `|| F - expand(x_gp) ||`.
    pub resid_gp: f64,
    pub resid_opt: Option<f64>,
    pub als_iters: usize,
    pub als_ridge_solves: usize,
    pub t_gp_ms: f64,
    pub t_opt_ms: Option<f64>,
    /// Numerical health of the generating-polynomial phase.
    pub diagnostics: GpDiagnostics,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Rank-`r` approximation via least-squares generating blocks, one random
/// combination eigendecomposition, diagonal extraction, and two structured
/// least squares; optionally refined by ALS.
pub fn approximate(t: &DenseTensor, r: usize, opts: &ApproxOptions) -> Result<ApproxResult> {
    let start = Instant::now();
    let perm = descending_mode_permutation(t.dims());
    let t_sorted = t.permute_modes(&perm)?;
    let out = run_pipeline_sorted(&t_sorted, r, opts.seed, opts.xi_redraws)?;
    let x_gp = out
        .cp_sorted
        .permute_modes(&inverse_permutation(&perm))?
        .normalize_first_entries();
    let resid_gp = t.sub(&x_gp.expand())?.hs_norm();
    let t_gp_ms = elapsed_ms(start);
    finish_with_refine(t, x_gp, resid_gp, t_gp_ms, out.diagnostics, opts)
}

fn finish_with_refine(
    t: &DenseTensor,
    x_gp: CPDecomposition,
    resid_gp: f64,
    t_gp_ms: f64,
    diagnostics: GpDiagnostics,
    opts: &ApproxOptions,
) -> Result<ApproxResult> {
    let mut result = ApproxResult {
        x_gp,
        x_opt: None,
        resid_gp,
        resid_opt: None,
        als_iters: 0,
        als_ridge_solves: 0,
        t_gp_ms,
        t_opt_ms: None,
        diagnostics,
    };
    if opts.refine {
        let start = Instant::now();
        let (x_opt, stats) = refine_als(t, &result.x_gp, opts)?;
        result.resid_opt = Some(t.sub(&x_opt.expand())?.hs_norm());
        result.x_opt = Some(x_opt);
        result.als_iters = stats.sweeps;
        result.als_ridge_solves = stats.ridge_solves;
        result.t_opt_ms = Some(elapsed_ms(start));
    }
    Ok(result)
}

/// Alternating least squares on the nonlinear fit: cyclically re-solve each
/// factor against the Khatri-Rao product of the others. The squared
/// residual never increases across a sweep; rank-deficient inner solves are
/// re-regularized with a ridge of `1e-12` times the squared coefficient
/// norm and counted in the stats.
pub fn refine_als(
    t: &DenseTensor,
    init: &CPDecomposition,
    opts: &ApproxOptions,
) -> Result<(CPDecomposition, AlsStats)> {
    if init.dims() != t.dims() {
        return Err(Error::DimMismatch(format!(
            "initial decomposition dims {:?} do not match tensor dims {:?}",
            init.dims(),
            t.dims()
        )));
    }
    let m = t.order();
    let r = init.rank();
    let norm_sqr = {
        let n = t.hs_norm();
        n * n
    };
    let mut factors = init.factors().to_vec();
    let mut ridge_solves = 0usize;

    let objective = |factors: &[Array2<Complex64>]| -> f64 {
        let cp = CPDecomposition::new(factors.to_vec()).expect("shapes preserved");
        let resid = t.sub(&cp.expand()).expect("same dims").hs_norm();
        if norm_sqr > 0.0 {
            resid * resid / norm_sqr
        } else {
            0.0
        }
    };

    let mut trace = vec![objective(&factors)];
    if norm_sqr == 0.0 || r == 0 {
        let stats = AlsStats {
            sweeps: 0,
            objective_trace: trace,
            ridge_solves: 0,
        };
        return Ok((init.clone(), stats));
    }

    let unfoldings: Vec<Array2<Complex64>> = (0..m).map(|j| t.unfold(j)).collect();
    let mut sweeps = 0usize;
    while sweeps < opts.max_als_iters {
        let before_sweep = factors.clone();
        for j in 0..m {
            let views: Vec<_> = (0..m)
                .filter(|&other| other != j)
                .map(|other| factors[other].view())
                .collect();
            let kr = khatri_rao(&views);
            let rhs = unfoldings[j].t().to_owned();
            let qr = PivotedQr::factor(&kr)?;
            let solution = if qr.cond_estimate() > QR_COND_LIMIT {
                ridge_solves += 1;
                ridge_solve(&kr, &rhs)?
            } else {
                qr.solve(&rhs)?
            };
            factors[j] = solution.t().to_owned();
        }
        sweeps += 1;
        let mut obj = objective(&factors);
        if opts.als_line_search {
            // ALS progress in a swamp is a long sequence of tiny steps in a
            // consistent direction; extrapolating along the sweep step and
            // keeping only improvements shortens it without giving up the
            // descent guarantee.
            let sweep_result = factors.clone();
            for beta in [2.0, 4.0, 8.0, 16.0, 32.0] {
                let candidate: Vec<Array2<Complex64>> = sweep_result
                    .iter()
                    .zip(&before_sweep)
                    .map(|(new, old)| {
                        let mut c = new.clone();
                        c.scaled_add(Complex64::new(beta - 1.0, 0.0), &(new - old));
                        c
                    })
                    .collect();
                let cand_obj = objective(&candidate);
                if cand_obj < obj {
                    factors = candidate;
                    obj = cand_obj;
                } else {
                    break;
                }
            }
        }
        let prev = *trace.last().unwrap();
        trace.push(obj);
        let decrease = prev - obj;
        if decrease < opts.als_rel_tol * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }

    let cp = CPDecomposition::new(factors)?.normalize_first_entries();
    let stats = AlsStats {
        sweeps,
        objective_trace: trace,
        ridge_solves,
    };
    Ok((cp, stats))
}

/// Tikhonov-stabilized least squares via the augmented system
/// `[A; sqrt(lambda) I] X = [B; 0]` with `lambda = 1e-12 ||A||_F^2`.
fn ridge_solve(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let (m, n) = a.dim();
    let lambda = 1e-12 * fro_norm(a).powi(2);
    let mu = lambda.sqrt().max(f64::MIN_POSITIVE);
    let mut aug = Array2::zeros((m + n, n));
    for i in 0..m {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
    }
    for j in 0..n {
        aug[(m + j, j)] = Complex64::new(mu, 0.0);
    }
    let mut rhs = Array2::zeros((m + n, b.ncols()));
    for i in 0..m {
        for j in 0..b.ncols() {
            rhs[(i, j)] = b[(i, j)];
        }
    }
    PivotedQr::factor(&aug)?.solve(&rhs)
}

/// Best (or near-best) rank-1 approximation. Order-1 tensors are returned
/// as-is; order-2 uses the dominant singular triple, which is optimal;
/// higher orders run the rank-1 generating-polynomial estimate refined by
/// ALS.
pub fn rank1_approx(t: &DenseTensor) -> Result<CPDecomposition> {
    // Singleton modes carry no information; factor them out so the core
    // algorithm sees only genuine modes.
    let dims = t.dims().to_vec();
    let active: Vec<usize> = (0..dims.len()).filter(|&j| dims[j] > 1).collect();
    if t.hs_norm() == 0.0 {
        let factors = dims
            .iter()
            .map(|&n| Array2::zeros((n, 1)))
            .collect::<Vec<_>>();
        return CPDecomposition::new(factors);
    }
    if active.len() < dims.len() {
        let squeezed_dims: Vec<usize> = active.iter().map(|&j| dims[j]).collect();
        let squeezed = if squeezed_dims.is_empty() {
            DenseTensor::new(vec![1], t.data().to_vec())?
        } else {
            DenseTensor::new(squeezed_dims, t.data().to_vec())?
        };
        let inner = rank1_approx(&squeezed)?;
        let mut factors: Vec<Array2<Complex64>> = Vec::with_capacity(dims.len());
        let mut pos = 0usize;
        for (j, &n) in dims.iter().enumerate() {
            if active.contains(&j) {
                factors.push(inner.factors()[pos].clone());
                pos += 1;
            } else {
                factors.push(Array2::from_elem((n, 1), Complex64::new(1.0, 0.0)));
            }
        }
        // All the mass may sit in squeezed modes; fold any leftover scalar in.
        if active.is_empty() {
            factors[0] = Array2::from_elem((1, 1), t.data()[0]);
        }
        return CPDecomposition::new(factors);
    }
    match t.order() {
        1 => {
            let col = Array1::from_vec(t.data().to_vec()).insert_axis(ndarray::Axis(1));
            CPDecomposition::new(vec![col])
        }
        2 => {
            let (sigma, u, w) = dominant_triple(&t.as_matrix()?)?;
            let a = u.mapv(|z| z * sigma).insert_axis(ndarray::Axis(1));
            let b = w.insert_axis(ndarray::Axis(1));
            CPDecomposition::new(vec![a, b])
        }
        _ => {
            let opts = ApproxOptions {
                seed: 0,
                refine: true,
                ..ApproxOptions::default()
            };
            let result = approximate(t, 1, &opts)?;
            Ok(result.x_opt.unwrap_or(result.x_gp))
        }
    }
}

/// Rank-`r` approximation through an order-3 reshape: approximate the
/// grouped tensor, rank-1-approximate each grouped factor back into
/// per-mode vectors, and optionally refine the assembled order-m model
/// globally.
pub fn approximate_reshaped(
    t: &DenseTensor,
    r: usize,
    opts: &ApproxOptions,
) -> Result<ApproxResult> {
    let m = t.order();
    if m <= 3 {
        return Err(Error::OrderTooSmall {
            order: m,
            context: "reshaped approximation applies to order above 3",
        });
    }
    let start = Instant::now();
    let plan = choose_reshape_plan(t.dims(), r)?;
    let t3 = reshape3(t, &plan)?;
    let out = run_pipeline_sorted(&t3, r, opts.seed, opts.xi_redraws)?;
    let cp3 = out.cp_sorted;
    let dims = t.dims().to_vec();
    let mut factors: Vec<Array2<Complex64>> =
        dims.iter().map(|&n| Array2::zeros((n, r))).collect();
    for s in 0..r {
        for (block, group) in plan.groups.iter().enumerate() {
            let w = cp3.factors()[block].column(s).to_owned();
            let parts = split_rank1_best_effort(&w, group, &dims)?;
            for (pos, &mode) in group.iter().enumerate() {
                for i in 0..dims[mode] {
                    factors[mode][(i, s)] = parts[pos][i];
                }
            }
        }
    }
    let x_gp = CPDecomposition::new(factors)?.normalize_first_entries();
    let resid_gp = t.sub(&x_gp.expand())?.hs_norm();
    let t_gp_ms = elapsed_ms(start);
    finish_with_refine(t, x_gp, resid_gp, t_gp_ms, out.diagnostics, opts)
}

/// Rank-1 split of a grouped factor vector for the approximation path:
/// one mode passes through, two modes take the dominant singular triple,
/// three or more run the full rank-1 approximation.
fn split_rank1_best_effort(
    w: &Array1<Complex64>,
    group: &[usize],
    dims: &[usize],
) -> Result<Vec<Array1<Complex64>>> {
    match group.len() {
        1 => Ok(vec![w.clone()]),
        2 => {
            let (n0, n1) = (dims[group[0]], dims[group[1]]);
            let mat = Array2::from_shape_fn((n0, n1), |(i, j)| w[i * n1 + j]);
            let (sigma, u, v) = dominant_triple(&mat)?;
            Ok(vec![u.mapv(|z| z * sigma), v])
        }
        _ => {
            let group_dims: Vec<usize> = group.iter().map(|&mode| dims[mode]).collect();
            let tensor = DenseTensor::new(group_dims, w.to_vec())?;
            let cp1 = rank1_approx(&tensor)?;
            Ok(cp1
                .factors()
                .iter()
                .map(|f| f.column(0).to_owned())
                .collect())
        }
    }
}
