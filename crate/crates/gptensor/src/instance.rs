//! Seeded perturbation instances: a planted low-rank ground truth plus
//! Gaussian noise of prescribed norm.

use ndarray::Array2;
use num_complex::Complex64;

use crate::rng::SeededRng;
use crate::tensor::{CPDecomposition, DenseTensor};

/// A planted instance: ground truth `R = expand(factors)`, noise `E` with
/// `||E|| = epsilon`, and the observed tensor `F = R + E`. The stored noise
/// is recomputed as `F - R` entrywise, so that identity holds exactly in
/// floating point.
#[derive(Debug, Clone)]
pub struct PerturbationInstance {
    pub ground_truth: CPDecomposition,
    pub r_tensor: DenseTensor,
    pub noise: DenseTensor,
    pub observed: DenseTensor,
    pub epsilon: f64,
    pub seed: u64,
    pub r_true: usize,
}

/// Generate a deterministic instance: factor entries have independent
/// standard-Gaussian real and imaginary parts, the noise tensor likewise and
/// is rescaled to norm `epsilon` (zero noise when `epsilon` is zero).
pub fn gen_instance(dims: &[usize], r: usize, epsilon: f64, seed: u64) -> PerturbationInstance {
    let mut rng = SeededRng::new(seed);
    let factors: Vec<Array2<Complex64>> = dims
        .iter()
        .map(|&n| Array2::from_shape_fn((n, r), |_| rng.complex_normal()))
        .collect();
    let ground_truth = CPDecomposition::new(factors).expect("generated shapes are consistent");
    let r_tensor = ground_truth.expand();
    let observed = if epsilon == 0.0 {
        r_tensor.clone()
    } else {
        let mut raw = DenseTensor::from_fn(dims.to_vec(), |_| rng.complex_normal())
            .expect("dims validated by expand");
        let norm = raw.hs_norm();
        let scale = epsilon / norm;
        for z in raw.data_mut() {
            *z *= scale;
        }
        r_tensor.add(&raw).expect("same dims")
    };
    let noise = observed.sub(&r_tensor).expect("same dims");
    PerturbationInstance {
        ground_truth,
        r_tensor,
        noise,
        observed,
        epsilon,
        seed,
        r_true: r,
    }
}

/// Residual of a candidate model against a tensor, absolute and normalized
/// by a noise norm: returns `(resid / e_norm, resid)`.
pub fn relative_errors(f: &DenseTensor, x: &CPDecomposition, e_norm: f64) -> (f64, f64) {
    let resid = f
        .sub(&x.expand())
        .expect("model dims must match tensor dims")
        .hs_norm();
    (resid / e_norm, resid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epsilon_means_exact() {
        let inst = gen_instance(&[4, 3, 3], 2, 0.0, 5);
        assert_eq!(inst.observed, inst.r_tensor);
        assert_eq!(inst.noise.hs_norm(), 0.0);
    }

    #[test]
    fn same_seed_bit_identical() {
        let a = gen_instance(&[5, 4, 3], 3, 1e-3, 42);
        let b = gen_instance(&[5, 4, 3], 3, 1e-3, 42);
        assert_eq!(a.observed, b.observed);
        assert_eq!(a.r_tensor, b.r_tensor);
        let c = gen_instance(&[5, 4, 3], 3, 1e-3, 43);
        assert_ne!(c.observed, a.observed);
    }

    #[test]
    fn noise_norm_hits_target() {
        let eps = 1e-2;
        let inst = gen_instance(&[6, 5, 4], 3, eps, 11);
        assert!((inst.observed.sub(&inst.r_tensor).unwrap().hs_norm() - eps).abs() <= 1e-14);
        // Stored noise satisfies F - R = E exactly.
        let diff = inst.observed.sub(&inst.r_tensor).unwrap();
        assert_eq!(diff, inst.noise);
        assert!((inst.noise.hs_norm() - eps).abs() <= 1e-12 * eps);
    }

    #[test]
    fn relative_errors_identities() {
        let inst = gen_instance(&[4, 4, 3], 2, 1e-2, 3);
        // The planted truth leaves exactly the noise.
        let (rho, resid) = relative_errors(&inst.observed, &inst.ground_truth, inst.noise.hs_norm());
        assert!((resid - inst.noise.hs_norm()).abs() <= 1e-12 * inst.noise.hs_norm());
        assert!((rho - 1.0).abs() <= 1e-10);
        // The zero model leaves the full tensor.
        let zero = CPDecomposition::new(
            inst.observed
                .dims()
                .iter()
                .map(|&n| Array2::zeros((n, 1)))
                .collect(),
        )
        .unwrap();
        let (rho0, resid0) = relative_errors(&inst.observed, &zero, 2.0);
        assert_eq!(resid0, inst.observed.hs_norm());
        assert_eq!(rho0, inst.observed.hs_norm() / 2.0);
        // A model reproducing the tensor exactly scores zero.
        let (rho_exact, _) = relative_errors(&inst.r_tensor, &inst.ground_truth, 1.0);
        assert!(rho_exact <= 1e-12 * inst.r_tensor.hs_norm());
    }
}
