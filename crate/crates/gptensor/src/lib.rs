//! CP tensor decompositions and low-rank approximations of dense complex
//! tensors via generating polynomials.
//!
//! Low-rank tensors satisfy linear relations among their entries. Those
//! relations are estimated by least squares, their approximately common
//! zeros found through one eigendecomposition of a random combination, and
//! the factor matrices recovered by back-substitution least squares. On an
//! exact rank-`r` tensor the pipeline reproduces the decomposition; on a
//! tensor near a rank-`r` one it produces a quasi-optimal approximation that
//! an ALS refiner can polish further.
//!
//! The crate also ships a classical generalized-eigenvalue (slice-pencil)
//! baseline for cubic tensors, seeded perturbation-instance generation, and
//! a benchmark harness with JSON reports.

pub mod accum;
pub mod approximate;
pub mod bench;
pub mod decompose;
pub mod equivalence;
pub mod error;
pub mod flatten;
pub mod genpoly;
pub mod gevd;
pub mod instance;
pub mod io;
pub mod linalg;
mod parallel;
pub mod reference;
pub mod reshape;
pub mod rng;
pub mod tensor;

pub use approximate::{approximate, approximate_reshaped, rank1_approx, refine_als, ApproxOptions, ApproxResult};
pub use bench::{run_bench, BenchConfig, BenchMethod, BenchReport};
pub use decompose::{decompose, decompose_reshaped, decompose_with_diagnostics, GpDiagnostics};
pub use equivalence::{cp_equivalent, kruskal_rank};
pub use error::{Error, Result};
pub use flatten::{estimate_rank, most_square_flatten, FlattenPlan};
pub use genpoly::{build_system, eigen_relation_check, pairing, solve_blocks, GenPolySystem, MonomialLabel};
pub use gevd::gevd_decompose;
pub use instance::{gen_instance, relative_errors, PerturbationInstance};
pub use io::{read_factors, read_tensor, write_factors, write_tensor};
pub use reshape::{choose_reshape_plan, reshape3, reshape3_inverse, ReshapePlan};
pub use tensor::{CPDecomposition, DenseTensor};

// Linked for the LAPACK backend.
extern crate openblas_src;
