//! Structured distance to singularity via singular vector spaces.
//!
//! Given a real square matrix `A` inside a linear structure `T` (Toeplitz,
//! Hankel, symmetric, a sparsity pattern, or any orthonormal basis), the
//! solvers look for the smallest `Δ ∈ T` in Frobenius norm such that `A + Δ`
//! is singular.

pub mod config;
pub mod error;
pub mod lsq;
pub mod numerics;
pub mod scalar;
pub mod solver;
pub mod spaces;
pub mod structures;

pub use config::{Algorithm, SolverConfig, Strategy};
pub use error::{Error, Result};
pub use lsq::{assemble_full, assemble_reduced, eval_g, solve_exact, solve_tikhonov, LsqSystem};
pub use numerics::{
    minnorm_lstsq, refine_smallest_triplet, singular_values, smallest_triplet, sphere_quadratic_min, sphere_quadratic_min_spectral, svd, SingularTriplet,
    SphereMinimum, SvdResult,
};
pub use scalar::Scalar;
pub use solver::{
    licq_check, select_space, solve, solve_augmented_lagrangian, solve_tikhonov_bcd, solve_unregularized, LicqReport,
    SolveResult, StopReason,
};
pub use spaces::{from_svd_block, from_svd_left, from_svd_right, pattern_max_rank, SingularSpace};
pub use structures::{
    full_basis, hankel_basis, orthonormalize, sparse_pattern_basis, symmetric_basis, toeplitz_basis, BasisElement,
    Orthonormalized, ProblemInstance, StructureKind, StructuredBasis,
};

/// Double precision aliases.
pub type Instance = ProblemInstance<f64>;
pub type Basis = StructuredBasis<f64>;
pub type Space = SingularSpace<f64>;
pub type Solution = SolveResult<f64>;
pub type System = LsqSystem<f64>;

/// Single precision aliases.
pub type Instance32 = ProblemInstance<f32>;
pub type Basis32 = StructuredBasis<f32>;
pub type Space32 = SingularSpace<f32>;
pub type Solution32 = SolveResult<f32>;
pub type System32 = LsqSystem<f32>;
