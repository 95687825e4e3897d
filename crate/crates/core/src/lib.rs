//! Low-rank orthogonal tensor approximation.
//!
//! Given a dense real tensor `A` of order `k >= 3` and a target rank `r`,
//! [`solver::run`] searches for orthonormal factor matrices `U^(1), ..., U^(k)`
//! maximizing `f(U) = sum_j lambda_j(U)^2`, where `lambda_j` is the contraction of
//! `A` against the `j`-th columns of every factor. The best odeco approximation
//! is then `sum_j lambda_j u^(1)_j ⊗ ... ⊗ u^(k)_j`.
//!
//! The solver alternates polar decompositions over the modes, applies a
//! proximal correction whenever the polar problem is badly conditioned, and
//! truncates columns whose weights become negligible. Every sweep is recorded
//! so the [`diagnostics`] module can replay the convergence guarantees.

pub mod battery;
pub mod diagnostics;
pub mod error;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod precise;
pub mod rng;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Matrix, OrthonormalMatrix, PolarFactors, Svd};
pub use solver::{
    FactorSet, ModeStep, ProximalMode, Solution, SolverConfig, SweepRecord, SweepTrace, Termination,
};
pub use tensor::{BlockVector, DenseTensor};
