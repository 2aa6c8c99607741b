//! Projection methods for (possibly nonconvex) feasibility problems.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkernel`]: dense SVD, pseudo-inverse, orthonormal bases, Gram
//!   eigenvalues, seeded Gaussian sampling and finite differences.
//! - [`sets`]: closed sets with exact projections and normal-cone
//!   descriptions (affine subspaces, spheres, the `ℓ∞` ball, the manifold of
//!   matrices with orthonormal rows, row spaces, products, translates and the
//!   diagonal subspace of a product space).
//! - [`algorithms`]: alternating, averaged, product-space, cyclic, inexact
//!   alternating and perturbed-intersection runs, each producing a [`Trace`].
//! - [`regularity`]: the constant `c̄`, the condition modulus, the regularity
//!   modulus and the rates they predict.
//! - [`diagnostics`]: half the mean-squared distance `f`, its gradient, the
//!   value/gradient sandwich, Q-ratios and R-linear rate fitting.
//! - [`experiments`]: the compressed-sensing matrix design experiment, the
//!   synthetic gallery, and CSV/JSON output used by the `altproj` binary.
//!
//! Data-parallel loops (projections onto several sets, batches of seeds,
//! sampled cone searches) go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod numkernel;
pub mod par;
pub mod regularity;
pub mod sets;

pub use algorithms::{Algorithm, RunConfig, Trace};
pub use error::{Error, Result};
pub use numkernel::{Matrix, Point};
pub use par::Parallelism;
pub use regularity::{CondModulus, RegularityReport};
pub use sets::{NormalCone, ProjectableSet, RegularityClass};
