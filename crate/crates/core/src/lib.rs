//! Discrete fractional Sobolev seminorms and level-set clustering
//! certificates on axis-aligned N-dimensional cubes.
//!
//! A function is represented by its samples at the cell midpoints of a
//! uniform grid on a cube ([`geometry::GridFunction`]). On top of that the
//! crate provides
//!
//! * the Gagliardo seminorm `[u]_{s,p}` by midpoint quadrature with the
//!   diagonal excluded, as a plain reference loop and as a chunked parallel
//!   kernel, plus the forward-difference `‖∇u‖_p` and the anisotropic total
//!   variation ([`seminorms`]);
//! * the embedding constant `C(N,s,p) = (∫_{Q₂} |z|^{-σ} dz)^{1/p}` with
//!   `σ = N + ps − p`, by three independent methods;
//! * the superlevel-mass hypothesis, the seminorm-budget hypothesis, the
//!   subcube classifier and the search for a clustering certificate, along
//!   with the a-priori bound `k★` on the partition depth ([`clustering`]);
//! * the reductions from gradient and BV budgets to a Gagliardo budget and
//!   the exact scaling identities behind them ([`reductions`]).
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! tolerances quoted throughout the docs assume.

pub mod clustering;
pub mod error;
pub mod geometry;
pub mod reductions;
pub mod scalar;
pub mod seminorms;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Cube = geometry::Cube<f64>;
pub type GridSpec = geometry::GridSpec<f64>;
pub type GridFunction = geometry::GridFunction<f64>;
pub type FunctionSpec = geometry::FunctionSpec<f64>;
pub type FractionalParams = seminorms::FractionalParams<f64>;
pub type EmbeddingConstant = seminorms::EmbeddingConstant<f64>;
pub type ClusterQuery = clustering::ClusterQuery<f64>;
pub type LevelQuery = clustering::LevelQuery<f64>;
pub type PartitionReport = clustering::PartitionReport<f64>;
pub type ClusterCertificate = clustering::ClusterCertificate<f64>;
pub type ReductionInput = reductions::ReductionInput<f64>;

pub type Cube32 = geometry::Cube<f32>;
pub type GridFunction32 = geometry::GridFunction<f32>;
pub type FractionalParams32 = seminorms::FractionalParams<f32>;
