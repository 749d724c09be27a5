//! Intrinsic second-order total generalized variation (TGV) of the
//! unit-normal field on closed triangle meshes, with an ADMM solver that uses
//! it as a regularizer for mesh denoising.
//!
//! The building blocks are exposed as modules:
//!
//! - [`mesh`]: validated closed-manifold topology and per-edge frames;
//! - [`sphere`]: geodesic calculus on the unit sphere (log map, parallel
//!   transport of vectors and tensors);
//! - [`trt`]: the tangential Raviart-Thomas space coupling normal variation
//!   to an auxiliary matrix field (two degrees of freedom per edge);
//! - [`regularizer`]: discrete TV and TGV of the normal as evaluatable
//!   functionals;
//! - [`admm`]: the operator-splitting solver (shrinkage, conjugate-gradient
//!   field update, truncated-Newton vertex update with tangent-space
//!   transports);
//! - [`io`], [`generate`], [`metrics`]: OBJ/OFF files, synthetic test
//!   geometry with reproducible noise, and error reporting.
//!
//! With the default `parallel` feature the per-edge and per-triangle loops
//! run on rayon; disabling default features yields a sequential build with
//! identical results.

pub mod admm;
pub mod dual;
pub mod error;
pub mod generate;
pub mod io;
pub mod math;
pub mod mesh;
pub mod parallel;
pub mod primitives;
pub mod regularizer;
pub mod sparse;
pub mod sphere;
pub mod trt;

pub use error::{Error, Result};
