//! Symmetry-algebra classification and coherence generating power of
//! spin-chain Hamiltonian families.
//!
//! The numeric core is generic over the real scalar `R` ([`Real`]: `f32` or
//! `f64`); matrices are complex with entries `Complex<R>`. Double-precision
//! aliases are exported at the crate root.

pub mod algebra;
pub mod cgp;
pub mod dynamics;
pub mod error;
pub mod haar;
pub mod io;
pub mod linalg;
pub mod models;
pub mod scalar;
pub mod scaling;
pub mod sparse;

pub use algebra::{AlgebraDecomposition, BlockUnitary, Sector};
pub use error::{Error, Result};
pub use models::{CouplingSet, HamiltonianFamily, ModelId};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type Mat = linalg::CMat<f64>;
pub type Decomposition = algebra::AlgebraDecomposition<f64>;
pub type Family = models::HamiltonianFamily<f64>;
pub type Operator = sparse::SparseOp<f64>;
pub type Blocks = algebra::BlockUnitary<f64>;
pub type Cgp = cgp::CgpResult<f64>;
