//! Interpolation for contractive multipliers from the Hardy space into a
//! weighted Hardy space.
//!
//! The library works with left-tangential operator-argument interpolation
//! data `(T, E, N)` together with an input weight `alpha` and an output
//! weight `beta`. It provides
//!
//! * weight sequences, reproducing kernels and the factored kernel
//!   ([`weights`]),
//! * observability operators, gramians and Stein equations ([`statespace`]),
//! * the Pick-matrix solvability test ([`pick`]),
//! * the linear-fractional parametrization of all solutions and its
//!   realization diagnostics ([`solver`]),
//! * sampled-kernel certification of candidate multipliers and a built-in
//!   reproduction of the two-node Bergman-to-Bergman study ([`verify`]).
//!
//! With the default `parallel` feature, grid evaluation and coefficient
//! extraction fan out over rayon; results are assembled in index order so
//! outputs are identical to the sequential fallback.

pub mod error;
pub mod func;
pub mod linalg;
pub(crate) mod par;
pub mod pick;
pub mod solver;
pub mod statespace;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use func::AnalyticMatrixFunction;
pub use linalg::{CMatrix, CVector, C64};
pub use statespace::InterpolationData;
pub use weights::WeightSequence;
