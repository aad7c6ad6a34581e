//! Symmetric Kronecker algebra and the continuous-time learning pipeline
//! built on it: Lyapunov/Riccati solvers, Kleinman policy iteration,
//! integral RL regressions per decentralized loop, and state modulation.

// `!(x < y)` comparisons are kept because they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod skron;

pub use error::{Error, Result};
pub use skron::{
    nbar, skron, skron_entry, skron_sum, skron_vec, smat, svec, sym_project, IndexScheme, SvecVector, SymBasis,
    SymMatrix,
};
pub mod lyap;
pub mod quad;
pub mod kleinman;
pub mod sim;
pub mod eirl;
pub mod mee;
pub mod study;
