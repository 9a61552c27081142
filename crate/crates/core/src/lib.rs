//! Post-selection bounds for permutation-covariant quantum channels.
//!
//! The crate is `no_std` (with `alloc`). It contains the dense linear algebra
//! over multi-factor Hilbert spaces, Choi-matrix channel manipulation, the
//! symmetric-subspace and de Finetti machinery, a certified diamond-norm
//! solver, the post-selection inequality checker and the QKD security
//! parameter arithmetic. IO and the command line live in the `postsel` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channels;
pub mod diamond;
mod error;
pub mod linalg;
pub mod postselect;
pub mod qkd;
pub mod sdp;
pub mod symmetric;

pub use channels::{Channel, CptpReport, HpMap, LinearMap};
pub use diamond::{DiamondOptions, DiamondResult};
pub use error::{Error, Result};
pub use linalg::{Ket, Operator, C64};
pub use postselect::{CovariantMap, Covariance, PostSelectionReport};
pub use qkd::{SecurityParams, ToyProtocol};
pub use symmetric::{Permutation, SymSpace, TauFamily};
