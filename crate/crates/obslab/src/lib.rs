//! obslab: a numerical laboratory for spectral convergence of Laplacians on
//! flat tori perforated by many small balls.
//!
//! The crate discretizes the torus with a cell-centered finite-difference
//! scheme, builds identification operators between the unperturbed and the
//! perforated space, measures how far the pair is from a unitary equivalence,
//! and checks the predicted convergence rates for the fading and solidifying
//! obstacle regimes.

// validation deliberately writes `!(x > 0.0)` so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretize;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod quasiuni;
pub mod sparsela;
pub mod theory;
pub mod transplant;

pub use error::{Error, Result};
