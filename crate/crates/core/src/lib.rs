//! Numerical laboratory for Orlicz-space analysis.
//!
//! The crate is organised bottom-up: [`nfunction`] holds the growth-function
//! calculus, [`norms`] computes modulars and rearrangement-invariant norms of
//! sampled fields, [`embedding`] builds Sobolev-Orlicz embedding functions and
//! regularity targets, and [`solver`] realises the approximation scheme for
//! monotone elliptic problems with L¹ or measure data.

pub mod acceptance;
pub mod embedding;
pub mod exec;
pub mod field;
pub mod nfunction;
pub mod norms;
pub mod numerics;
pub mod report;
pub mod solver;

pub use exec::Exec;
pub use field::{FieldError, SampledField};
pub use nfunction::{NFunction, NFunctionError};
