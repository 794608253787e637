//! Rack-aware minimum-storage regenerating array codes.
//!
//! The crate builds the two code families (digit-per-rack blow-ups with
//! group width s̄ or s̄+1), checks their MDS property, and runs the
//! intra-rack multi-node repair scheme with exact bandwidth and access
//! accounting.

pub mod codes;
pub mod config;
pub mod gf;
pub mod identities;
pub mod kernels;
pub mod lambdas;
pub mod matrix;
pub mod params;
pub mod repair;

pub use gf::{Felt, Field, FieldSpec};
pub use matrix::{BlockShape, Mat};
pub use params::{CodeParams, Theorem};
