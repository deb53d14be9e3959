#![cfg_attr(not(feature = "std"), no_std)]
//! Exact symbol calculus for Weyl pseudodifferential operators of infinite
//! order, with numerical back ends for complex powers, heat parametrices and
//! Hermite-basis quantization.

extern crate alloc;

pub mod cpow;
pub mod error;
pub mod fsring;
pub mod heat;
pub mod parametrix;
mod prelude;
pub mod quant;
pub mod special;
pub mod symalg;
pub mod validate;
pub mod weights;

pub use error::{Error, Result};

/// Crate version, recorded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use symalg::{PhasePoint, Registry, SymExpr, Var};
