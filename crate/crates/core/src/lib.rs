// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod discrete;
pub mod error;
pub mod info;
pub mod lab;
pub mod minimax;
pub mod quadrature;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
