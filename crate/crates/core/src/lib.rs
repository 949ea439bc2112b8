//! Finite-difference laboratory for the semilinear strongly damped wave
//! equation `u_tt − Δu − Δu_t = f(u, u_t)` on radial exterior domains.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod cli_io;
pub mod data;
pub mod diagnostics;
pub mod domain_grid;
pub mod error;
pub mod evolver;
pub mod harmonic_weight;
pub mod nonlinearity;
pub mod picard;
pub mod spatial_ops;
pub mod sweep;
pub mod testfn;
pub mod theory;

pub use error::{Result, SdwError};
