//! Traveling waves of the one-dimensional nonlocal Gross–Pitaevskii equation
//! i∂ₜΨ = ∂ₓₓΨ + Ψ(W∗(1−|Ψ|²)), computed by energy minimization at fixed
//! momentum on a periodic spectral grid.

// `!(x < y)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod curve;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod hypotheses;
pub mod io;
pub mod kernels;
pub mod minimizer;

pub use error::{Error, Result};
pub use fields::{ComplexField, HydroField};
pub use grid::Grid;
pub use kernels::InteractionKernel;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
