//! Generalized Pitman nearness (GPN) comparison of equivariant estimators
//! for order-restricted location and scale parameters of bivariate models.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod gpn;
pub mod models;
pub mod quadrature;
pub mod specfun;

pub use error::{GpnError, Result};
