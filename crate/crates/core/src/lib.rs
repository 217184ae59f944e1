//! Bilateral trade with interdependent values: valuation model, mechanisms,
//! posted-price equilibria, hard instances and an LP oracle for optimal
//! BIC and interim-IR mechanisms on finite grids.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod instances;
pub mod lp_oracle;
pub mod mechanisms;
pub mod poly;
pub mod quad;
pub mod sampling;
pub mod valuations;

pub use error::{Error, Result};
