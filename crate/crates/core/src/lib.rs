// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod design;
pub mod error;
pub mod fluctuation;
pub mod format;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod simulate;
pub mod special;
pub mod stable;

pub use error::{Error, Result};
