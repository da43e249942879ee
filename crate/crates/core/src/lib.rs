#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod algebra;
pub mod chain;
pub mod cxa;
pub mod error;
pub mod io;
pub mod lp;
pub mod mk;
pub mod propinquity;
pub mod sampling;
pub mod spaces;

pub use error::{Error, Result};
