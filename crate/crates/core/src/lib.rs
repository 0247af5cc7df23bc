// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod canonical;
pub mod cli;
pub mod entangle;
pub mod error;
pub mod harness;
pub mod matcore;
pub mod metric;
pub mod optim;
pub mod schmidt;

pub use error::{Error, Result};
