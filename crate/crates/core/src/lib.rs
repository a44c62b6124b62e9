// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod backward;
pub mod cli;
pub mod ctrw_chain;
pub mod error;
pub mod forward;
pub mod frac_ops;
pub mod grid;
pub mod limit_sampler;
pub mod model;
pub mod rng;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
