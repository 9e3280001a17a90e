// `!(x > 0.0)` style checks deliberately reject NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocators;
pub mod channel_model;
pub mod cli;
pub mod error;
pub mod link_budget;
pub mod matching;
pub mod pilot_scheduler;
pub mod simulator;
pub mod special;

#[cfg(test)]
pub(crate) mod testing;

pub use error::{Error, Result};
