#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod cli;
pub mod completion;
pub mod error;
pub mod gqsp;
pub mod oracle;
pub mod pipeline;
pub mod poly;
pub mod sim;
pub mod testgen;

pub use error::{Error, Result};
