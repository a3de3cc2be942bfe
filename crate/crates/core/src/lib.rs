#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod channel;
pub mod cli;
pub mod error;
pub mod freq;
pub mod multi_tx;
pub mod pn;
pub mod pulse;
pub mod seed;
pub mod signal;
pub mod sliding;

pub use error::{Error, Result};
pub use num_complex::Complex64;
