#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod mdp;
pub mod pevi;
pub mod pipeline;
pub mod report;
pub mod reward;
pub mod seed;
pub mod theory;

pub use error::{Error, Result};
