// `!(x > 0.0)` guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cli;
pub mod contour;
pub mod dirichlet;
pub mod error;
pub mod heckman_opdam;
pub mod limits;
pub mod markov_krein;
pub mod measures;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
