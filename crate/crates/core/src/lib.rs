// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamspace;
pub mod config;
pub mod coupling;
pub mod error;
pub mod fdtd;
pub mod geom;
pub mod geometry_csv;
pub mod lens;
pub mod material;

pub use error::{Error, Result};
