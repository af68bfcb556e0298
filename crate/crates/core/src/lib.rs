//! Curvature-dimension checks on finite metric measure spaces through L¹
//! optimal transport and needle decompositions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cd;
pub mod cli;
pub mod coefficients;
pub mod config;
pub mod disintegration;
pub mod error;
pub mod fixtures;
pub mod glue;
pub mod io;
pub mod measures;
pub mod num;
pub mod oracle;
pub mod rays;
pub mod space;
pub mod svg;
pub mod transport;

pub use error::{Error, Result};
