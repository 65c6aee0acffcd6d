// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgo;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod impedance;
pub mod locate;
pub mod medium;
pub mod patch;
pub mod recon;
pub mod sparse;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
