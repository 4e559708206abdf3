//! Hermite/Laguerre spectral machinery for weighted Hardy classes, with a
//! certification harness for the decay estimates those classes satisfy.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` guards deliberately reject NaN

pub mod bounds;
pub mod cli;
pub mod error;
pub mod logscaled;
pub mod oscillator;
pub mod quadrature;
pub mod report;
pub mod selftest;
pub mod specfun;
pub mod spectra;
pub mod theorems;
pub mod transforms;
pub mod weights;

pub use error::{Error, Result};
pub use logscaled::{LogComplex, LogScaled};
