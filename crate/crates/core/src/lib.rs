//! Numerical laboratory for cutoff Pucci operators: grid functions,
//! inf-convolution regularization, cusp sliding, covering arguments and
//! the experiment harness built on top of them.

pub mod error;
pub mod lattice;
pub mod pucci;
pub mod regularize;
pub mod contact;
pub mod covering;
pub mod generate;
pub mod config;
pub mod harness;
pub mod cli;

pub use error::{Error, Result};
pub use lattice::{GridFunction, Lattice, Region};
pub use pucci::{EllipticityParams, HypothesisReport, OperatorValue};
