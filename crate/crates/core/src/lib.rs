//! Transportation Lp distances, linear optimal-transport embeddings and the
//! numerical machinery around them.

pub mod analysis;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod finance;
pub mod flow;
pub mod interp;
pub mod io;
pub mod measures;
pub mod metric;
pub mod poisson;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
