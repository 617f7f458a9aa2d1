//! File formats, experiment runner and command line front end for
//! [`morozov_core`].

pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod mtx;
pub mod output;

pub use error::{Error, Result};
pub use morozov_core as core;
