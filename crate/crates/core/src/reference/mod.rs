//! Methods the Newton solvers are compared against.

mod cgls;
mod gbit;
mod sirt;

pub use cgls::{cgls_priorconditioned, cgls_solve, CglsConfig};
pub use gbit::{gbit_solve, secant_alpha, GbitConfig};
pub use sirt::{sirt_solve, sirt_weights, SirtConfig, SirtWeights};
