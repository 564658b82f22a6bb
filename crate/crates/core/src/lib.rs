//! Recurrent averaging inequalities: structural criteria for consensus, trajectory
//! engines with disturbances and delays, opinion models and paracontraction solvers.

pub mod dense;
pub mod error;
pub mod fixedpoint;
pub mod graph;
pub mod opinion;
pub mod rai;
pub mod sequences;
pub mod stochastic;
pub mod tolerances;

pub use dense::Matrix;
pub use error::{Error, Result};
