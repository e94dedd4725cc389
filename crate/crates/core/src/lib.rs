pub mod error;
pub mod interval;
pub mod potential;
pub mod wellbehaved;
pub mod grid;
pub mod taylor;
pub mod polysolve;
pub mod equilibrium;
pub mod oracle;

pub use error::{CellId, Error, Result};
