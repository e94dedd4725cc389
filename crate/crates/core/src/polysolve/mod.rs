//! Feasibility kernel for systems of polynomial inequalities over a polytope.
//!
//! [`solve_system`] either returns a point where every polynomial is
//! non-positive or certifies that no point reaches `−ε` on all of them.

mod enclosure;
mod kernel;
mod project;

pub use enclosure::eval_poly_interval;
pub use kernel::{solve_inequalities, solve_system, Inequality, KernelResult, SolveOutcome, DEFAULT_BUDGET};
pub use project::{project, PROJECTION_TOL};
