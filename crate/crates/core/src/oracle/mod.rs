//! Independent reference computations used to check the solvers: dense grid
//! scans, the two-charge bisection, finite differences and Newton refinement.

mod bisect;
mod diff;
mod newton;
mod scan;

pub use bisect::{two_charge_bisect, two_charge_bisect_trace, BisectTrace};
pub use diff::{finite_difference, finite_difference_auto, richardson};
pub use newton::{newton_refine, NewtonReport, NEWTON_TOL};
pub use scan::{brute_force_scan, ScanPoint, ScanReport, SCAN_CAP};
