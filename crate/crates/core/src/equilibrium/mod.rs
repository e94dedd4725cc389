//! The weak and strong equilibrium solvers.
//!
//! Both solvers work on the normalized system: the domain is split around
//! exclusion cubes, each convex piece receives a variable-coarseness grid,
//! and every surviving cell gets certified Taylor models that are handed to
//! the feasibility kernel. Answers are mapped back to the caller's units.

mod certify;
mod pipeline;
mod strong;
mod weak;

use serde::{Deserialize, Serialize};

pub use certify::{certify_pm, certify_pm_detail, PmCertificate, PmMethod};
pub use strong::{
    solve_strong, solve_strong_auto, solve_strong_auto_with, solve_strong_with, strong_params, AutoOutcome,
    StrongAnswer, StrongOutcome, StrongParams, StrongReport,
};
pub use weak::{solve_weak, solve_weak_with, CellModels, WeakAnswer, WeakReport};

/// Tunable knobs shared by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Box budget of one kernel call.
    pub budget: usize,
    /// Discard cells whose interval gradient enclosure rules out a solution.
    pub prescreen: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Lower bound on the strong solver's gradient tolerance, in normalized units.
    pub strong_grad_floor: f64,
    /// Smallest `δ` tried by [`solve_strong_auto`].
    pub delta_floor: f64,
    /// Collect every solution cell instead of stopping at the first.
    pub enumerate_all: bool,
    /// Keep the Taylor models of every processed cell in the report.
    pub keep_models: bool,
    /// Largest Taylor order the models may use.
    pub max_order: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            budget: crate::polysolve::DEFAULT_BUDGET,
            prescreen: true,
            threads: None,
            strong_grad_floor: 1e-7,
            delta_floor: 2f64.powi(-40),
            enumerate_all: false,
            keep_models: false,
            max_order: crate::potential::MAX_ORDER - 4,
        }
    }
}

/// Size of the grid seen by a solver run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    /// Convex pieces left after removing the exclusion cubes.
    pub pieces: usize,
    /// Per-piece cut counts along each axis.
    pub cut_counts: Vec<Vec<usize>>,
    /// Per-piece product of interval counts.
    pub max_cells: Vec<f64>,
    /// Cells that survived the prescreen.
    pub candidates: usize,
    /// Cells handed to the kernel.
    pub solved: usize,
    /// Kernel boxes visited over all cells.
    pub kernel_boxes: usize,
    /// Largest Taylor order used by any model.
    pub max_k: u32,
}
