//! Variable-coarseness grid: exclusion cubes around charges, splitting of the
//! domain into convex pieces, axis cuts from the well-behavedness covers, and
//! enumeration of the resulting cells.

mod cells;
mod cuts;
mod polytope;
mod region;

pub use cells::{CellGrid, GridCell};
pub use cuts::{
    beta_schedule, build_axis_cuts, charge_grid, exclusion_boxes, exclusion_radius, merge_cuts, split_domain,
    AxisCuts, ChargeGrid, CUT_MERGE_TOL,
};
pub(crate) use cuts::{advance, exclusion_radius_formula};
pub use polytope::{BoxRelation, Halfspace, Polytope, MEMBERSHIP_TOL};
pub use region::AxisBox;
