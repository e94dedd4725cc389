//! Certified Taylor models of the potential's derivatives on grid cells.

mod model;
mod polynomial;
mod series;

pub use model::{
    box_distance, det_remainder_bound, expand, expand_certified, model_from_series, remainder_bound, taylor_degree, Constant, GradientComponent,
    HessianDeterminant, Potential, TaylorModel, TaylorSource,
};
pub use polynomial::{lipschitz_bound, Polynomial};
pub use series::{gradient_series, hessian_det_series, potential_series, Series};
