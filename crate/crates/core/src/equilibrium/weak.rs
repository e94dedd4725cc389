use serde::{Deserialize, Serialize};

use super::pipeline::{build_pieces, candidate_cells, cell_domain, normalize, scan_cells, with_pool};
use super::{GridStats, SolverConfig};
use crate::error::{CellId, Error, Result};
use crate::grid::{exclusion_radius_formula, AxisBox, Polytope};
use crate::polysolve::{solve_inequalities, Inequality, SolveOutcome};
use crate::potential::{eval_gradient, gradient_enclosure, ChargeSystem};
use crate::taylor::{expand_certified, taylor_degree, GradientComponent, TaylorModel};
use crate::wellbehaved::{derivative_family, potential_family, WellBehavedParams};

/// Answer of the weak solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeakAnswer {
    /// A point with `‖∇f(x)‖∞ ≤ ε`, with that norm as residual.
    Point { x: Vec<f64>, residual: f64 },
    /// No point of the domain has `‖∇f(x)‖∞ ≤ δ`.
    NoDeltaSolution { delta: f64 },
}

/// The gradient models built on one cell, in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModels {
    pub cell: CellId,
    pub bounds: AxisBox,
    pub models: Vec<TaylorModel>,
}

/// Full record of a weak solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakReport {
    pub answer: WeakAnswer,
    /// Every solution point found (only more than one with `enumerate_all`).
    pub points: Vec<(CellId, Vec<f64>)>,
    /// Exclusion half-width in normalized units.
    pub rho: f64,
    /// Well-behaved parameters of the gradient components.
    pub params: WellBehavedParams,
    /// Model error budget `ε − δ` in normalized units.
    pub model_eps: f64,
    /// Taylor order prescribed by the parameters.
    pub k: u32,
    pub stats: GridStats,
    /// Models of every solved cell, when requested.
    pub models: Vec<CellModels>,
}

/// Either a point with `‖∇f‖∞ ≤ eps` or a certificate that no point has
/// `‖∇f‖∞ ≤ delta`.
pub fn solve_weak(sys: &ChargeSystem, x: &Polytope, eps: f64, delta: f64) -> Result<WeakAnswer> {
    solve_weak_with(sys, x, eps, delta, &SolverConfig::default()).map(|r| r.answer)
}

struct CellResult {
    point: Option<Vec<f64>>,
    models: Option<CellModels>,
    boxes: usize,
    max_k: u32,
}

/// [`solve_weak`] with explicit configuration and a detailed report.
pub fn solve_weak_with(
    sys: &ChargeSystem,
    x: &Polytope,
    eps: f64,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<WeakReport> {
    if !(delta > 0.0) || !(eps > delta) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("need eps > delta > 0, got eps = {eps}, delta = {delta}")));
    }
    with_pool(cfg.threads, || weak_inner(sys, x, eps, delta, cfg))?
}

fn weak_inner(sys: &ChargeSystem, x: &Polytope, eps: f64, delta: f64, cfg: &SolverConfig) -> Result<WeakReport> {
    let (sys_n, x_n) = normalize(sys, x)?;
    let gs = sys.gradient_scale();
    let eps_n = eps / gs;
    let delta_n = delta / gs;
    let model_eps = eps_n - delta_n;
    let rho = exclusion_radius_formula(&sys_n, delta_n)?;
    let f = potential_family(sys_n.charges(), rho)?;
    let g = derivative_family(&f, 1);
    let k = taylor_degree(g.params.b, model_eps);
    let (pieces, mut stats) = build_pieces(&sys_n, &x_n, rho, std::slice::from_ref(&g))?;
    let d = sys_n.dim();

    let cells = if cfg.prescreen {
        candidate_cells(&pieces, |b| {
            gradient_enclosure(&sys_n, &b.to_intervals()).iter().all(|e| e.lo <= delta_n && e.hi >= -delta_n)
        })
    } else {
        candidate_cells(&pieces, |_| true)
    };
    stats.candidates = cells.len();

    let shift = -eps_n + model_eps / 2.0;
    let gap = model_eps / 4.0;
    let ineqs: Vec<Inequality> =
        (0..d).flat_map(|j| [Inequality::new(j, 1.0, shift, gap), Inequality::new(j, -1.0, shift, gap)]).collect();

    let solve_cell = |pi: usize, index: &[usize]| -> Result<Option<CellResult>> {
        let Some((cell, local)) = cell_domain(&pieces[pi], index) else {
            return Ok(None);
        };
        let mut models = Vec::with_capacity(d);
        for axis in 0..d {
            let src = GradientComponent { sys: &sys_n, axis };
            models.push(expand_certified(&src, &cell.anchor, k, &cell.bounds, model_eps, cfg.max_order)?);
        }
        let max_k = models.iter().map(|m| m.k).max().unwrap_or(k);
        let polys: Vec<_> = models.iter().map(|m| m.poly.clone()).collect();
        let res = solve_inequalities(&polys, &ineqs, &local, &cell.bounds, cfg.budget)?;
        let point = match res.outcome {
            SolveOutcome::Found { point, .. } => {
                let gn = eval_gradient(&sys_n, &point)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if gn > eps_n {
                    return Err(Error::PrecisionLoss(format!(
                        "kernel point has gradient norm {gn:e} above {eps_n:e}"
                    )));
                }
                Some(point)
            }
            SolveOutcome::Infeasible { .. } => None,
        };
        let models = cfg.keep_models.then(|| CellModels {
            cell: CellId { piece: pi, index: index.to_vec() },
            bounds: cell.bounds.clone(),
            models,
        });
        Ok(Some(CellResult { point, models, boxes: res.boxes, max_k }))
    };

    let enumerate = cfg.enumerate_all;
    let scan = scan_cells(&cells, |r: &CellResult| r.point.is_some() && !enumerate, solve_cell);
    stats.solved = scan.found.len();
    let mut points = Vec::new();
    let mut models = Vec::new();
    for (id, r) in scan.found {
        stats.kernel_boxes += r.boxes;
        stats.max_k = stats.max_k.max(r.max_k);
        if let Some(p) = r.point {
            points.push((id, sys.from_normalized(&p)));
        }
        if let Some(m) = r.models {
            models.push(m);
        }
    }
    let answer = match points.first() {
        Some((_, p)) => {
            let residual = eval_gradient(sys, p)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            WeakAnswer::Point { x: p.clone(), residual }
        }
        None => {
            if let Some(e) = scan.error {
                return Err(e);
            }
            WeakAnswer::NoDeltaSolution { delta }
        }
    };
    Ok(WeakReport { answer, points, rho, params: g.params, model_eps, k, stats, models })
}
