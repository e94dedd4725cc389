use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::certify::{certify_adaptive, PmCertificate};
use super::pipeline::{build_pieces, candidate_cells, cell_domain, normalize, scan_cells, with_pool, Piece};
use super::{GridStats, SolverConfig};
use crate::error::{CellId, Error, Result};
use crate::grid::{exclusion_radius_formula, GridCell, Polytope};
use crate::interval::Interval;
use crate::polysolve::{solve_inequalities, Inequality, SolveOutcome};
use crate::potential::{eval_gradient, gradient_enclosure, gradient_norm, hessian_det, hessian_det_enclosure, ChargeSystem};
use crate::taylor::{expand_certified, taylor_degree, GradientComponent, HessianDeterminant, TaylorModel};
use crate::wellbehaved::{derivative_family, hessian_det_family, potential_family, WellBehaved, WellBehavedParams};

/// The tolerances `δ′`, `α` and `ε′` of the strong reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongParams {
    pub delta_prime: f64,
    pub alpha: f64,
    pub eps_prime: f64,
}

/// `δ′ = (δ/2)(β²/(2dC²2^B))^{d−1}`, `α = min(ε/√d, δ′β³/(8d²C³2^B))` and
/// `ε′ = (3/16)δ′α`.
pub fn strong_params(b: u32, c: u64, beta_min: f64, delta: f64, eps: f64, d: usize) -> StrongParams {
    let df = d as f64;
    let cf = c as f64;
    let two_b = 2f64.powi(b as i32);
    let delta_prime = (delta / 2.0) * (beta_min * beta_min / (2.0 * df * cf * cf * two_b)).powi(d as i32 - 1);
    let alpha = (eps / df.sqrt()).min(delta_prime * beta_min.powi(3) / (8.0 * df * df * cf.powi(3) * two_b));
    StrongParams { delta_prime, alpha, eps_prime: 3.0 / 16.0 * delta_prime * alpha }
}

/// A point near an exact equilibrium with a large Hessian determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongAnswer {
    pub point: Vec<f64>,
    /// The requested distance `ε` to an exact equilibrium.
    pub radius: f64,
    /// `det ∇²f` at the point.
    pub hessian_det: f64,
    /// Whether the Poincaré–Miranda check succeeded.
    pub certified: bool,
    /// Half-width of the certified box around the point.
    pub alpha: f64,
    /// The `δ` whose system produced the point.
    pub delta: f64,
    /// Sign of the determinant branch, `+1` or `−1`.
    pub branch: i8,
    /// `‖∇f‖∞` at the point.
    pub gradient_residual: f64,
    /// Certificate in normalized units.
    pub certificate: PmCertificate,
}

/// Outcome of [`solve_strong`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StrongOutcome {
    Found(StrongAnswer),
    /// Neither determinant branch is feasible at this `δ`.
    NotFound { delta: f64 },
}

/// Outcome of [`solve_strong_auto`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AutoOutcome {
    Found(StrongAnswer),
    /// Every scheduled `δ` down to the floor failed.
    Exhausted { floor: f64 },
}

/// Full record of a strong solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongReport {
    pub answer: Option<StrongAnswer>,
    /// Every `δ` tried, in order.
    pub deltas: Vec<f64>,
    /// Parameters of the last attempt, in normalized units.
    pub params: Option<StrongParams>,
    /// Well-behaved parameters of the potential the parameters derive from.
    pub family: WellBehavedParams,
    /// Gradient and determinant tolerances of the last attempt, normalized.
    pub grad_tol: f64,
    pub det_tol: f64,
    pub rho: f64,
    pub stats: GridStats,
}

/// A certified point within `eps` of an exact equilibrium whose Hessian
/// determinant has magnitude at least `delta`, or `NotFound`.
pub fn solve_strong(sys: &ChargeSystem, x: &Polytope, eps: f64, delta: f64) -> Result<StrongOutcome> {
    let r = solve_strong_with(sys, x, eps, delta, &SolverConfig::default())?;
    Ok(match r.answer {
        Some(a) => StrongOutcome::Found(a),
        None => StrongOutcome::NotFound { delta },
    })
}

/// [`solve_strong`] with explicit configuration and a detailed report.
pub fn solve_strong_with(
    sys: &ChargeSystem,
    x: &Polytope,
    eps: f64,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<StrongReport> {
    check_eps(eps)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    with_pool(cfg.threads, || {
        let setup = Setup::new(sys, x, cfg)?;
        setup.run(&[delta], eps, cfg)
    })?
}

/// Runs [`solve_strong`] for `δ = 1, 1/2, 1/4, …` down to the configured floor.
pub fn solve_strong_auto(sys: &ChargeSystem, x: &Polytope, eps: f64) -> Result<AutoOutcome> {
    let cfg = SolverConfig::default();
    let r = solve_strong_auto_with(sys, x, eps, &cfg)?;
    Ok(match r.answer {
        Some(a) => AutoOutcome::Found(a),
        None => AutoOutcome::Exhausted { floor: cfg.delta_floor },
    })
}

/// [`solve_strong_auto`] with explicit configuration and a detailed report.
pub fn solve_strong_auto_with(sys: &ChargeSystem, x: &Polytope, eps: f64, cfg: &SolverConfig) -> Result<StrongReport> {
    check_eps(eps)?;
    let mut deltas = Vec::new();
    let mut delta = 1.0;
    while delta >= cfg.delta_floor {
        deltas.push(delta);
        delta /= 2.0;
    }
    with_pool(cfg.threads, || {
        let setup = Setup::new(sys, x, cfg)?;
        setup.run(&deltas, eps, cfg)
    })?
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// The `δ`-independent part of the strong pipeline.
struct Setup<'a> {
    sys: &'a ChargeSystem,
    sys_n: ChargeSystem,
    f: WellBehaved,
    g: WellBehaved,
    rho: f64,
    pieces: Vec<Piece>,
    stats: GridStats,
    /// Cells whose gradient enclosure contains zero, with their determinant enclosure.
    cells: Vec<(usize, Vec<usize>, Interval)>,
}

struct Hit {
    point: Vec<f64>,
    branch: i8,
    cert: PmCertificate,
    boxes: usize,
    max_k: u32,
}

impl<'a> Setup<'a> {
    fn new(sys: &'a ChargeSystem, x: &Polytope, cfg: &SolverConfig) -> Result<Self> {
        use rayon::prelude::*;
        let (sys_n, x_n) = normalize(sys, x)?;
        let rho = exclusion_radius_formula(&sys_n, cfg.strong_grad_floor)?;
        let f = potential_family(sys_n.charges(), rho)?;
        let g = derivative_family(&f, 1);
        let det = hessian_det_family(&f, sys_n.dim())?;
        let (pieces, mut stats) = build_pieces(&sys_n, &x_n, rho, &[g.clone(), det])?;
        let raw = if cfg.prescreen {
            candidate_cells(&pieces, |b| gradient_enclosure(&sys_n, &b.to_intervals()).iter().all(|e| e.contains_zero()))
        } else {
            candidate_cells(&pieces, |_| true)
        };
        let cells: Vec<(usize, Vec<usize>, Interval)> = raw
            .into_par_iter()
            .map(|(p, idx)| {
                let bx = pieces[p].grid.cell_box(&idx);
                let enc = hessian_det_enclosure(&sys_n, &bx.to_intervals());
                (p, idx, enc)
            })
            .collect();
        stats.candidates = cells.len();
        Ok(Self { sys, sys_n, f, g, rho, pieces, stats, cells })
    }

    fn run(mut self, deltas: &[f64], eps: f64, cfg: &SolverConfig) -> Result<StrongReport> {
        let d = self.sys_n.dim();
        let eps_n = eps / self.sys.scale_x();
        let mut report = StrongReport {
            answer: None,
            deltas: Vec::new(),
            params: None,
            family: self.f.params,
            grad_tol: f64::NAN,
            det_tol: f64::NAN,
            rho: self.rho,
            stats: GridStats::default(),
        };
        let mut solved = 0;
        for &delta in deltas {
            report.deltas.push(delta);
            let delta_n = delta / self.sys.det_scale();
            let p = self.f.params;
            let params = strong_params(p.b, p.c, p.beta_min, delta_n, eps_n, d);
            let eps_g = params.eps_prime.max(cfg.strong_grad_floor);
            let eps_det = params.eps_prime.max(delta_n / 2.0);
            report.params = Some(params);
            report.grad_tol = eps_g;
            report.det_tol = eps_det;
            if self.cells.is_empty() {
                // No cell can hold a zero of the gradient for any δ.
                break;
            }
            let (hit, error, count) = self.attempt(delta_n, eps_g, eps_det, params.eps_prime, eps_n, cfg);
            solved += count;
            if let Some((_, h)) = hit {
                self.stats.kernel_boxes += h.boxes;
                self.stats.max_k = self.stats.max_k.max(h.max_k);
                let x = self.sys.from_normalized(&h.point);
                report.answer = Some(StrongAnswer {
                    hessian_det: hessian_det(self.sys, &x)?,
                    gradient_residual: gradient_norm(self.sys, &x)?,
                    point: x,
                    radius: eps,
                    certified: h.cert.certified,
                    alpha: h.cert.alpha * self.sys.scale_x(),
                    delta,
                    branch: h.branch,
                    certificate: h.cert,
                });
                break;
            }
            if let Some(e) = error {
                return Err(e);
            }
        }
        self.stats.solved = solved;
        report.stats = self.stats;
        Ok(report)
    }

    /// One `δ`: the first certified hit in cell order, else the first hit.
    fn attempt(
        &self,
        delta_n: f64,
        eps_g: f64,
        eps_det: f64,
        eps_prime: f64,
        eps_n: f64,
        cfg: &SolverConfig,
    ) -> (Option<(CellId, Hit)>, Option<Error>, usize) {
        let d = self.sys_n.dim();
        let target = delta_n - eps_prime;
        let encs: HashMap<(usize, &[usize]), Interval> =
            self.cells.iter().map(|(p, i, e)| ((*p, i.as_slice()), *e)).collect();
        let cells: Vec<(usize, Vec<usize>)> = self
            .cells
            .iter()
            .filter(|(_, _, enc)| enc.hi >= target || enc.lo <= -target)
            .map(|(p, i, _)| (*p, i.clone()))
            .collect();
        let k_g = taylor_degree(self.g.params.b, eps_g);
        // The determinant degree starts low and rises with its remainder bound.
        let k_det = 1;
        let alpha_max = eps_n / (d as f64).sqrt();
        let sys_n = &self.sys_n;
        let solve_cell = |pi: usize, index: &[usize]| -> Result<Option<Hit>> {
            let Some((cell, local)) = cell_domain(&self.pieces[pi], index) else {
                return Ok(None);
            };
            let enc = encs.get(&(pi, index)).copied().unwrap_or(Interval::ENTIRE);
            let mut polys = Vec::with_capacity(d + 1);
            let mut max_k = 0;
            for axis in 0..d {
                let src = GradientComponent { sys: sys_n, axis };
                let m = expand_certified(&src, &cell.anchor, k_g, &cell.bounds, eps_g, cfg.max_order)?;
                max_k = max_k.max(m.k);
                polys.push(m.poly);
            }
            let m = det_model(sys_n, &cell, k_det, eps_det, cfg.max_order)?;
            max_k = max_k.max(m.k);
            let det_err = m.err;
            polys.push(m.poly);
            let mut boxes = 0;
            for branch in [1i8, -1] {
                if (branch > 0 && enc.hi < target) || (branch < 0 && enc.lo > -target) {
                    continue;
                }
                let mut ineqs: Vec<Inequality> = (0..d)
                    .flat_map(|j| {
                        [Inequality::new(j, 1.0, -eps_g / 2.0, eps_g / 4.0), Inequality::new(j, -1.0, -eps_g / 2.0, eps_g / 4.0)]
                    })
                    .collect();
                ineqs.push(Inequality::new(d, -f64::from(branch), target + det_err, det_err));
                let res = solve_inequalities(&polys, &ineqs, &local, &cell.bounds, cfg.budget)?;
                boxes += res.boxes;
                if let SolveOutcome::Found { point, .. } = res.outcome {
                    let g = eval_gradient(sys_n, &point)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let det = hessian_det(sys_n, &point)?;
                    if g > eps_g || f64::from(branch) * det < target {
                        return Err(Error::PrecisionLoss(format!(
                            "kernel point fails verification: gradient {g:e}, determinant {det:e}"
                        )));
                    }
                    let cert = certify_adaptive(sys_n, &point, alpha_max)?;
                    return Ok(Some(Hit { point, branch, cert, boxes, max_k }));
                }
            }
            Ok(None)
        };
        let scan = scan_cells(&cells, |h: &Hit| h.cert.certified, solve_cell);
        let processed = scan.processed;
        let hit = scan
            .found
            .iter()
            .position(|(_, h)| h.cert.certified)
            .or(if scan.found.is_empty() { None } else { Some(0) })
            .map(|i| scan.found.into_iter().nth(i).unwrap());
        (hit, scan.error, processed)
    }
}

/// The determinant model at tolerance `eps`, widened until double precision
/// can certify its coefficients.
fn det_model(sys: &ChargeSystem, cell: &GridCell, k: u32, eps: f64, max_k: u32) -> Result<TaylorModel> {
    let mut tol = eps;
    for _ in 0..DET_WIDENINGS {
        match expand_certified(&HessianDeterminant(sys), &cell.anchor, k, &cell.bounds, tol, max_k) {
            Err(Error::PrecisionLoss(_)) => tol *= 2.0,
            r => return r,
        }
    }
    expand_certified(&HessianDeterminant(sys), &cell.anchor, k, &cell.bounds, tol, max_k)
}

const DET_WIDENINGS: usize = 64;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisBox;

    #[test]
    fn worked_parameter_example() {
        let p = strong_params(1, 4, 1.0, 1.0, 0.1, 2);
        assert_eq!(p.delta_prime, 3.90625e-3);
        assert!((p.alpha / 9.5367e-7 - 1.0).abs() < 1e-4);
        assert!((p.eps_prime / 6.985e-10 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn one_dimension_collapses_the_exponent() {
        let p = strong_params(3, 8, 0.25, 0.7, 1.0, 1);
        assert_eq!(p.delta_prime, 0.35);
    }

    #[test]
    fn doubling_delta_doubles_delta_prime() {
        let a = strong_params(2, 4, 0.5, 1.0, 1.0, 2);
        let b = strong_params(2, 4, 0.5, 2.0, 1.0, 2);
        assert_eq!(b.delta_prime, 2.0 * a.delta_prime);
        assert_eq!(b.alpha, 2.0 * a.alpha);
        assert_eq!(b.eps_prime, 4.0 * a.eps_prime);
    }

    #[test]
    fn symmetric_saddle_is_certified() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[-0.5, 0.0]), (1.0, &[0.5, 0.0])]).unwrap();
        let x = Polytope::from_box(&AxisBox::new(vec![-0.5, -0.5], vec![1.5, 0.5]).unwrap());
        match solve_strong(&sys, &x, 1e-4, 1.0).unwrap() {
            StrongOutcome::Found(a) => {
                assert!(a.certified && a.hessian_det < 0.0 && a.branch == -1);
                assert!(a.point[0].abs() < 1e-4 && a.point[1].abs() < 1e-4, "{:?}", a.point);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn far_domain_has_nothing() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0])]).unwrap();
        let x = Polytope::from_box(&AxisBox::new(vec![5.0, 5.0], vec![6.0, 6.0]).unwrap());
        assert_eq!(solve_strong(&sys, &x, 1e-3, 0.5).unwrap(), StrongOutcome::NotFound { delta: 0.5 });
        assert_eq!(solve_strong_auto(&sys, &x, 1e-3).unwrap(), AutoOutcome::Exhausted { floor: 2f64.powi(-40) });
    }
}
