use super::{eval_poly_interval, project};
use crate::error::{Error, Result};
use crate::grid::{AxisBox, BoxRelation, Polytope};
use crate::interval::Interval;
use crate::taylor::{lipschitz_bound, Polynomial};

/// Default cap on the number of boxes one solve may visit.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Result of a feasibility query.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    /// A point of `X` where every inequality holds, with its residuals.
    Found { point: Vec<f64>, residuals: Vec<f64> },
    /// No point of `X` satisfies every inequality with value `≤ −eps`.
    Infeasible { eps: f64 },
}

/// The inequality `sign · polys[poly](x) + shift ≤ 0`, relaxed to `≤ −gap`
/// for infeasibility certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inequality {
    pub poly: usize,
    pub sign: f64,
    pub shift: f64,
    pub gap: f64,
}

impl Inequality {
    pub fn new(poly: usize, sign: f64, shift: f64, gap: f64) -> Self {
        Self { poly, sign, shift, gap }
    }

    fn apply(&self, v: Interval) -> Interval {
        let s = if self.sign < 0.0 { -v } else { v };
        s + Interval::point(self.shift)
    }
}

/// Outcome plus the number of boxes visited.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelResult {
    pub outcome: SolveOutcome,
    pub boxes: usize,
}

/// Solves `{p(x) ≤ 0 : p ∈ polys}` over `X ∩ bx` with gap `eps`.
pub fn solve_system(polys: &[Polynomial], x: &Polytope, bx: &AxisBox, eps: f64) -> Result<SolveOutcome> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("gap must be positive, got {eps}")));
    }
    let ineqs: Vec<Inequality> = (0..polys.len()).map(|i| Inequality::new(i, 1.0, 0.0, eps)).collect();
    solve_inequalities(polys, &ineqs, x, bx, DEFAULT_BUDGET).map(|r| r.outcome)
}

/// Per-box lazily filled enclosures.
struct Enclosures<'a> {
    polys: &'a [Polynomial],
    cache: Vec<Option<Interval>>,
}

impl<'a> Enclosures<'a> {
    fn new(polys: &'a [Polynomial]) -> Self {
        Self { polys, cache: vec![None; polys.len()] }
    }

    fn get(&mut self, i: usize, bx: &AxisBox) -> Interval {
        *self.cache[i].get_or_insert_with(|| eval_poly_interval(&self.polys[i], bx))
    }
}

/// Branch-and-prune over `X ∩ bx`.
///
/// Boxes are bisected along their widest axis (lowest index on ties) and
/// explored depth first, lower half first. A box is pruned when it misses
/// `X` or when some inequality is bounded below by minus its gap; it is
/// accepted when every inequality is bounded above by zero. `Infeasible`
/// reports the smallest gap.
pub fn solve_inequalities(
    polys: &[Polynomial],
    ineqs: &[Inequality],
    x: &Polytope,
    bx: &AxisBox,
    budget: usize,
) -> Result<KernelResult> {
    if ineqs.iter().any(|q| !(q.gap > 0.0) || !q.gap.is_finite()) {
        return Err(Error::InvalidInput("every gap must be positive".into()));
    }
    let eps = ineqs.iter().map(|q| q.gap).fold(f64::INFINITY, f64::min);
    let d = x.dim();
    let Some(root) = bx.intersection(x.bounding_box()) else {
        return Ok(KernelResult { outcome: SolveOutcome::Infeasible { eps }, boxes: 0 });
    };
    let hull = root.inflate(1e-9 * (1.0 + root.max_width()));
    let mut lips: Vec<Option<f64>> = vec![None; polys.len()];
    let mut width_min = f64::INFINITY;
    for q in ineqs {
        let lip = *lips[q.poly].get_or_insert_with(|| lipschitz_bound(&polys[q.poly], &hull));
        if lip > 0.0 {
            width_min = width_min.min(q.gap / (2.0 * (d as f64).sqrt() * lip));
        }
    }

    let mut stack = vec![root];
    let mut boxes = 0usize;
    while let Some(b) = stack.pop() {
        boxes += 1;
        if boxes > budget {
            return Err(Error::BudgetExceeded { budget, cell: None });
        }
        let rel = x.relation(&b);
        if rel == BoxRelation::Outside || (rel == BoxRelation::Unknown && !x.intersects_box(&b)) {
            continue;
        }
        let mut enc = Enclosures::new(polys);
        let mut pruned = false;
        let mut all_neg = true;
        for q in ineqs {
            let v = q.apply(enc.get(q.poly, &b));
            if v.lo > -q.gap {
                pruned = true;
                break;
            }
            if v.hi > 0.0 {
                all_neg = false;
            }
        }
        if pruned {
            continue;
        }
        let leaf = b.max_width() <= width_min;
        if all_neg || leaf {
            let p = anchor_point(&b, x, rel)?;
            match check_point(polys, ineqs, &p) {
                PointCheck::Satisfied(residuals) => {
                    return Ok(KernelResult { outcome: SolveOutcome::Found { point: p, residuals }, boxes })
                }
                PointCheck::Excluded => {
                    if leaf {
                        continue;
                    }
                }
                PointCheck::Ambiguous(msg) => {
                    if leaf {
                        return Err(Error::PrecisionLoss(msg));
                    }
                }
            }
        }
        let (lo, hi) = bisect(&b);
        stack.push(hi);
        stack.push(lo);
    }
    Ok(KernelResult { outcome: SolveOutcome::Infeasible { eps }, boxes })
}

fn anchor_point(b: &AxisBox, x: &Polytope, rel: BoxRelation) -> Result<Vec<f64>> {
    let c = b.center();
    if rel == BoxRelation::Inside {
        return Ok(c);
    }
    match x.intersect_box(b) {
        Some(piece) => project(&c, &piece),
        None => project(&c, x),
    }
}

enum PointCheck {
    Satisfied(Vec<f64>),
    Excluded,
    Ambiguous(String),
}

/// Rigorous check at a single point. `Excluded` means some inequality is
/// certainly above minus half its gap there.
fn check_point(polys: &[Polynomial], ineqs: &[Inequality], p: &[f64]) -> PointCheck {
    let mut residuals = Vec::with_capacity(ineqs.len());
    let mut violated = None;
    let mut excluded = false;
    for (i, q) in ineqs.iter().enumerate() {
        let (v, e) = polys[q.poly].eval_with_error(p);
        let r = q.apply(Interval::around(v, e));
        residuals.push(q.sign * v + q.shift);
        if r.hi > 0.0 {
            violated.get_or_insert(i);
        }
        if r.lo > -q.gap / 2.0 {
            excluded = true;
        }
    }
    match violated {
        None => PointCheck::Satisfied(residuals),
        Some(_) if excluded => PointCheck::Excluded,
        Some(i) => PointCheck::Ambiguous(format!(
            "inequality {i} cannot be resolved at {p:?}: residual {:.3e} with gap {:.3e}",
            residuals[i], ineqs[i].gap
        )),
    }
}

fn bisect(b: &AxisBox) -> (AxisBox, AxisBox) {
    let mut axis = 0;
    for j in 1..b.dim() {
        if b.width(j) > b.width(axis) {
            axis = j;
        }
    }
    let m = 0.5 * (b.lo[axis] + b.hi[axis]);
    let mut lo = b.clone();
    let mut hi = b.clone();
    lo.hi[axis] = m;
    hi.lo[axis] = m;
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Halfspace;
    use crate::potential::MultiIndex;

    fn mi(s: &[u32]) -> MultiIndex {
        MultiIndex::new(s)
    }

    fn boxed(lo: &[f64], hi: &[f64]) -> (Polytope, AxisBox) {
        let b = AxisBox::new(lo.to_vec(), hi.to_vec()).unwrap();
        (Polytope::from_box(&b), b)
    }

    #[test]
    fn finds_point_under_parabola() {
        let (x, b) = boxed(&[0.0], &[2.0]);
        let p1 = Polynomial::from_terms(1, vec![0.0], &[(mi(&[2]), 1.0), (mi(&[0]), -2.0)]);
        let p2 = Polynomial::from_terms(1, vec![0.0], &[(mi(&[1]), -1.0)]);
        match solve_system(&[p1.clone(), p2.clone()], &x, &b, 0.1).unwrap() {
            SolveOutcome::Found { point, residuals } => {
                assert!(point[0] >= 0.0 && point[0] <= 2f64.sqrt());
                assert!(residuals.iter().all(|r| *r <= 0.0));
                assert!(p1.eval(&point) <= 0.0 && p2.eval(&point) <= 0.0);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn positive_polynomial_is_infeasible() {
        let (x, b) = boxed(&[-1.0], &[1.0]);
        let p = Polynomial::from_terms(1, vec![0.0], &[(mi(&[2]), 1.0), (mi(&[0]), 1.0)]);
        assert_eq!(solve_system(&[p], &x, &b, 0.5).unwrap(), SolveOutcome::Infeasible { eps: 0.5 });
    }

    #[test]
    fn finds_point_in_sliver() {
        let b = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mut rows = Polytope::from_box(&b).rows().to_vec();
        rows.push(Halfspace::new(vec![-1.0, 0.0], -0.9));
        let x = Polytope::new(2, rows).unwrap();
        let p = Polynomial::from_terms(2, vec![0.0, 0.0], &[(mi(&[2, 0]), 1.0), (mi(&[0, 2]), 1.0), (mi(&[0, 0]), -1.0)]);
        match solve_system(&[p.clone()], &x, &b, 0.01).unwrap() {
            SolveOutcome::Found { point, .. } => {
                assert!(point[0] >= 0.9 - 1e-9 && x.contains(&point));
                assert!(p.eval(&point) <= 0.0);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn budget_is_enforced() {
        let (x, b) = boxed(&[-1.0, -1.0], &[1.0, 1.0]);
        // x² + y² − 1e-8 ≤ 0 is only accepted on tiny boxes around the origin.
        let p = Polynomial::from_terms(2, vec![0.0, 0.0], &[(mi(&[2, 0]), 1.0), (mi(&[0, 2]), 1.0), (mi(&[0, 0]), -1e-8)]);
        let r = solve_inequalities(&[p], &[Inequality::new(0, 1.0, 0.0, 1e-9)], &x, &b, 5);
        assert!(matches!(r, Err(Error::BudgetExceeded { budget: 5, .. })));
    }

    #[test]
    fn subdivision_is_deterministic() {
        let (x, b) = boxed(&[-2.0, -2.0], &[2.0, 2.0]);
        let p = Polynomial::from_terms(2, vec![0.0, 0.0], &[(mi(&[2, 0]), 1.0), (mi(&[1, 1]), 1.0), (mi(&[0, 0]), -0.5)]);
        let q = Polynomial::from_terms(2, vec![0.0, 0.0], &[(mi(&[0, 1]), 1.0), (mi(&[1, 0]), -0.3)]);
        let a = solve_system(&[p.clone(), q.clone()], &x, &b, 1e-3).unwrap();
        let c = solve_system(&[p, q], &x, &b, 1e-3).unwrap();
        assert_eq!(a, c);
    }
}
