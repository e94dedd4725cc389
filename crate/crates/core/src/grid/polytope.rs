use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::AxisBox;
use crate::error::{Error, Result};

/// Half-space `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.offset
    }

    fn norm(&self) -> f64 {
        self.normal.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `(min, max)` of `normal · x` over a box.
    fn range_over(&self, b: &AxisBox) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (j, a) in self.normal.iter().enumerate() {
            let (u, v) = (a * b.lo[j], a * b.hi[j]);
            lo += u.min(v);
            hi += u.max(v);
        }
        (lo, hi)
    }
}

/// How a box sits relative to a polytope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxRelation {
    Inside,
    Outside,
    Unknown,
}

/// Bounded convex polytope `{x : A x ≤ b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    rows: Vec<Halfspace>,
    bbox: AxisBox,
    is_box: bool,
}

/// Feasibility slack used for membership tests, relative to the row norm.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

impl Polytope {
    /// Validates the rows and computes the bounding box by linear optimization.
    pub fn new(dim: usize, rows: Vec<Halfspace>) -> Result<Self> {
        if dim == 0 || dim > crate::potential::MAX_DIM {
            return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
        }
        for r in &rows {
            if r.normal.len() != dim || r.normal.iter().any(|v| !v.is_finite()) || !r.offset.is_finite() {
                return Err(Error::InvalidInput("malformed polytope row".into()));
            }
        }
        let is_box = rows.iter().all(|r| r.normal.iter().filter(|v| **v != 0.0).count() == 1);
        let bbox = if is_box { box_from_axis_rows(dim, &rows)? } else { lp_bounding_box(dim, &rows)? };
        Ok(Self { dim, rows, bbox, is_box })
    }

    pub fn from_box(b: &AxisBox) -> Self {
        let d = b.dim();
        let mut rows = Vec::with_capacity(2 * d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            rows.push(Halfspace::new(e.clone(), b.hi[j]));
            e[j] = -1.0;
            rows.push(Halfspace::new(e, -b.lo[j]));
        }
        Self { dim: d, rows, bbox: b.clone(), is_box: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn bounding_box(&self) -> &AxisBox {
        &self.bbox
    }

    /// Whether the polytope coincides with its bounding box.
    pub fn is_box(&self) -> bool {
        self.is_box
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, MEMBERSHIP_TOL)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        self.bbox.inflate(tol).contains(x)
            && self.rows.iter().all(|r| r.eval(x) <= tol * r.norm().max(1.0) * (1.0 + r.offset.abs()))
    }

    /// Quick classification from per-row extremes over the box; `Unknown`
    /// when no single row decides.
    pub fn relation(&self, b: &AxisBox) -> BoxRelation {
        if !self.bbox.intersects(b) {
            return BoxRelation::Outside;
        }
        let mut inside = true;
        for r in &self.rows {
            let (lo, hi) = r.range_over(b);
            if lo > r.offset {
                return BoxRelation::Outside;
            }
            if hi > r.offset {
                inside = false;
            }
        }
        if inside {
            BoxRelation::Inside
        } else {
            BoxRelation::Unknown
        }
    }

    /// Whether the box and the polytope share a point.
    pub fn intersects_box(&self, b: &AxisBox) -> bool {
        match self.relation(b) {
            BoxRelation::Inside => true,
            BoxRelation::Outside => false,
            BoxRelation::Unknown => {
                if self.is_box {
                    return true;
                }
                self.rows_with_box(b).map(|rows| lp_feasible(self.dim, &rows)).unwrap_or(false)
            }
        }
    }

    fn rows_with_box(&self, b: &AxisBox) -> Option<Vec<Halfspace>> {
        let clipped = self.bbox.intersection(b)?;
        let mut rows: Vec<Halfspace> = self.rows.clone();
        rows.extend(Polytope::from_box(&clipped).rows);
        Some(rows)
    }

    /// The polytope `self ∩ b`, or `None` when empty.
    pub fn intersect_box(&self, b: &AxisBox) -> Option<Polytope> {
        if self.is_box {
            let clipped = self.bbox.intersection(b)?;
            return Some(Polytope::from_box(&clipped));
        }
        match self.relation(b) {
            BoxRelation::Outside => None,
            BoxRelation::Inside => Some(Polytope::from_box(b)),
            BoxRelation::Unknown => {
                let rows = self.rows_with_box(b)?;
                Polytope::new(self.dim, rows).ok()
            }
        }
    }

    /// Maximum of `c · x` over the polytope.
    pub fn maximize(&self, c: &[f64]) -> Result<f64> {
        lp_extreme(self.dim, &self.rows, c, OptimizationDirection::Maximize)
    }
}

fn box_from_axis_rows(dim: usize, rows: &[Halfspace]) -> Result<AxisBox> {
    let mut lo = vec![f64::NEG_INFINITY; dim];
    let mut hi = vec![f64::INFINITY; dim];
    for r in rows {
        let (j, a) = r.normal.iter().enumerate().find(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).unwrap();
        let bound = r.offset / a;
        if a > 0.0 {
            hi[j] = hi[j].min(bound);
        } else {
            lo[j] = lo[j].max(bound);
        }
    }
    for j in 0..dim {
        if !lo[j].is_finite() || !hi[j].is_finite() {
            return Err(Error::UnboundedDomain { axis: j });
        }
        if lo[j] > hi[j] {
            return Err(Error::EmptyPolytope);
        }
    }
    Ok(AxisBox { lo, hi })
}

fn lp_problem(dim: usize, rows: &[Halfspace], c: &[f64], dir: OptimizationDirection) -> (Problem, Vec<microlp::Variable>) {
    let mut p = Problem::new(dir);
    let vars: Vec<_> = (0..dim).map(|j| p.add_var(c[j], (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for r in rows {
        let terms: Vec<_> = vars.iter().zip(&r.normal).filter(|(_, a)| **a != 0.0).map(|(v, a)| (*v, *a)).collect();
        if terms.is_empty() {
            continue;
        }
        p.add_constraint(&terms[..], ComparisonOp::Le, r.offset);
    }
    (p, vars)
}

fn lp_extreme(dim: usize, rows: &[Halfspace], c: &[f64], dir: OptimizationDirection) -> Result<f64> {
    if rows.iter().any(|r| r.normal.iter().all(|v| *v == 0.0) && r.offset < 0.0) {
        return Err(Error::EmptyPolytope);
    }
    let (p, _) = lp_problem(dim, rows, c, dir);
    match p.solve() {
        Ok(outcome) => outcome
            .into_solution()
            .map(|s| s.objective())
            .map_err(|_| Error::LinearProgram("solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Err(Error::EmptyPolytope),
        Err(microlp::Error::Unbounded) => {
            let axis = c.iter().position(|v| *v != 0.0).unwrap_or(0);
            Err(Error::UnboundedDomain { axis })
        }
        Err(e) => Err(Error::LinearProgram(e.to_string())),
    }
}

fn lp_feasible(dim: usize, rows: &[Halfspace]) -> bool {
    lp_extreme(dim, rows, &vec![0.0; dim], OptimizationDirection::Maximize).is_ok()
}

fn lp_bounding_box(dim: usize, rows: &[Halfspace]) -> Result<AxisBox> {
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        hi[j] = lp_extreme(dim, rows, &e, OptimizationDirection::Maximize)
            .map_err(|err| if let Error::UnboundedDomain { .. } = err { Error::UnboundedDomain { axis: j } } else { err })?;
        lo[j] = lp_extreme(dim, rows, &e, OptimizationDirection::Minimize)
            .map_err(|err| if let Error::UnboundedDomain { .. } = err { Error::UnboundedDomain { axis: j } } else { err })?;
        if lo[j] > hi[j] {
            // Solver tolerance can cross the bounds of a degenerate polytope.
            let m = 0.5 * (lo[j] + hi[j]);
            lo[j] = m;
            hi[j] = m;
        }
    }
    Ok(AxisBox { lo, hi })
}
