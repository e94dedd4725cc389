use super::series::{gradient_series, hessian_det_series, potential_series, Series};
use super::Polynomial;
use crate::error::{Error, Result};
use crate::interval::round_up;
use crate::grid::AxisBox;
use crate::potential::{eval_gradient, eval_potential, hessian_det, ChargeSystem, MultiIndex};

/// `k = max(1, ⌈B + lg(8/ε)⌉)`; models use polynomials of degree `k − 1`.
pub fn taylor_degree(b: u32, eps: f64) -> u32 {
    assert!(eps > 0.0, "taylor_degree needs a positive tolerance");
    let k = (b as f64 + (8.0 / eps).log2()).ceil();
    if k < 1.0 {
        1
    } else {
        k as u32
    }
}

/// A polynomial together with a certified sup-norm error over a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorModel {
    pub anchor: Vec<f64>,
    pub poly: Polynomial,
    /// Certified bound on `|g − poly|` over the cell: half truncation, half
    /// coefficient rounding.
    pub err: f64,
    pub cell: AxisBox,
    /// The `k` of the construction; the polynomial has degree `k − 1`.
    pub k: u32,
    /// Largest ratio of a coefficient's rounding error to its share of the budget.
    pub budget_use: f64,
    /// Verified truncation bound, `NaN` when not computed.
    pub truncation: f64,
}

/// A function whose Taylor coefficients can be computed with error bounds.
pub trait TaylorSource: Sync {
    fn dim(&self) -> usize;
    /// Coefficients `D^s g(anchor) / s!` for `|s| ≤ degree`.
    fn series(&self, anchor: &[f64], degree: u32) -> Result<Series>;
    /// Pointwise value, used for verification.
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// Bound on `|g − T_{k−1}|` over the cell for the expansion at `anchor`.
    fn truncation_bound(&self, cell: &AxisBox, anchor: &[f64], k: u32) -> f64;
}

/// A constant function.
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl TaylorSource for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn series(&self, _anchor: &[f64], degree: u32) -> Result<Series> {
        Ok(Series::constant(self.dim, degree, self.value))
    }
    fn value(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.value)
    }
    fn truncation_bound(&self, _cell: &AxisBox, _anchor: &[f64], _k: u32) -> f64 {
        0.0
    }
}

/// The potential `f` itself.
pub struct Potential<'a>(pub &'a ChargeSystem);

impl TaylorSource for Potential<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn series(&self, anchor: &[f64], degree: u32) -> Result<Series> {
        potential_series(self.0, anchor, degree)
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        eval_potential(self.0, x)
    }
    fn truncation_bound(&self, cell: &AxisBox, anchor: &[f64], k: u32) -> f64 {
        remainder_bound(self.0, MultiIndex::zero(self.0.dim()), cell, anchor, k)
    }
}

/// The gradient component `∂f/∂x_j`.
pub struct GradientComponent<'a> {
    pub sys: &'a ChargeSystem,
    pub axis: usize,
}

impl TaylorSource for GradientComponent<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn series(&self, anchor: &[f64], degree: u32) -> Result<Series> {
        gradient_series(&potential_series(self.sys, anchor, degree + 1)?, self.axis, degree)
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(eval_gradient(self.sys, x)?[self.axis])
    }
    fn truncation_bound(&self, cell: &AxisBox, anchor: &[f64], k: u32) -> f64 {
        remainder_bound(self.sys, MultiIndex::unit(self.sys.dim(), self.axis), cell, anchor, k)
    }
}

/// The Hessian determinant `det ∇²f`.
pub struct HessianDeterminant<'a>(pub &'a ChargeSystem);

impl TaylorSource for HessianDeterminant<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn series(&self, anchor: &[f64], degree: u32) -> Result<Series> {
        hessian_det_series(&potential_series(self.0, anchor, degree + 2)?, degree)
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        hessian_det(self.0, x)
    }
    fn truncation_bound(&self, cell: &AxisBox, anchor: &[f64], k: u32) -> f64 {
        det_remainder_bound(self.0, cell, anchor, k)
    }
}

/// Builds the degree-`k−1` Taylor model of `g` at `anchor` over `cell`.
///
/// Each coefficient must be computed to within `eps / (8 N rad^{|s|})`, where
/// `N` is the number of monomials and `rad` the cell's ∞-radius around the
/// anchor; the model's error is then `eps / 4` provided the truncation error
/// is at most `eps / 8`.
pub fn expand(g: &dyn TaylorSource, anchor: &[f64], k: u32, cell: &AxisBox, eps: f64) -> Result<TaylorModel> {
    let degree = k.saturating_sub(1);
    let series = g.series(anchor, degree)?;
    model_from_series(series, anchor, k, cell, eps)
}

/// [`expand`] with the truncation error verified: the degree grows from `k`
/// until the remainder bound is at most `eps / 8`, failing past `max_k`.
pub fn expand_certified(
    g: &dyn TaylorSource,
    anchor: &[f64],
    k: u32,
    cell: &AxisBox,
    eps: f64,
    max_k: u32,
) -> Result<TaylorModel> {
    let mut kk = k.max(1);
    loop {
        let t = g.truncation_bound(cell, anchor, kk);
        if t <= eps / 8.0 {
            let mut m = expand(g, anchor, kk, cell, eps)?;
            m.truncation = t;
            return Ok(m);
        }
        if kk >= max_k {
            return Err(Error::PrecisionLoss(format!(
                "truncation bound {t:e} exceeds {:e} at degree {}",
                eps / 8.0,
                kk - 1
            )));
        }
        kk = (kk + (kk / 4).max(2)).min(max_k);
    }
}

/// [`expand`] from precomputed coefficients.
pub fn model_from_series(series: Series, anchor: &[f64], k: u32, cell: &AxisBox, eps: f64) -> Result<TaylorModel> {
    let degree = k.saturating_sub(1);
    if series.degree != degree {
        return Err(Error::InvalidInput(format!(
            "series degree {} does not match model degree {}",
            series.degree, degree
        )));
    }
    let n = series.coeffs.len() as f64;
    let rad = cell.radius_from(anchor);
    let mut budget_use: f64 = 0.0;
    let mut rad_pow = 1.0;
    let mut rank = 0;
    for order in 0..=degree {
        let count = crate::potential::degree_offset(series.dim, order as usize + 1) - rank;
        let tol = eps / (8.0 * n * rad_pow);
        for r in rank..rank + count {
            if !series.coeffs[r].is_finite() {
                return Err(Error::DegreeOverflow { order });
            }
            let used = series.err[r] / tol;
            budget_use = budget_use.max(used);
            if used > 1.0 {
                return Err(Error::PrecisionLoss(format!(
                    "coefficient of order {order} has error {:e} above its share {:e} of the budget",
                    series.err[r], tol
                )));
            }
        }
        rank += count;
        rad_pow *= rad;
    }
    let poly = Polynomial::from_dense(series.dim, degree, anchor.to_vec(), series.coeffs);
    Ok(TaylorModel { anchor: anchor.to_vec(), poly, err: eps / 4.0, cell: cell.clone(), k, budget_use, truncation: f64::NAN })
}

/// Smallest Euclidean distance from a point to the box.
pub fn box_distance(bx: &AxisBox, a: &[f64]) -> f64 {
    (0..bx.dim())
        .map(|j| {
            let v = if a[j] < bx.lo[j] {
                bx.lo[j] - a[j]
            } else if a[j] > bx.hi[j] {
                a[j] - bx.hi[j]
            } else {
                0.0
            };
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

/// Lagrange remainder bound for the degree-`k−1` expansion of a derivative
/// `D^t f` over the cell: `M · Σ_{|s|=k} |x − x̂|^s / s! ≤ M R^k / k!`, where
/// `R = Σ_j r_j` and `M` bounds every `k`-th partial of `D^t f` on the cell.
/// Evaluated per charge as `|q| (|t|+k)!/k! · 2^{|t|} / r^{|t|+1} · (2R/r)^k`.
pub fn remainder_bound(sys: &ChargeSystem, t: MultiIndex, cell: &AxisBox, anchor: &[f64], k: u32) -> f64 {
    let big_r = l1_radius(cell, anchor);
    let tt = t.order();
    let rising: f64 = (k + 1..=k + tt).map(|i| i as f64).product();
    let total: f64 = sys
        .charges()
        .iter()
        .map(|c| {
            let r = box_distance(cell, &c.position);
            if r <= 0.0 {
                return f64::INFINITY;
            }
            c.q.abs() * rising * 2f64.powi(tt as i32) / r.powi(tt as i32 + 1) * (2.0 * big_r / r).powi(k as i32)
        })
        .sum();
    round_up(total * (1.0 + 1e-12))
}

/// Remainder bound for the degree-`k−1` expansion of `det ∇²f`.
///
/// Along the segment from the anchor, each Hessian entry `h` has
/// `|d^j/dt^j h| ≤ R^j H_j` with `H_j = Σ_c |q| (j+2)! 2^{j+2} / r_c^{j+3}`.
/// By the Leibniz rule each of the `d!` products of `d` entries has `k`-th
/// derivative at most `k! · [z^k] (Σ_j H_j R^j z^j / j!)^d`.
pub fn det_remainder_bound(sys: &ChargeSystem, cell: &AxisBox, anchor: &[f64], k: u32) -> f64 {
    let d = sys.dim();
    let big_r = l1_radius(cell, anchor);
    let k = k as usize;
    let mut a = vec![0.0; k + 1];
    for c in sys.charges() {
        let r = box_distance(cell, &c.position);
        if r <= 0.0 {
            return f64::INFINITY;
        }
        let ratio = 2.0 * big_r / r;
        let base = 4.0 * c.q.abs() / (r * r * r);
        for (j, v) in a.iter_mut().enumerate() {
            *v += base * ((j + 1) * (j + 2)) as f64 * ratio.powi(j as i32);
        }
    }
    let mut acc = a.clone();
    for _ in 1..d {
        let mut next = vec![0.0; k + 1];
        for (i, x) in acc.iter().enumerate() {
            for (j, y) in a.iter().enumerate().take(k + 1 - i) {
                next[i + j] += x * y;
            }
        }
        acc = next;
    }
    let perms: f64 = (1..=d).map(|i| i as f64).product();
    round_up(perms * acc[k] * (1.0 + 1e-12))
}

fn l1_radius(cell: &AxisBox, anchor: &[f64]) -> f64 {
    (0..cell.dim()).map(|j| (cell.hi[j] - anchor[j]).abs().max((anchor[j] - cell.lo[j]).abs())).sum()
}
