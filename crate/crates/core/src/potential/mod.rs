//! Point-charge configurations and the potential `f(x) = Σ q_i / ‖x − a_i‖₂`.
//!
//! A [`ChargeSystem`] keeps the charges as given together with the scale
//! factors that bring them to normalized form (smallest `|q|` equal to one and
//! smallest pairwise ∞-separation equal to one). Evaluation functions work in
//! the caller's units; the solvers work on [`ChargeSystem::normalized`].

mod enclosure;
mod expansion;
mod multiindex;

pub use enclosure::{gradient_enclosure, hessian_det_enclosure, hessian_enclosure};
pub use expansion::{
    derivative_bound, derivative_terms, eval_partial, DerivativeExpansion, PolyTerm, MAX_ORDER,
};
pub(crate) use expansion::unit_table;
pub use multiindex::{
    binomial, degree_offset, factorial, indices_of_order, indices_up_to, monomial_count,
    MultiIndex,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 4;

/// A point is treated as sitting on a charge when its normalized ∞-distance
/// to the charge is below this guard.
pub const SINGULAR_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub q: f64,
    pub position: Vec<f64>,
}

impl Charge {
    pub fn new(q: f64, position: Vec<f64>) -> Result<Self> {
        if q == 0.0 || !q.is_finite() {
            return Err(Error::InvalidInput(format!("charge magnitude must be finite and nonzero, got {q}")));
        }
        if position.is_empty() || position.len() > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "charge position must have 1 to {MAX_DIM} coordinates, got {}",
                position.len()
            )));
        }
        if position.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("charge position must be finite".into()));
        }
        Ok(Self { q, position })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSystem {
    dim: usize,
    charges: Vec<Charge>,
    q_max: f64,
    a_max: f64,
    scale_q: f64,
    scale_x: f64,
}

impl ChargeSystem {
    pub fn new(charges: Vec<Charge>) -> Result<Self> {
        let first = charges
            .first()
            .ok_or_else(|| Error::InvalidInput("a charge system needs at least one charge".into()))?;
        let dim = first.dim();
        for c in &charges {
            if c.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "charge dimensions disagree: {} vs {}",
                    c.dim(),
                    dim
                )));
            }
            // Re-run the per-charge checks for values built by struct literal.
            Charge::new(c.q, c.position.clone())?;
        }
        let mut min_sep = f64::INFINITY;
        let mut max_sep: f64 = 0.0;
        for i in 0..charges.len() {
            for k in i + 1..charges.len() {
                let sep = inf_distance(&charges[i].position, &charges[k].position);
                if sep == 0.0 {
                    return Err(Error::CoincidentCharges(i, k));
                }
                min_sep = min_sep.min(sep);
                max_sep = max_sep.max(sep);
            }
        }
        let scale_q = charges.iter().map(|c| c.q.abs()).fold(f64::INFINITY, f64::min);
        let scale_x = if charges.len() >= 2 { min_sep } else { 1.0 };
        let q_max = charges.iter().map(|c| c.q.abs()).fold(0.0, f64::max) / scale_q;
        Ok(Self { dim, charges, q_max, a_max: max_sep / scale_x, scale_q, scale_x })
    }

    /// Convenience constructor from `(q, position)` pairs.
    pub fn from_pairs(pairs: &[(f64, &[f64])]) -> Result<Self> {
        let charges = pairs
            .iter()
            .map(|(q, a)| Charge::new(*q, a.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(charges)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    /// Largest `|q_i|` after normalization.
    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    /// Largest pairwise ∞-separation after normalization (diagnostic only).
    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn scale_q(&self) -> f64 {
        self.scale_q
    }

    pub fn scale_x(&self) -> f64 {
        self.scale_x
    }

    /// Whether the stored charges are already in normalized form.
    pub fn is_normalized(&self) -> bool {
        self.scale_q == 1.0 && self.scale_x == 1.0
    }

    /// The same configuration in normalized units.
    pub fn normalized(&self) -> ChargeSystem {
        let charges = self
            .charges
            .iter()
            .map(|c| Charge {
                q: c.q / self.scale_q,
                position: c.position.iter().map(|v| v / self.scale_x).collect(),
            })
            .collect();
        ChargeSystem {
            dim: self.dim,
            charges,
            q_max: self.q_max,
            a_max: self.a_max,
            scale_q: 1.0,
            scale_x: 1.0,
        }
    }

    /// Maps a point to normalized coordinates.
    pub fn to_normalized(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v / self.scale_x).collect()
    }

    /// Maps a point from normalized coordinates back to the caller's units.
    pub fn from_normalized(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| v * self.scale_x).collect()
    }

    /// Factor converting a normalized gradient into the caller's units.
    pub fn gradient_scale(&self) -> f64 {
        self.scale_q / (self.scale_x * self.scale_x)
    }

    /// Factor converting a normalized Hessian entry into the caller's units.
    pub fn hessian_scale(&self) -> f64 {
        self.scale_q / (self.scale_x * self.scale_x * self.scale_x)
    }

    /// Factor converting a normalized Hessian determinant into the caller's units.
    pub fn det_scale(&self) -> f64 {
        self.hessian_scale().powi(self.dim as i32)
    }

    /// Same positions with every charge negated.
    pub fn negated(&self) -> ChargeSystem {
        let mut out = self.clone();
        for c in &mut out.charges {
            c.q = -c.q;
        }
        out
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, system has dimension {}",
                x.len(),
                self.dim
            )));
        }
        for (i, c) in self.charges.iter().enumerate() {
            if inf_distance(x, &c.position) / self.scale_x < SINGULAR_GUARD {
                return Err(Error::SingularPoint { charge: i });
            }
        }
        Ok(())
    }

    /// Smallest Euclidean distance from `x` to a charge.
    pub fn min_distance(&self, x: &[f64]) -> f64 {
        self.charges
            .iter()
            .map(|c| euclidean(x, &c.position))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn inf_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn eval_potential(sys: &ChargeSystem, x: &[f64]) -> Result<f64> {
    sys.check_point(x)?;
    Ok(sys.charges.iter().map(|c| c.q / euclidean(x, &c.position)).sum())
}

pub fn eval_gradient(sys: &ChargeSystem, x: &[f64]) -> Result<Vec<f64>> {
    sys.check_point(x)?;
    let mut g = vec![0.0; sys.dim];
    for c in &sys.charges {
        let r = euclidean(x, &c.position);
        let f = c.q / (r * r * r);
        for (gl, (xl, al)) in g.iter_mut().zip(x.iter().zip(&c.position)) {
            *gl -= f * (xl - al);
        }
    }
    Ok(g)
}

/// `‖∇f(x)‖∞`.
pub fn gradient_norm(sys: &ChargeSystem, x: &[f64]) -> Result<f64> {
    Ok(eval_gradient(sys, x)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub fn hessian(sys: &ChargeSystem, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    sys.check_point(x)?;
    let d = sys.dim;
    let mut h = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s = MultiIndex::unit(d, i).plus_unit(j);
            let v = eval_partial(sys, s, x)?;
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok(h)
}

pub fn hessian_det(sys: &ChargeSystem, x: &[f64]) -> Result<f64> {
    Ok(determinant(&hessian(sys, x)?))
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut det = 0.0;
            for col in 0..n {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| *v).collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * m[0][col] * determinant(&minor);
            }
            det
        }
    }
}

/// Matrix inverse by Gauss–Jordan elimination with partial pivoting; `None`
/// when a pivot vanishes.
pub fn inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}
