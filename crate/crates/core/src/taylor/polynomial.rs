use crate::grid::AxisBox;
use crate::interval::{gamma, round_up};
use crate::potential::{indices_up_to, monomial_count, MultiIndex};

/// Dense multivariate polynomial in the local coordinates `y = x − anchor`.
/// Coefficients are stored in graded order (see [`MultiIndex::rank`]) up to
/// a storage degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    max_degree: u32,
    anchor: Vec<f64>,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zeros(dim: usize, max_degree: u32, anchor: Vec<f64>) -> Self {
        assert_eq!(anchor.len(), dim);
        Self { dim, max_degree, anchor, coeffs: vec![0.0; monomial_count(dim, max_degree as usize)] }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zeros(dim, 0, vec![0.0; dim]);
        p.coeffs[0] = c;
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs.
    pub fn from_terms(dim: usize, anchor: Vec<f64>, terms: &[(MultiIndex, f64)]) -> Self {
        let deg = terms.iter().map(|(s, _)| s.order()).max().unwrap_or(0);
        let mut p = Self::zeros(dim, deg, anchor);
        for (s, c) in terms {
            p.coeffs[s.rank()] += c;
        }
        p
    }

    /// Takes ownership of a coefficient vector in graded order.
    pub fn from_dense(dim: usize, max_degree: u32, anchor: Vec<f64>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), monomial_count(dim, max_degree as usize));
        Self { dim, max_degree, anchor, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// Storage degree (an upper bound on [`Polynomial::degree`]).
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, s: MultiIndex) -> f64 {
        let r = s.rank();
        if r < self.coeffs.len() {
            self.coeffs[r]
        } else {
            0.0
        }
    }

    /// Largest `|s|` with a nonzero coefficient; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms().map(|(s, _)| s.order()).max().unwrap_or(0)
    }

    /// Nonzero terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        indices_up_to(self.dim, self.max_degree)
            .into_iter()
            .zip(self.coeffs.iter().copied())
            .filter(|(_, c)| *c != 0.0)
    }

    /// Value at the absolute point `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with_error(x).0
    }

    /// Value at `x` and a bound on the floating-point evaluation error.
    pub fn eval_with_error(&self, x: &[f64]) -> (f64, f64) {
        let y: Vec<f64> = x.iter().zip(&self.anchor).map(|(a, b)| a - b).collect();
        let pows = powers(&y, self.max_degree);
        let mut sum = 0.0;
        let mut mag = 0.0;
        for (r, s) in indices_up_to(self.dim, self.max_degree).iter().enumerate() {
            let c = self.coeffs[r];
            if c == 0.0 {
                continue;
            }
            let mut m = c;
            for j in 0..self.dim {
                m *= pows[j][s.get(j) as usize];
            }
            sum += m;
            mag += m.abs();
        }
        let ops = self.coeffs.len() + (self.max_degree as usize + 2) * (self.dim + 2);
        (sum, round_up(gamma(ops) * mag))
    }
}

/// `pows[j][p] = y_j^p` for `p ≤ deg`.
pub(crate) fn powers(y: &[f64], deg: u32) -> Vec<Vec<f64>> {
    y.iter()
        .map(|&v| {
            let mut row = Vec::with_capacity(deg as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=deg {
                row.push(acc);
                acc *= v;
            }
            row
        })
        .collect()
}

/// Upper bound on `sup_{x ∈ box} ‖∇p(x)‖₂` from coefficient magnitudes and the
/// largest coordinate magnitudes of the box in local coordinates.
pub fn lipschitz_bound(poly: &Polynomial, bx: &AxisBox) -> f64 {
    let d = poly.dim();
    let radius: Vec<f64> = (0..d)
        .map(|j| round_up((bx.lo[j] - poly.anchor[j]).abs().max((bx.hi[j] - poly.anchor[j]).abs())))
        .collect();
    let pows = powers(&radius, poly.max_degree);
    let mut grad = vec![0.0; d];
    for (s, c) in poly.terms() {
        for (j, g) in grad.iter_mut().enumerate() {
            let sj = s.get(j);
            if sj == 0 {
                continue;
            }
            let mut m = c.abs() * sj as f64;
            for i in 0..d {
                let e = s.get(i) - u32::from(i == j);
                m *= pows[i][e as usize];
            }
            *g += m;
        }
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    round_up(norm * (1.0 + gamma(poly.coeffs.len() + 4 * (poly.max_degree as usize + d + 2))))
}
