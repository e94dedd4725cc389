use crate::error::{Error, Result};
use crate::interval::{gamma, round_up};
use crate::potential::{degree_offset, indices_up_to, monomial_count, unit_table, ChargeSystem, MultiIndex};
use crate::wellbehaved::permutations;

/// Truncated Taylor coefficients `D^s g(anchor) / s!` for `|s| ≤ degree`, in
/// graded order, each with an absolute error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub dim: usize,
    pub degree: u32,
    pub coeffs: Vec<f64>,
    pub err: Vec<f64>,
}

impl Series {
    pub fn zeros(dim: usize, degree: u32) -> Self {
        let n = monomial_count(dim, degree as usize);
        Self { dim, degree, coeffs: vec![0.0; n], err: vec![0.0; n] }
    }

    pub fn constant(dim: usize, degree: u32, c: f64) -> Self {
        let mut s = Self::zeros(dim, degree);
        s.coeffs[0] = c;
        s
    }

    /// Series of `D^t g` from the series of `g`, keeping `degree` orders.
    pub fn partial(&self, t: MultiIndex, degree: u32) -> Result<Series> {
        if t.order() + degree > self.degree {
            return Err(Error::InvalidInput(format!(
                "series of order {} cannot supply {} orders of a derivative of order {}",
                self.degree,
                degree,
                t.order()
            )));
        }
        let mut out = Series::zeros(self.dim, degree);
        for (r, s) in indices_up_to(self.dim, degree).iter().enumerate() {
            let src = s.add(&t);
            // (s + t)! / s!
            let mut factor = 1.0;
            for j in 0..self.dim {
                for i in 1..=t.get(j) {
                    factor *= (s.get(j) + i) as f64;
                }
            }
            let v = self.coeffs[src.rank()] * factor;
            out.coeffs[r] = v;
            out.err[r] = round_up(self.err[src.rank()] * factor + gamma(t.order() as usize + 2) * v.abs());
        }
        Ok(out)
    }

    /// Truncated product, keeping orders up to `min(self.degree, other.degree)`.
    pub fn mul(&self, other: &Series) -> Series {
        let degree = self.degree.min(other.degree);
        let idx = indices_up_to(self.dim, degree);
        let mut out = Series::zeros(self.dim, degree);
        let mut mag = vec![0.0; out.coeffs.len()];
        let mut count = vec![0usize; out.coeffs.len()];
        for (ra, a) in idx.iter().enumerate() {
            let (ca, ea) = (self.coeffs[ra], self.err[ra]);
            if ca == 0.0 && ea == 0.0 {
                continue;
            }
            let rest = degree - a.order();
            let nb = monomial_count(self.dim, rest as usize);
            for (rb, b) in idx[..nb].iter().enumerate() {
                let (cb, eb) = (other.coeffs[rb], other.err[rb]);
                let r = a.add(b).rank();
                let p = ca * cb;
                out.coeffs[r] += p;
                mag[r] += p.abs();
                count[r] += 1;
                out.err[r] += ca.abs() * eb + ea * cb.abs() + ea * eb;
            }
        }
        for r in 0..out.coeffs.len() {
            out.err[r] = round_up((out.err[r] + gamma(count[r] + 2) * mag[r]) * (1.0 + gamma(count[r] + 2)));
        }
        out
    }

    /// `Σ c_i · s_i` over series of equal shape.
    pub fn linear_combination(items: &[(f64, &Series)]) -> Series {
        let first = items[0].1;
        let mut out = Series::zeros(first.dim, first.degree);
        let mut mag = vec![0.0; out.coeffs.len()];
        for (c, s) in items {
            for r in 0..out.coeffs.len() {
                let v = c * s.coeffs[r];
                out.coeffs[r] += v;
                mag[r] += v.abs();
                out.err[r] += c.abs() * s.err[r];
            }
        }
        let g = gamma(2 * items.len() + 2);
        for r in 0..out.coeffs.len() {
            out.err[r] = round_up((out.err[r] + g * mag[r]) * (1.0 + g));
        }
        out
    }
}

/// Taylor series of the potential itself at `anchor` up to `order`.
pub fn potential_series(sys: &ChargeSystem, anchor: &[f64], order: u32) -> Result<Series> {
    let d = sys.dim();
    let table = unit_table(d, order)?;
    let n = monomial_count(d, order as usize);
    let mut out = Series::zeros(d, order);
    let mut mag_total = vec![0.0; n];
    for (ci, c) in sys.charges().iter().enumerate() {
        let w: Vec<f64> = anchor.iter().zip(&c.position).map(|(a, b)| a - b).collect();
        let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::SingularPoint { charge: ci });
        }
        let u: Vec<f64> = w.iter().map(|v| v / r).collect();
        let upow = super::polynomial::powers(&u, order);
        let mut rinv = Vec::with_capacity(order as usize + 1);
        let mut acc = c.q / r;
        for _ in 0..=order {
            rinv.push(acc);
            acc /= r;
        }
        for (rank, k) in (0..=order).flat_map(|k| (degree_offset(d, k as usize)..degree_offset(d, k as usize + 1)).map(move |r| (r, k))) {
            let (a, b) = table.ranges[rank];
            let terms = &table.terms[a as usize..b as usize];
            let mut sum = 0.0;
            let mut mag = 0.0;
            for t in terms {
                let mut p = t.coef;
                for j in 0..d {
                    p *= upow[j][t.num[j] as usize];
                }
                sum += p;
                mag += p.abs();
            }
            let scale = rinv[k as usize];
            if !(scale * mag).is_finite() {
                return Err(Error::DegreeOverflow { order: k });
            }
            out.coeffs[rank] += scale * sum;
            let m = terms.len() + 4 * (k as usize + 2) * (d + 4);
            let local = (scale * mag).abs();
            out.err[rank] += gamma(m) * local;
            mag_total[rank] += local;
        }
    }
    let g = gamma(2 * sys.len() + 2);
    for r in 0..n {
        out.err[r] = round_up((out.err[r] + g * mag_total[r]) * (1.0 + g));
    }
    Ok(out)
}

/// Series of `∂_j f` with `degree` orders.
pub fn gradient_series(f: &Series, j: usize, degree: u32) -> Result<Series> {
    f.partial(MultiIndex::unit(f.dim, j), degree)
}

/// Series of `det ∇²f` with `degree` orders, expanded over permutations.
pub fn hessian_det_series(f: &Series, degree: u32) -> Result<Series> {
    let d = f.dim;
    let mut h = vec![vec![None; d]; d];
    for i in 0..d {
        for j in i..d {
            let s = f.partial(MultiIndex::unit(d, i).plus_unit(j), degree)?;
            h[i][j] = Some(s.clone());
            h[j][i] = Some(s);
        }
    }
    let terms: Vec<(f64, Series)> = permutations(d)
        .into_iter()
        .map(|(perm, sign)| {
            let mut prod = h[0][perm[0]].clone().unwrap();
            for (i, &p) in perm.iter().enumerate().skip(1) {
                prod = prod.mul(h[i][p].as_ref().unwrap());
            }
            (sign, prod)
        })
        .collect();
    let refs: Vec<(f64, &Series)> = terms.iter().map(|(c, s)| (*c, s)).collect();
    Ok(Series::linear_combination(&refs))
}
