//! Interval enclosures of the gradient and Hessian over a box.

use super::{ChargeSystem, MAX_DIM};
use crate::interval::Interval;

struct ChargeTerms {
    q: Interval,
    w: [Interval; MAX_DIM],
    /// `1 / r³` and `1 / r⁵`.
    inv_r3: Interval,
    inv_r5: Interval,
}

fn charge_terms(sys: &ChargeSystem, bx: &[Interval]) -> Option<Vec<ChargeTerms>> {
    let d = sys.dim();
    let mut out = Vec::with_capacity(sys.len());
    for c in sys.charges() {
        let mut w = [Interval::point(0.0); MAX_DIM];
        let mut r2 = Interval::point(0.0);
        for j in 0..d {
            w[j] = bx[j] - Interval::point(c.position[j]);
            r2 = r2 + w[j].sqr();
        }
        if r2.lo <= 0.0 {
            return None;
        }
        let r = r2.sqrt();
        let r3 = r2 * r;
        out.push(ChargeTerms { q: Interval::point(c.q), w, inv_r3: r3.recip(), inv_r5: (r3 * r2).recip() });
    }
    Some(out)
}

/// Enclosure of each gradient component over the box; unbounded intervals when
/// the box may contain a charge.
pub fn gradient_enclosure(sys: &ChargeSystem, bx: &[Interval]) -> Vec<Interval> {
    let d = sys.dim();
    let Some(terms) = charge_terms(sys, bx) else {
        return vec![Interval::ENTIRE; d];
    };
    (0..d)
        .map(|j| {
            terms
                .iter()
                .fold(Interval::point(0.0), |acc, t| acc - t.q * t.w[j] * t.inv_r3)
        })
        .collect()
}

/// Enclosure of the Hessian over the box.
pub fn hessian_enclosure(sys: &ChargeSystem, bx: &[Interval]) -> Vec<Vec<Interval>> {
    let d = sys.dim();
    let Some(terms) = charge_terms(sys, bx) else {
        return vec![vec![Interval::ENTIRE; d]; d];
    };
    let three = Interval::point(3.0);
    let mut h = vec![vec![Interval::point(0.0); d]; d];
    for t in &terms {
        for i in 0..d {
            for j in i..d {
                let v = if i == j {
                    // q (3 w_i² − r²) / r⁵ = q (3 w_i² r^{-5} − r^{-3})
                    t.q * (three * t.w[i].sqr() * t.inv_r5 - t.inv_r3)
                } else {
                    t.q * three * t.w[i] * t.w[j] * t.inv_r5
                };
                h[i][j] = h[i][j] + v;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            h[i][j] = h[j][i];
        }
    }
    h
}

/// Enclosure of `det ∇²f` over the box.
pub fn hessian_det_enclosure(sys: &ChargeSystem, bx: &[Interval]) -> Interval {
    interval_det(&hessian_enclosure(sys, bx))
}

fn interval_det(m: &[Vec<Interval>]) -> Interval {
    match m.len() {
        0 => Interval::point(1.0),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => {
            let mut det = Interval::point(0.0);
            for col in 0..n {
                let minor: Vec<Vec<Interval>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| *v).collect())
                    .collect();
                let term = m[0][col] * interval_det(&minor);
                det = if col % 2 == 0 { det + term } else { det - term };
            }
            det
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{eval_gradient, hessian_det};

    #[test]
    fn enclosures_contain_point_values() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0])]).unwrap();
        let bx = [Interval::new(0.3, 0.5), Interval::new(-0.1, 0.2)];
        let g = gradient_enclosure(&sys, &bx);
        let det = hessian_det_enclosure(&sys, &bx);
        for i in 0..=10 {
            for j in 0..=10 {
                let x = [0.3 + 0.02 * i as f64, -0.1 + 0.03 * j as f64];
                let gv = eval_gradient(&sys, &x).unwrap();
                assert!(g[0].contains(gv[0]) && g[1].contains(gv[1]));
                assert!(det.contains(hessian_det(&sys, &x).unwrap()));
            }
        }
    }

    #[test]
    fn box_around_charge_is_unbounded() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0])]).unwrap();
        let bx = [Interval::new(-0.1, 0.1), Interval::new(-0.1, 0.1)];
        assert_eq!(gradient_enclosure(&sys, &bx)[0], Interval::ENTIRE);
    }
}
