use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::grid::AxisBox;
use crate::interval::{add_down, add_up, gamma, round_up, Interval};
use crate::potential::indices_up_to;
use crate::taylor::Polynomial;

/// For each axis, the monomial chains `s + k·e_j` (`s_j = 0`) as rank lists.
struct ShiftPlan {
    chains: Vec<Vec<Vec<usize>>>,
    exponents: Vec<[u16; 4]>,
    binom: Vec<Vec<f64>>,
}

fn shift_plan(dim: usize, deg: u32) -> Arc<ShiftPlan> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<ShiftPlan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&(dim, deg)) {
        return p.clone();
    }
    let idx = indices_up_to(dim, deg);
    let mut chains = vec![Vec::new(); dim];
    for (j, axis_chains) in chains.iter_mut().enumerate() {
        for s in idx.iter().filter(|s| s.get(j) == 0) {
            let mut chain = vec![s.rank()];
            let mut t = *s;
            for _ in s.order()..deg {
                t = t.plus_unit(j);
                chain.push(t.rank());
            }
            if chain.len() > 1 {
                axis_chains.push(chain);
            }
        }
    }
    let exponents = idx
        .iter()
        .map(|s| {
            let mut e = [0u16; 4];
            for (j, v) in e.iter_mut().enumerate().take(dim) {
                *v = s.get(j) as u16;
            }
            e
        })
        .collect();
    let n = deg as usize + 1;
    let mut binom = vec![vec![0.0; n]; n];
    for k in 0..n {
        binom[k][0] = 1.0;
        for t in 1..=k {
            binom[k][t] = binom[k - 1][t - 1] + if t < k { binom[k - 1][t] } else { 0.0 };
        }
    }
    let plan = Arc::new(ShiftPlan { chains, exponents, binom });
    cache.lock().unwrap().insert((dim, deg), plan.clone());
    plan
}

/// Re-expands coefficients around `anchor + shift`, returning the new
/// coefficients together with absolute error bounds.
fn taylor_shift(poly: &Polynomial, shift: &[f64], plan: &ShiftPlan) -> (Vec<f64>, Vec<f64>) {
    let mut a = poly.coeffs().to_vec();
    let mut err = vec![0.0; a.len()];
    let len = poly.max_degree() as usize + 1;
    let g = gamma(2 * len + 4);
    let mut pw = vec![1.0; len];
    let mut buf_a = vec![0.0; len];
    let mut buf_e = vec![0.0; len];
    for (j, &h) in shift.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        for k in 1..len {
            pw[k] = pw[k - 1] * h.abs();
        }
        for chain in &plan.chains[j] {
            let l = chain.len();
            for t in 0..l {
                let mut v = 0.0;
                let mut mag = 0.0;
                let mut e = 0.0;
                for k in t..l {
                    let c = a[chain[k]];
                    let w = plan.binom[k][t] * pw[k - t];
                    let signed = if h < 0.0 && (k - t) % 2 == 1 { -w } else { w };
                    v += signed * c;
                    mag += w * c.abs();
                    e += w * err[chain[k]];
                }
                buf_a[t] = v;
                buf_e[t] = round_up(e + g * mag);
            }
            for t in 0..l {
                a[chain[t]] = buf_a[t];
                err[chain[t]] = round_up(buf_e[t] * (1.0 + g));
            }
        }
    }
    (a, err)
}

/// Enclosure of the range of `poly` over `bx`.
///
/// The polynomial is re-centered at the box midpoint and each monomial is
/// bounded by interval powers of the centered coordinates, so even powers
/// contribute non-negative ranges.
pub fn eval_poly_interval(poly: &Polynomial, bx: &AxisBox) -> Interval {
    let d = poly.dim();
    let deg = poly.max_degree();
    let anchor = poly.anchor();
    let mid = bx.center();
    let shift: Vec<f64> = (0..d).map(|j| mid[j] - anchor[j]).collect();
    let plan = shift_plan(d, deg);
    let (b, e) = taylor_shift(poly, &shift, &plan);
    let n = deg as usize + 1;
    let mut pows: Vec<Vec<Interval>> = Vec::with_capacity(d);
    for j in 0..d {
        let lo = add_down(add_down(bx.lo[j], -anchor[j]), -shift[j]);
        let hi = add_up(add_up(bx.hi[j], -anchor[j]), -shift[j]);
        let z = Interval::new(lo.min(hi), hi.max(lo));
        let mut p = vec![Interval::point(1.0); n];
        for k in 1..n {
            p[k] = if k % 2 == 0 { p[k / 2].sqr() } else { p[k - 1] * z };
        }
        pows.push(p);
    }
    let mut acc = Interval::point(0.0);
    for (r, (&c, &err)) in b.iter().zip(&e).enumerate() {
        if c == 0.0 && err == 0.0 {
            continue;
        }
        let mut m = Interval::around(c, err);
        let s = &plan.exponents[r];
        for j in 0..d {
            if s[j] > 0 {
                m = m * pows[j][s[j] as usize];
            }
        }
        acc = acc + m;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::MultiIndex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(s: &[u32]) -> MultiIndex {
        MultiIndex::new(s)
    }

    #[test]
    fn constant_is_exact() {
        let p = Polynomial::constant(2, 3.0);
        let bx = AxisBox::new(vec![-4.0, 1.0], vec![2.0, 9.0]).unwrap();
        assert_eq!(eval_poly_interval(&p, &bx), Interval::point(3.0));
    }

    #[test]
    fn square_over_symmetric_interval_is_tight() {
        let p = Polynomial::from_terms(1, vec![0.0], &[(mi(&[2]), 1.0)]);
        let r = eval_poly_interval(&p, &AxisBox::new(vec![-1.0], vec![1.0]).unwrap());
        let ulp = f64::EPSILON;
        assert!(r.lo <= 0.0 && r.hi >= 1.0);
        assert!(r.lo >= -ulp && r.hi <= 1.0 + ulp, "{r:?}");
    }

    #[test]
    fn shifted_anchor_recenters_exactly() {
        // (x − 1)² anchored at 1, over [0, 2], is x² − 2x + 1 around 0.
        let p = Polynomial::from_terms(1, vec![1.0], &[(mi(&[2]), 1.0)]);
        let r = eval_poly_interval(&p, &AxisBox::new(vec![0.0], vec![2.0]).unwrap());
        assert!(r.lo <= 0.0 && r.hi >= 1.0 && r.hi < 1.0 + 1e-12 && r.lo > -1e-12, "{r:?}");
    }

    #[test]
    fn random_cubics_enclose_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let d = rng.gen_range(1..=3);
            let anchor: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let terms: Vec<(MultiIndex, f64)> =
                indices_up_to(d, 3).into_iter().map(|s| (s, rng.gen_range(-5.0..5.0))).collect();
            let p = Polynomial::from_terms(d, anchor, &terms);
            let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..1.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.0..1.5)).collect();
            let bx = AxisBox::new(lo.clone(), hi.clone()).unwrap();
            let r = eval_poly_interval(&p, &bx);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|j| rng.gen_range(lo[j]..=hi[j])).collect();
                let (v, e) = p.eval_with_error(&x);
                assert!(v + e >= r.lo && v - e <= r.hi, "{v} outside {r:?}");
            }
        }
    }
}
