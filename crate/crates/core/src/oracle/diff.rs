use crate::error::{Error, Result};
use crate::potential::{eval_potential, ChargeSystem, MultiIndex};

/// Tensor-product central difference approximating `D^s f(x)` with step `h`.
pub fn finite_difference(sys: &ChargeSystem, x: &[f64], s: MultiIndex, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let d = sys.dim();
    // Per-axis stencils: offsets (m/2 − i)·h with weights (−1)^i C(m, i) / h^m.
    let stencils: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|j| {
            let m = s.get(j) as usize;
            let scale = h.powi(m as i32);
            (0..=m)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    ((m as f64 / 2.0 - i as f64) * h, sign * binom(m, i) / scale)
                })
                .collect()
        })
        .collect();
    let lens: Vec<usize> = stencils.iter().map(Vec::len).collect();
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut p = x.to_vec();
        let mut w = 1.0;
        for j in 0..d {
            let (off, wj) = stencils[j][idx[j]];
            p[j] += off;
            w *= wj;
        }
        total += w * eval_potential(sys, &p)?;
        if !crate::grid::advance(&mut idx, &lens) {
            break;
        }
    }
    Ok(total)
}

/// One Richardson step on the central difference: `(4 D(h/2) − D(h)) / 3`.
pub fn richardson(sys: &ChargeSystem, x: &[f64], s: MultiIndex, h: f64) -> Result<f64> {
    let coarse = finite_difference(sys, x, s, h)?;
    let fine = finite_difference(sys, x, s, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Romberg table on step halvings: `levels` extrapolations cancel the
/// error terms in `h², h⁴, …, h^(2·levels)`.
pub fn romberg(sys: &ChargeSystem, x: &[f64], s: MultiIndex, h: f64, levels: usize) -> Result<f64> {
    let mut row: Vec<f64> = Vec::with_capacity(levels + 1);
    for i in 0..=levels {
        let mut next = vec![finite_difference(sys, x, s, h / 2f64.powi(i as i32))?];
        let mut factor = 1.0;
        for prev in &row {
            factor *= 4.0;
            let last = next[next.len() - 1];
            next.push((factor * last - prev) / (factor - 1.0));
        }
        row = next;
    }
    Ok(row[row.len() - 1])
}

/// Extrapolated difference with a step scaled to the distance from the
/// nearest charge.
pub fn finite_difference_auto(sys: &ChargeSystem, x: &[f64], s: MultiIndex) -> Result<f64> {
    let r = sys.min_distance(x);
    match s.order() {
        0 => eval_potential(sys, x),
        1 | 2 => richardson(sys, x, s, 1e-3 * r),
        _ => romberg(sys, x, s, 1e-1 * r, 3),
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ChargeSystem {
        ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0])]).unwrap()
    }

    #[test]
    fn zero_order_is_the_potential() {
        let v = finite_difference(&unit(), &[3.0, 4.0], MultiIndex::zero(2), 1e-3).unwrap();
        assert_eq!(v, 0.2);
    }

    #[test]
    fn first_derivative_of_inverse_distance() {
        let v = finite_difference(&unit(), &[1.0, 0.0], MultiIndex::new(&[1, 0]), 1e-5).unwrap();
        assert!((v + 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn second_axial_derivative() {
        let v = finite_difference(&unit(), &[1.0, 0.0], MultiIndex::new(&[2, 0]), 1e-5).unwrap();
        assert!((v - 2.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn extrapolation_sharpens_high_orders() {
        let sys = unit();
        let s = MultiIndex::new(&[2, 2]);
        let exact = crate::potential::eval_partial(&sys, s, &[1.0, 0.5]).unwrap();
        let v = finite_difference_auto(&sys, &[1.0, 0.5], s).unwrap();
        assert!(((v - exact) / exact).abs() < 1e-5, "{v} vs {exact}");
    }
}
