//! Parameter algebra for well-behaved function families.
//!
//! A family with parameters `(B, C, β_min)` and a cover provider satisfies,
//! at every admissible point outside `cover(β)`,
//! `M^(k)(x) ≤ C^k 2^B k! / β^k` for all `k ≥ 0` and `β ≥ β_min`, where
//! `M^(k)` is the largest magnitude of a `k`-th partial derivative. Base
//! families (single charges, polynomials) are combined through derivatives,
//! scaled sums and products.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::AxisBox;
use crate::potential::Charge;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WellBehavedParams {
    pub b: u32,
    pub c: u64,
    pub beta_min: f64,
}

impl WellBehavedParams {
    /// `lg(C^k 2^B k! / β^k)`.
    pub fn log2_bound(&self, k: u32, beta: f64) -> f64 {
        let lg_fact: f64 = (2..=k).map(|i| (i as f64).log2()).sum();
        k as f64 * (self.c as f64).log2() + self.b as f64 + lg_fact - k as f64 * beta.log2()
    }

    /// `C^k 2^B k! / β^k`, possibly infinite for large `k`.
    pub fn bound(&self, k: u32, beta: f64) -> f64 {
        self.log2_bound(k, beta).exp2()
    }
}

/// Maps `β` to the boxes outside of which the `β`-bound holds.
#[derive(Debug, Clone, PartialEq)]
pub enum CoverProvider {
    /// The bound holds everywhere.
    Empty,
    /// The cube of side `β` centered at a charge.
    Cube { center: Vec<f64> },
    /// A fixed box, returned once `β` reaches its largest side.
    Domain(AxisBox),
    /// Concatenation of member covers.
    Union(Vec<CoverProvider>),
}

impl CoverProvider {
    pub fn boxes(&self, beta: f64) -> Vec<AxisBox> {
        let mut out = Vec::new();
        self.collect(beta, &mut out);
        out
    }

    fn collect(&self, beta: f64, out: &mut Vec<AxisBox>) {
        match self {
            CoverProvider::Empty => {}
            CoverProvider::Cube { center } => out.push(AxisBox::cube(center, beta)),
            CoverProvider::Domain(b) => {
                if b.max_width() <= beta {
                    out.push(b.clone());
                }
            }
            CoverProvider::Union(items) => items.iter().for_each(|c| c.collect(beta, out)),
        }
    }

    /// `n_β`, the number of boxes returned for `β`.
    pub fn count(&self, beta: f64) -> usize {
        match self {
            CoverProvider::Empty => 0,
            CoverProvider::Cube { .. } => 1,
            CoverProvider::Domain(b) => usize::from(b.max_width() <= beta),
            CoverProvider::Union(items) => items.iter().map(|c| c.count(beta)).sum(),
        }
    }

    fn union(items: Vec<CoverProvider>) -> CoverProvider {
        let flat: Vec<CoverProvider> = items
            .into_iter()
            .flat_map(|c| match c {
                CoverProvider::Union(inner) => inner,
                CoverProvider::Empty => Vec::new(),
                other => vec![other],
            })
            .collect();
        if flat.is_empty() {
            CoverProvider::Empty
        } else {
            CoverProvider::Union(flat)
        }
    }
}

/// Parameters paired with their cover provider.
#[derive(Debug, Clone, PartialEq)]
pub struct WellBehaved {
    pub params: WellBehavedParams,
    pub cover: CoverProvider,
}

fn ceil_nonneg(x: f64) -> u32 {
    x.ceil().max(0.0) as u32
}

/// Family generated by one charge on the region `‖x − a‖∞ ≥ τ`.
pub fn single_charge_params(charge: &Charge, tau: f64) -> Result<WellBehaved> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidTau(tau));
    }
    let b = ceil_nonneg((charge.q.abs().max(1.0) / tau).log2());
    Ok(WellBehaved {
        params: WellBehavedParams { b, c: 4, beta_min: 2.0 * tau },
        cover: CoverProvider::Cube { center: charge.position.clone() },
    })
}

/// Parameters of the `κ`-th partial derivatives of a family.
pub fn derivative_params(p: WellBehavedParams, kappa: u32) -> WellBehavedParams {
    if kappa == 0 {
        return p;
    }
    let beta = p.beta_min.min(1.0);
    let k = kappa as f64;
    let b_hat = p.b as f64 + k * (p.c as f64).log2() + k * (1.0 / beta).log2() + k * (k + 1.0).log2();
    WellBehavedParams { b: ceil_nonneg(b_hat), c: p.c << kappa, beta_min: beta }
}

/// [`derivative_params`] with the cover carried along unchanged.
pub fn derivative_family(f: &WellBehaved, kappa: u32) -> WellBehaved {
    WellBehaved { params: derivative_params(f.params, kappa), cover: f.cover.clone() }
}

/// Family of the linear combination `Σ coef_i f_i`.
pub fn sum_params(items: &[(f64, WellBehaved)]) -> Result<WellBehaved> {
    if items.is_empty() {
        return Err(Error::EmptySum);
    }
    let mut b_max = 0;
    let mut c = 0u64;
    let mut beta = f64::INFINITY;
    for (coef, f) in items {
        if *coef == 0.0 || !coef.is_finite() {
            return Err(Error::InvalidInput(format!("sum coefficient must be finite and nonzero, got {coef}")));
        }
        let scaled = f.params.b + ceil_nonneg(coef.abs().log2());
        b_max = b_max.max(scaled);
        c += f.params.c;
        beta = beta.min(f.params.beta_min);
    }
    let n = items.len() as f64;
    Ok(WellBehaved {
        params: WellBehavedParams { b: b_max + ceil_nonneg(n.log2()), c, beta_min: beta },
        cover: CoverProvider::union(items.iter().map(|(_, f)| f.cover.clone()).collect()),
    })
}

/// Family of the product `Π f_i`.
pub fn product_params(items: &[WellBehaved]) -> Result<WellBehaved> {
    if items.is_empty() {
        return Err(Error::EmptyProduct);
    }
    let b = items.iter().map(|f| f.params.b).sum();
    let c = items.len() as u64 * items.iter().map(|f| f.params.c).max().unwrap_or(1);
    let beta = items.iter().map(|f| f.params.beta_min).fold(f64::INFINITY, f64::min);
    Ok(WellBehaved {
        params: WellBehavedParams { b, c, beta_min: beta },
        cover: CoverProvider::union(items.iter().map(|f| f.cover.clone()).collect()),
    })
}

/// Parameters of polynomials on `[−1, 1]^d` whose derivatives are bounded by `m`.
pub fn polynomial_params(m: f64) -> WellBehavedParams {
    WellBehavedParams { b: ceil_nonneg(m.max(1.0).log2()), c: 2, beta_min: 2.0 }
}

/// [`polynomial_params`] paired with the cover `[−1, 1]^d` for `β ≥ 2`.
pub fn polynomial_family(dim: usize, m: f64) -> WellBehaved {
    WellBehaved {
        params: polynomial_params(m),
        cover: CoverProvider::Domain(AxisBox { lo: vec![-1.0; dim], hi: vec![1.0; dim] }),
    }
}

/// Family of the potential of a whole system, each charge taken with safe
/// distance `tau`.
pub fn potential_family(charges: &[Charge], tau: f64) -> Result<WellBehaved> {
    let items = charges
        .iter()
        .map(|c| Ok((1.0, single_charge_params(c, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    sum_params(&items)
}

/// Family of the Hessian determinant, built from the second-derivative family
/// of `f` by expanding `det` over permutations.
pub fn hessian_det_family(f: &WellBehaved, dim: usize) -> Result<WellBehaved> {
    let h = derivative_family(f, 2);
    let perms = permutations(dim);
    let items = perms
        .iter()
        .map(|(_, sign)| Ok((*sign, product_params(&vec![h.clone(); dim])?)))
        .collect::<Result<Vec<_>>>()?;
    sum_params(&items)
}

/// All permutations of `0..n` with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| prefix[i] > prefix[j])
                .count();
            out.push((prefix.clone(), if inversions % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
