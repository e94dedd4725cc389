//! Exact symbolic partial derivatives of a single-charge potential.
//!
//! Every partial derivative `D^s (q/r)` with `|s| = k` is a finite sum of terms
//! `κ (x − a)^{s′} / r^{t′}` with `t′ = k + 1 + |s′|`. Differentiating one term
//! along axis `j` yields the two terms `(κ s′_j, s′ − e_j, t′)` and
//! `(−κ t′, s′ + e_j, t′ + 2)`; like terms are merged. The integer parts of the
//! coefficients are kept exactly as big integers.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{indices_of_order, Charge, ChargeSystem, MultiIndex, MAX_DIM};
use crate::error::{Error, Result};
use crate::interval::gamma;

/// One term `κ (x − a)^{s′} / r^{t′}` with `κ = coeff · q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    /// Exact integer multiplier of the charge magnitude.
    pub coeff: BigInt,
    /// Numerator exponents `s′`.
    pub num: MultiIndex,
    /// Denominator power `t′` (always odd).
    pub den_pow: u32,
}

impl PolyTerm {
    /// The coefficient `κ` of this term for a charge of magnitude `q`.
    pub fn kappa(&self, q: f64) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::INFINITY) * q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeExpansion {
    pub charge: Charge,
    pub order: MultiIndex,
    pub terms: Vec<PolyTerm>,
}

impl DerivativeExpansion {
    /// Evaluates the expansion at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_with_error(x)?.0)
    }

    /// Value at `x` together with a bound on its floating-point error.
    pub fn eval_with_error(&self, x: &[f64]) -> Result<(f64, f64)> {
        let d = self.order.dim();
        let k = self.order.order();
        let w: Vec<f64> = x.iter().zip(&self.charge.position).map(|(a, b)| a - b).collect();
        let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::SingularPoint { charge: 0 });
        }
        let u: Vec<f64> = w.iter().map(|v| v / r).collect();
        let mut sum = 0.0;
        let mut mag = 0.0;
        for t in &self.terms {
            let c = t.coeff.to_f64().ok_or(Error::DegreeOverflow { order: k })?;
            if !c.is_finite() {
                return Err(Error::DegreeOverflow { order: k });
            }
            let p: f64 = (0..d).map(|j| u[j].powi(t.num.get(j) as i32)).product();
            sum += c * p;
            mag += (c * p).abs();
        }
        let scale = self.charge.q * r.powi(-(k as i32 + 1));
        let m = self.terms.len() + 4 * (k as usize + 2) * (d + 4);
        Ok((scale * sum, gamma(m) * (scale * mag).abs()))
    }
}

type ExactTerms = BTreeMap<MultiIndex, BigInt>;

/// Differentiates an exact expansion of order `k` along axis `j`.
fn differentiate(terms: &ExactTerms, k: u32, j: usize) -> ExactTerms {
    let mut out = ExactTerms::new();
    for (s, kappa) in terms {
        let t = k + 1 + s.order();
        if let Some(lower) = s.minus_unit(j) {
            *out.entry(lower).or_default() += kappa * BigInt::from(s.get(j));
        }
        *out.entry(s.plus_unit(j)).or_default() -= kappa * BigInt::from(t);
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn unit_expansion(order: MultiIndex) -> ExactTerms {
    let d = order.dim();
    let mut terms = ExactTerms::new();
    terms.insert(MultiIndex::zero(d), BigInt::from(1));
    let mut k = 0;
    for j in 0..d {
        for _ in 0..order.get(j) {
            terms = differentiate(&terms, k, j);
            k += 1;
        }
    }
    terms
}

/// Exact expansion of `D^order (q / ‖x − a‖)`.
pub fn derivative_terms(charge: &Charge, order: MultiIndex) -> Result<DerivativeExpansion> {
    if order.dim() != charge.dim() {
        return Err(Error::InvalidInput("multi-index dimension differs from the charge's".into()));
    }
    let k = order.order();
    if k > MAX_ORDER {
        return Err(Error::DegreeOverflow { order: k });
    }
    let terms = unit_expansion(order)
        .into_iter()
        .map(|(num, coeff)| PolyTerm { den_pow: k + 1 + num.order(), coeff, num })
        .collect();
    Ok(DerivativeExpansion { charge: charge.clone(), order, terms })
}

/// `k! 2^k |q| / r^{k+1}`: bounds every `k`-th partial derivative of `q / ‖x − a‖`
/// at Euclidean distance at least `r` from the charge.
pub fn derivative_bound(charge: &Charge, k: u32, r: f64) -> f64 {
    let mut b = charge.q.abs() / r;
    for i in 1..=k {
        b *= 2.0 * i as f64 / r;
    }
    b
}

/// Largest derivative order the expansion tables support.
pub const MAX_ORDER: u32 = 160;

/// Value of `D^s f` at `x` for the whole system.
pub fn eval_partial(sys: &ChargeSystem, s: MultiIndex, x: &[f64]) -> Result<f64> {
    let k = s.order();
    let table = unit_table(sys.dim(), k)?;
    let fact = s.factorial();
    let mut total = 0.0;
    for (i, c) in sys.charges().iter().enumerate() {
        let w: Vec<f64> = x.iter().zip(&c.position).map(|(a, b)| a - b).collect();
        let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::SingularPoint { charge: i });
        }
        let u: Vec<f64> = w.iter().map(|v| v / r).collect();
        let mut acc = 0.0;
        for t in table.terms_of(s) {
            let mut p = t.coef;
            for (j, uj) in u.iter().enumerate() {
                p *= uj.powi(t.num[j] as i32);
            }
            acc += p;
        }
        total += c.q * fact * acc * r.powi(-(k as i32 + 1));
    }
    Ok(total)
}

/// A term of a unit-charge derivative divided by `s!`:
/// `D^s(1/r) / s! = r^{−(|s|+1)} Σ coef · u^{num}` with `u = (x − a)/r`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TableTerm {
    pub coef: f64,
    pub num: [u16; MAX_DIM],
}

/// Every unit-charge expansion of order up to `max_order` in one dimension,
/// stored in rank order with coefficients pre-divided by `s!`.
#[derive(Debug)]
pub(crate) struct ExpansionTable {
    pub max_order: u32,
    /// `ranges[rank]` indexes into `terms`.
    pub ranges: Vec<(u32, u32)>,
    pub terms: Vec<TableTerm>,
    /// Largest term count of any single entry.
    pub max_terms: usize,
}

impl ExpansionTable {
    pub fn terms_of(&self, s: MultiIndex) -> &[TableTerm] {
        let (a, b) = self.ranges[s.rank()];
        &self.terms[a as usize..b as usize]
    }
}

struct TableState {
    table: Arc<ExpansionTable>,
    /// Exact expansions of the highest stored order, in rank order.
    frontier: Vec<ExactTerms>,
}

fn cache() -> &'static Mutex<HashMap<usize, TableState>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, TableState>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn to_table_terms(s: MultiIndex, exact: &ExactTerms) -> Result<Vec<TableTerm>> {
    let fact = s
        .entries()
        .fold(BigInt::from(1u32), |acc, v| (1..=v).fold(acc, |a, i| a * BigInt::from(i)));
    let fact_f = fact.to_f64().filter(|f| f.is_finite());
    exact
        .iter()
        .map(|(num, kappa)| {
            let coef = match fact_f {
                Some(f) => kappa.to_f64().map(|k| k / f),
                None => None,
            }
            .filter(|c| c.is_finite())
            .or_else(|| ratio_to_f64(kappa, &fact))
            .ok_or(Error::DegreeOverflow { order: s.order() })?;
            let mut arr = [0u16; MAX_DIM];
            for (j, v) in num.entries().enumerate() {
                arr[j] = v as u16;
            }
            Ok(TableTerm { coef, num: arr })
        })
        .collect()
}

/// `a / b` for big integers whose individual conversions overflow.
fn ratio_to_f64(a: &BigInt, b: &BigInt) -> Option<f64> {
    let shift = a.bits().max(b.bits()).saturating_sub(1000);
    let av = (a.abs() >> shift).to_f64()?;
    let bv = (b >> shift).to_f64()?;
    let r = av / bv;
    let r = if a.is_negative() { -r } else { r };
    r.is_finite().then_some(r)
}

/// Shared expansion table for dimension `dim` covering orders `0..=order`.
pub(crate) fn unit_table(dim: usize, order: u32) -> Result<Arc<ExpansionTable>> {
    if order > MAX_ORDER {
        return Err(Error::DegreeOverflow { order });
    }
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    let state = guard.entry(dim).or_insert_with(|| {
        let zero = MultiIndex::zero(dim);
        let mut exact = ExactTerms::new();
        exact.insert(zero, BigInt::from(1));
        TableState {
            table: Arc::new(ExpansionTable {
                max_order: 0,
                ranges: vec![(0, 1)],
                terms: vec![TableTerm { coef: 1.0, num: [0; MAX_DIM] }],
                max_terms: 1,
            }),
            frontier: vec![exact],
        }
    });
    if state.table.max_order >= order {
        return Ok(state.table.clone());
    }
    // Grow in steps of eight orders to amortize the copy.
    let target = order.div_ceil(8).saturating_mul(8).min(MAX_ORDER).max(order);
    let old = &state.table;
    let mut ranges = old.ranges.clone();
    let mut terms = old.terms.clone();
    let mut max_terms = old.max_terms;
    let mut frontier = std::mem::take(&mut state.frontier);
    for k in old.max_order..target {
        let next: Vec<ExactTerms> = indices_of_order(dim, k + 1)
            .into_iter()
            .map(|s| {
                let j = s.last_nonzero().expect("order is positive");
                let parent = s.minus_unit(j).expect("entry is positive");
                differentiate(&frontier[parent.rank_in_degree()], k, j)
            })
            .collect();
        for (s, exact) in indices_of_order(dim, k + 1).into_iter().zip(&next) {
            let tt = match to_table_terms(s, exact) {
                Ok(tt) => tt,
                Err(e) => {
                    state.frontier = frontier;
                    return Err(e);
                }
            };
            let start = terms.len() as u32;
            max_terms = max_terms.max(tt.len());
            terms.extend(tt);
            ranges.push((start, terms.len() as u32));
        }
        frontier = next;
    }
    state.table = Arc::new(ExpansionTable { max_order: target, ranges, terms, max_terms });
    state.frontier = frontier;
    Ok(state.table.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit2() -> Charge {
        Charge::new(1.0, vec![0.0, 0.0]).unwrap()
    }

    fn as_tuples(e: &DerivativeExpansion) -> Vec<(i64, Vec<u32>, u32)> {
        e.terms
            .iter()
            .map(|t| (t.coeff.to_i64().unwrap(), t.num.entries().collect(), t.den_pow))
            .collect()
    }

    #[test]
    fn low_order_expansions() {
        let e0 = derivative_terms(&unit2(), MultiIndex::zero(2)).unwrap();
        assert_eq!(as_tuples(&e0), vec![(1, vec![0, 0], 1)]);
        let e1 = derivative_terms(&unit2(), MultiIndex::new(&[1, 0])).unwrap();
        assert_eq!(as_tuples(&e1), vec![(-1, vec![1, 0], 3)]);
        let e2 = derivative_terms(&unit2(), MultiIndex::new(&[2, 0])).unwrap();
        let mut t = as_tuples(&e2);
        t.sort();
        assert_eq!(t, vec![(-1, vec![0, 0], 3), (3, vec![2, 0], 5)]);
    }

    #[test]
    fn kappa_carries_the_charge() {
        let c = Charge::new(2.5, vec![0.0, 0.0]).unwrap();
        let e1 = derivative_terms(&c, MultiIndex::new(&[1, 0])).unwrap();
        assert_eq!(e1.terms[0].kappa(c.q), -2.5);
    }

    #[test]
    fn table_matches_exact_expansions() {
        let table = unit_table(3, 6).unwrap();
        for s in crate::potential::indices_up_to(3, 6) {
            let exact = derivative_terms(&Charge::new(1.0, vec![0.0; 3]).unwrap(), s).unwrap();
            let tt = table.terms_of(s);
            assert_eq!(tt.len(), exact.terms.len());
            for (a, b) in tt.iter().zip(&exact.terms) {
                assert_eq!(a.coef, b.coeff.to_f64().unwrap() / s.factorial());
                let num: Vec<u32> = b.num.entries().collect();
                assert_eq!(&a.num[..3].iter().map(|&v| v as u32).collect::<Vec<_>>(), &num);
            }
        }
    }

    #[test]
    fn bound_examples() {
        let c = unit2();
        assert_eq!(derivative_bound(&c, 0, 1.0), 1.0);
        assert_eq!(derivative_bound(&c, 1, 1.0), 2.0);
        assert_eq!(derivative_bound(&c, 2, 0.5), 64.0);
    }

    #[test]
    fn eval_partial_matches_expansion() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (-2.0, &[1.0, 0.5])]).unwrap();
        let x = [0.3, -0.7];
        for s in crate::potential::indices_up_to(2, 5) {
            let direct: f64 = sys
                .charges()
                .iter()
                .map(|c| derivative_terms(c, s).unwrap().eval(&x).unwrap())
                .sum();
            let tabled = eval_partial(&sys, s, &x).unwrap();
            assert!((direct - tabled).abs() <= 1e-12 * direct.abs().max(1.0), "{s:?}");
        }
    }

    #[test]
    fn high_orders_overflow_cleanly() {
        assert!(matches!(
            derivative_terms(&unit2(), MultiIndex::new(&[MAX_ORDER + 1, 0])),
            Err(Error::DegreeOverflow { .. })
        ));
    }
}
