use std::fmt;

use super::MAX_DIM;

/// Exponent vector `s = (s_1, …, s_d)` of a partial derivative or monomial.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dim: u8,
    e: [u16; MAX_DIM],
}

impl MultiIndex {
    /// Panics if `s.len()` exceeds [`MAX_DIM`] or an entry exceeds `u16::MAX`.
    pub fn new(s: &[u32]) -> Self {
        assert!(s.len() <= MAX_DIM, "multi-index dimension {} exceeds {}", s.len(), MAX_DIM);
        let mut e = [0u16; MAX_DIM];
        for (slot, &v) in e.iter_mut().zip(s) {
            *slot = u16::try_from(v).expect("multi-index entry too large");
        }
        Self { dim: s.len() as u8, e }
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Self { dim: dim as u8, e: [0; MAX_DIM] }
    }

    pub fn unit(dim: usize, j: usize) -> Self {
        Self::zero(dim).plus_unit(j)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn get(&self, j: usize) -> u32 {
        self.e[j] as u32
    }

    pub fn entries(&self) -> impl Iterator<Item = u32> + '_ {
        self.e[..self.dim()].iter().map(|&v| v as u32)
    }

    /// `|s| = Σ s_j`.
    pub fn order(&self) -> u32 {
        self.entries().sum()
    }

    /// `s! = Π s_j!` in double precision; exact while the product stays below 2^53.
    pub fn factorial(&self) -> f64 {
        self.entries().map(factorial).product()
    }

    pub fn plus_unit(mut self, j: usize) -> Self {
        assert!(j < self.dim());
        self.e[j] += 1;
        self
    }

    pub fn minus_unit(mut self, j: usize) -> Option<Self> {
        if j >= self.dim() || self.e[j] == 0 {
            return None;
        }
        self.e[j] -= 1;
        Some(self)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for j in 0..self.dim() {
            out.e[j] += other.e[j];
        }
        out
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim == other.dim && (0..self.dim()).all(|j| self.e[j] <= other.e[j])
    }

    /// Whether every entry is even.
    pub fn all_even(&self) -> bool {
        self.entries().all(|v| v % 2 == 0)
    }

    /// Last axis with a nonzero entry.
    pub fn last_nonzero(&self) -> Option<usize> {
        (0..self.dim()).rev().find(|&j| self.e[j] != 0)
    }

    /// Position in the graded ordering used for dense coefficient storage.
    pub fn rank(&self) -> usize {
        let m = self.order() as usize;
        degree_offset(self.dim(), m) + self.rank_in_degree()
    }

    /// Position among the multi-indices of the same order. Within an order the
    /// entries are listed with `s_1` descending, then `s_2` descending, and so on.
    pub fn rank_in_degree(&self) -> usize {
        let d = self.dim();
        let mut rem = self.order() as usize;
        let mut r = 0;
        for i in 0..d.saturating_sub(1) {
            let si = self.e[i] as usize;
            let tail = d - i - 1;
            if rem > si {
                r += binomial(rem - si - 1 + tail, tail);
            }
            rem -= si;
        }
        r
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries()).finish()
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Binomial coefficient for the small lower indices used by monomial counting.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of monomials in `dim` variables of total degree `≤ deg`.
pub fn monomial_count(dim: usize, deg: usize) -> usize {
    binomial(deg + dim, dim)
}

/// Number of monomials of total degree strictly below `m`.
pub fn degree_offset(dim: usize, m: usize) -> usize {
    if m == 0 {
        0
    } else {
        binomial(m - 1 + dim, dim)
    }
}

/// All multi-indices of a given order, in rank order.
pub fn indices_of_order(dim: usize, m: u32) -> Vec<MultiIndex> {
    fn rec(dim: usize, pos: usize, rem: u32, cur: &mut [u32; MAX_DIM], out: &mut Vec<MultiIndex>) {
        if pos + 1 == dim {
            cur[pos] = rem;
            out.push(MultiIndex::new(&cur[..dim]));
            return;
        }
        for v in (0..=rem).rev() {
            cur[pos] = v;
            rec(dim, pos + 1, rem - v, cur, out);
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        if m == 0 {
            out.push(MultiIndex::zero(0));
        }
        return out;
    }
    rec(dim, 0, m, &mut [0; MAX_DIM], &mut out);
    out
}

/// All multi-indices of order `≤ max_order`, in rank order.
pub fn indices_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    (0..=max_order).flat_map(|m| indices_of_order(dim, m)).collect()
}
