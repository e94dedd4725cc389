//! Closed intervals with outward rounding.
//!
//! Every arithmetic result is widened by one ulp on each side, so the exact
//! real result of an operation on enclosed values is always enclosed.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[inline]
fn down(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        x
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x == f64::INFINITY {
        x
    } else {
        x.next_up()
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Interval `[x - r, x + r]` with outward rounding.
    pub fn around(x: f64, r: f64) -> Self {
        Self { lo: add_down(x, -r), hi: add_up(x, r) }
    }

    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Range of `x²`, tighter than `x * x` when the interval straddles zero.
    pub fn sqr(self) -> Interval {
        if self.lo >= 0.0 {
            Interval { lo: mul_down(self.lo, self.lo), hi: mul_up(self.hi, self.hi) }
        } else if self.hi <= 0.0 {
            Interval { lo: mul_down(self.hi, self.hi), hi: mul_up(self.lo, self.lo) }
        } else {
            let m = self.mag();
            Interval { lo: 0.0, hi: mul_up(m, m) }
        }
    }

    /// Square root of the nonnegative part.
    pub fn sqrt(self) -> Interval {
        let lo = if self.lo <= 0.0 { 0.0 } else { down(self.lo.sqrt()).max(0.0) };
        Interval { lo, hi: up(self.hi.max(0.0).sqrt()) }
    }

    /// Reciprocal; the entire line when zero is enclosed.
    pub fn recip(self) -> Interval {
        if self.contains_zero() {
            return Interval::ENTIRE;
        }
        Interval { lo: down(1.0 / self.hi), hi: up(1.0 / self.lo) }
    }

    pub fn scale(self, c: f64) -> Interval {
        Interval::point(c) * self
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, o.lo), hi: add_up(self.hi, o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, -o.hi), hi: add_up(self.hi, -o.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let pairs = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in pairs {
            // 0 * inf appears only for unbounded operands; treat it as unbounded.
            if (a == 0.0 && b.is_infinite()) || (b == 0.0 && a.is_infinite()) {
                return Interval::ENTIRE;
            }
            lo = lo.min(mul_down(a, b));
            hi = hi.max(mul_up(a, b));
        }
        Interval { lo, hi }
    }
}

/// Error-free transformation: `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `a + b` rounded toward −∞.
#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if s.is_nan() { f64::NEG_INFINITY } else { s };
    }
    if e < 0.0 {
        down(s)
    } else {
        s
    }
}

/// `a + b` rounded toward +∞.
#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if s.is_nan() { f64::INFINITY } else { s };
    }
    if e > 0.0 {
        up(s)
    } else {
        s
    }
}

/// `a · b` rounded toward −∞.
#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p.is_nan() { f64::NEG_INFINITY } else { p };
    }
    let e = a.mul_add(b, -p);
    // Products deep in the subnormal range lose the exactness of the residual.
    if e < 0.0 || (p.abs() < 1e-290 && p != 0.0) {
        down(p)
    } else if p == 0.0 && a != 0.0 && b != 0.0 {
        if (a < 0.0) != (b < 0.0) {
            down(0.0)
        } else {
            0.0
        }
    } else {
        p
    }
}

/// `a · b` rounded toward +∞.
#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Unit roundoff of IEEE binary64.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Standard bound `m u / (1 - m u)` on the relative error accumulated by `m`
/// floating-point operations.
pub fn gamma(m: usize) -> f64 {
    let mu = m as f64 * UNIT_ROUNDOFF;
    up(mu / (1.0 - mu))
}

/// Round a nonnegative bound up by one ulp.
pub fn round_up(x: f64) -> f64 {
    up(x)
}

/// Round down by one ulp.
pub fn round_down(x: f64) -> f64 {
    down(x)
}
