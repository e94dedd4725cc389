use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Axis-aligned box `×_j [lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("box corners must have the same positive dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid box corners {lo:?} / {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// Cube of side `side` centered at `center`.
    pub fn cube(center: &[f64], side: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - side / 2.0).collect(),
            hi: center.iter().map(|c| c + side / 2.0).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * l + 0.5 * h).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(j, v)| self.lo[j] <= *v && *v <= self.hi[j])
    }

    /// Whether the closed boxes share a point.
    pub fn intersects(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|j| self.lo[j] <= other.hi[j] && other.lo[j] <= self.hi[j])
    }

    /// Whether the open interiors overlap.
    pub fn overlaps_interior(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|j| self.lo[j] < other.hi[j] && other.lo[j] < self.hi[j])
    }

    pub fn is_subset_of(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|j| other.lo[j] <= self.lo[j] && self.hi[j] <= other.hi[j])
    }

    pub fn intersection(&self, other: &AxisBox) -> Option<AxisBox> {
        let lo: Vec<f64> = (0..self.dim()).map(|j| self.lo[j].max(other.lo[j])).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|j| self.hi[j].min(other.hi[j])).collect();
        lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some(AxisBox { lo, hi })
    }

    /// Box grown by `t` on every side.
    pub fn inflate(&self, t: f64) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().map(|v| v - t).collect(),
            hi: self.hi.iter().map(|v| v + t).collect(),
        }
    }

    /// `max_j max_{x ∈ box} |x_j − anchor_j|`.
    pub fn radius_from(&self, anchor: &[f64]) -> f64 {
        (0..self.dim())
            .map(|j| (self.hi[j] - anchor[j]).abs().max((anchor[j] - self.lo[j]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_intervals(&self) -> Vec<Interval> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| Interval::new(*l, *h)).collect()
    }

    /// Nearest point of the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, v)| v.clamp(self.lo[j], self.hi[j])).collect()
    }
}
