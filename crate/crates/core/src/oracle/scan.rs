use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Polytope;
use crate::potential::{gradient_norm, ChargeSystem};

/// Largest number of grid points a scan may visit.
pub const SCAN_CAP: f64 = 1e8;

/// A grid point whose gradient norm is below the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub x: Vec<f64>,
    pub grad_norm: f64,
}

/// Result of [`brute_force_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub h: f64,
    pub threshold: f64,
    /// Points with `‖∇f‖∞ ≤ threshold`, in lexicographic grid order.
    pub points: Vec<ScanPoint>,
    /// Smallest `‖∇f‖∞` seen, with the point attaining it.
    pub min_norm: f64,
    pub argmin: Option<Vec<f64>>,
    /// Number of grid points evaluated.
    pub scanned: u64,
}

impl ScanReport {
    /// Fixed-format text rendering, one point per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "h {:.6e} threshold {:.6e} scanned {}", self.h, self.threshold, self.scanned);
        match &self.argmin {
            Some(p) => {
                let _ = writeln!(s, "min {:.12e} at {}", self.min_norm, fmt_point(p));
            }
            None => {
                let _ = writeln!(s, "min none");
            }
        }
        for p in &self.points {
            let _ = writeln!(s, "{} {:.12e}", fmt_point(&p.x), p.grad_norm);
        }
        s
    }
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" ")
}

/// Evaluates `‖∇f‖∞` on the grid `lo + h·i` of the domain's bounding box,
/// skipping points outside the domain and on charges.
pub fn brute_force_scan(sys: &ChargeSystem, x: &Polytope, threshold: f64, h: f64) -> Result<ScanReport> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("spacing must be positive, got {h}")));
    }
    if x.dim() != sys.dim() {
        return Err(Error::InvalidInput("domain and charges differ in dimension".into()));
    }
    let bbox = x.bounding_box();
    let d = x.dim();
    let counts: Vec<u64> = (0..d).map(|j| (bbox.width(j) / h * (1.0 + 1e-12)).floor() as u64 + 1).collect();
    let total: f64 = counts.iter().map(|&c| c as f64).product();
    if total > SCAN_CAP {
        return Err(Error::TooFine { points: total, cap: SCAN_CAP });
    }
    let coord = |j: usize, i: u64| (bbox.lo[j] + h * i as f64).min(bbox.hi[j]);
    let rows: Vec<(Vec<ScanPoint>, f64, Option<Vec<f64>>, u64)> = (0..counts[0])
        .into_par_iter()
        .map(|i0| {
            let mut pts = Vec::new();
            let mut best = f64::INFINITY;
            let mut arg = None;
            let mut scanned = 0;
            let mut idx = vec![0u64; d];
            idx[0] = i0;
            loop {
                let p: Vec<f64> = (0..d).map(|j| coord(j, idx[j])).collect();
                if x.contains(&p) {
                    if let Ok(g) = gradient_norm(sys, &p) {
                        scanned += 1;
                        if g < best {
                            best = g;
                            arg = Some(p.clone());
                        }
                        if g <= threshold {
                            pts.push(ScanPoint { x: p, grad_norm: g });
                        }
                    }
                }
                let mut j = d;
                loop {
                    if j == 1 {
                        return (pts, best, arg, scanned);
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < counts[j] {
                        break;
                    }
                    idx[j] = 0;
                }
            }
        })
        .collect();
    let mut report =
        ScanReport { h, threshold, points: Vec::new(), min_norm: f64::INFINITY, argmin: None, scanned: 0 };
    for (pts, best, arg, scanned) in rows {
        report.points.extend(pts);
        report.scanned += scanned;
        if best < report.min_norm {
            report.min_norm = best;
            report.argmin = arg;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisBox;

    fn golden() -> ChargeSystem {
        ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0])]).unwrap()
    }

    #[test]
    fn golden_scan_clusters_at_the_equilibrium() {
        let x = Polytope::from_box(&AxisBox::new(vec![0.3, -0.1], vec![0.5, 0.1]).unwrap());
        // The nearest grid point, x = 0.414, has a gradient norm of about 1.03e-2.
        let r = brute_force_scan(&golden(), &x, 2e-2, 1e-3).unwrap();
        assert!(!r.points.is_empty());
        for p in &r.points {
            assert!((p.x[0] - (2f64.sqrt() - 1.0)).abs() < 2e-3 && p.x[1].abs() < 2e-3, "{:?}", p.x);
            assert!(gradient_norm(&golden(), &p.x).unwrap() <= 2e-2);
        }
        let best = r.argmin.unwrap();
        assert!((best[0] - 0.414).abs() < 1e-12 && best[1].abs() < 1e-12);
    }

    #[test]
    fn far_domain_is_empty() {
        let x = Polytope::from_box(&AxisBox::new(vec![5.0, 5.0], vec![6.0, 6.0]).unwrap());
        let r = brute_force_scan(&golden(), &x, 1e-6, 1e-2).unwrap();
        assert!(r.points.is_empty());
        assert!(r.min_norm > 1e-6);
        assert_eq!(r.scanned, 101 * 101);
    }

    #[test]
    fn symmetric_instance_gives_mirrored_points() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[-0.5, 0.0]), (1.0, &[0.5, 0.0])]).unwrap();
        let x = Polytope::from_box(&AxisBox::new(vec![-0.25, -0.25], vec![0.25, 0.25]).unwrap());
        let r = brute_force_scan(&sys, &x, 0.5, 0.0625).unwrap();
        let mut a: Vec<Vec<f64>> = r.points.iter().map(|p| p.x.clone()).collect();
        let mut b: Vec<Vec<f64>> = a.iter().map(|p| vec![-p[0], p[1]]).collect();
        a.sort_by(|u, v| u.partial_cmp(v).unwrap());
        b.sort_by(|u, v| u.partial_cmp(v).unwrap());
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[test]
    fn oversize_grid_is_rejected() {
        let x = Polytope::from_box(&AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        assert!(matches!(brute_force_scan(&golden(), &x, 1.0, 1e-5), Err(Error::TooFine { .. })));
    }

    #[test]
    fn text_is_deterministic() {
        let x = Polytope::from_box(&AxisBox::new(vec![0.3, -0.1], vec![0.5, 0.1]).unwrap());
        let a = brute_force_scan(&golden(), &x, 5e-2, 1e-2).unwrap().to_text();
        let b = brute_force_scan(&golden(), &x, 5e-2, 1e-2).unwrap().to_text();
        assert_eq!(a, b);
        assert!(a.starts_with("h 1.000000e-2"));
    }
}
