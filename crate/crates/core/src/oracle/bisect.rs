use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bisection record: the final position and the bracket width after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectTrace {
    pub position: f64,
    pub widths: Vec<f64>,
}

/// Position of the equilibrium between positive charges `q1` at `0` and `q2`
/// at `separation`, to within `tol`.
pub fn two_charge_bisect(q1: f64, q2: f64, separation: f64, tol: f64) -> Result<f64> {
    two_charge_bisect_trace(q1, q2, separation, tol).map(|t| t.position)
}

/// [`two_charge_bisect`] with the bracket widths recorded.
pub fn two_charge_bisect_trace(q1: f64, q2: f64, separation: f64, tol: f64) -> Result<BisectTrace> {
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(Error::InvalidInput(format!("charges must be positive, got {q1} and {q2}")));
    }
    if !(separation > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput("separation and tolerance must be positive".into()));
    }
    // Axial force component: negative near the first charge, positive near the second.
    let force = |x: f64| -q1 / (x * x) + q2 / ((separation - x) * (separation - x));
    let (mut lo, mut hi) = (0.0, separation);
    let mut widths = Vec::new();
    while hi - lo > 2.0 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if force(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        widths.push(hi - lo);
    }
    Ok(BisectTrace { position: 0.5 * (lo + hi), widths })
}
