use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{determinant, eval_gradient, hessian, inverse, ChargeSystem};

/// Target gradient norm of [`newton_refine`].
pub const NEWTON_TOL: f64 = 1e-12;

/// Outcome of [`newton_refine`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub point: Vec<f64>,
    /// Accepted Newton steps.
    pub iterations: usize,
    /// `‖∇f‖∞` at the returned point.
    pub grad_norm: f64,
    /// Whether the norm reached [`NEWTON_TOL`].
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration on `∇f` starting at `x0`. Each step is halved
/// until the gradient norm decreases; the iteration stops at
/// [`NEWTON_TOL`], after `max_iters` steps, or when no damped step helps.
pub fn newton_refine(sys: &ChargeSystem, x0: &[f64], max_iters: usize) -> Result<NewtonReport> {
    let mut x = x0.to_vec();
    let mut g = eval_gradient(sys, &x)?;
    let mut norm = inf_norm(&g);
    let mut iterations = 0;
    while norm > NEWTON_TOL && iterations < max_iters {
        let h = hessian(sys, &x)?;
        let det = determinant(&h);
        if !(det.abs() >= 1e-300) {
            return Err(Error::SingularHessian { det });
        }
        let m = inverse(&h).ok_or(Error::SingularHessian { det })?;
        let step: Vec<f64> = m.iter().map(|row| -row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()).collect();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let y: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if let Ok(gy) = eval_gradient(sys, &y) {
                let ny = inf_norm(&gy);
                if ny < norm {
                    accepted = Some((y, gy, ny));
                    break;
                }
            }
            t /= 2.0;
        }
        let Some((y, gy, ny)) = accepted else {
            break;
        };
        x = y;
        g = gy;
        norm = ny;
        iterations += 1;
    }
    Ok(NewtonReport { point: x, iterations, grad_norm: norm, converged: norm <= NEWTON_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_midpoint_does_not_move() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[-0.5, 0.0]), (1.0, &[0.5, 0.0])]).unwrap();
        let r = newton_refine(&sys, &[0.0, 0.0], 10).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.point, vec![0.0, 0.0]);
        assert!(r.converged);
    }

    #[test]
    fn converges_to_the_golden_equilibrium() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0])]).unwrap();
        let x = 2f64.sqrt() - 1.0;
        let r = newton_refine(&sys, &[x + 1e-3, -1e-3], 20).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.point[0] - x).abs() < 1e-12 && r.point[1].abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn never_claims_false_success() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0])]).unwrap();
        match newton_refine(&sys, &[3.0, 0.0], 5) {
            Ok(r) => assert!(!r.converged),
            Err(e) => assert!(matches!(e, Error::SingularHessian { .. })),
        }
    }
}
