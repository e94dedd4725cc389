use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::AxisBox;
use crate::interval::gamma;
use crate::potential::{derivative_bound, determinant, inverse, eval_gradient, hessian, ChargeSystem};
use crate::taylor::box_distance;

/// How a Poincaré–Miranda check was settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PmMethod {
    /// The quadratic contraction bound held.
    Analytic,
    /// Every face sample kept its sign beyond the Lipschitz margin.
    Sampling,
    /// Neither route succeeded.
    Failed,
}

/// Details of a Poincaré–Miranda check on the box `x + [−α, α]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmCertificate {
    pub alpha: f64,
    pub certified: bool,
    pub method: PmMethod,
    /// `‖M ∇f(x)‖∞` with `M ≈ (∇²f(x))⁻¹`.
    pub c0: f64,
    /// `‖M ∇²f(x) − I‖∞`.
    pub c1: f64,
    /// Curvature coefficient: `‖M‖∞ d²/2` times the third-derivative bound on the box.
    pub c2: f64,
    pub hessian_det: f64,
}

const MAX_FACE_POINTS: usize = 1 << 20;

/// Whether `∇f` certainly vanishes somewhere in `x + [−α, α]^d`.
pub fn certify_pm(sys: &ChargeSystem, x: &[f64], alpha: f64) -> Result<bool> {
    certify_pm_detail(sys, x, alpha).map(|c| c.certified)
}

struct Linearization {
    m: Vec<Vec<f64>>,
    m_norm: f64,
    c0: f64,
    c1: f64,
    det: f64,
}

fn linearize(sys: &ChargeSystem, x: &[f64]) -> Result<Linearization> {
    let d = sys.dim();
    let a = hessian(sys, x)?;
    let det = determinant(&a);
    if !(det.abs() >= 1e-300) {
        return Err(Error::SingularHessian { det });
    }
    let m = inverse(&a).ok_or(Error::SingularHessian { det })?;
    let g = eval_gradient(sys, x)?;
    let (mut grad_err, mut hess_err) = (0.0, 0.0);
    for c in sys.charges() {
        let r = crate::potential::euclidean(x, &c.position);
        grad_err += c.q.abs() / (r * r);
        hess_err += derivative_bound(c, 2, r);
    }
    grad_err *= gamma(16 * d + 32);
    hess_err *= 1e-12;
    let m_norm = inf_norm(&m);
    let slack = 1.0 + gamma(4 * d + 8);
    let mg = (0..d).map(|i| (0..d).map(|j| m[i][j] * g[j]).sum::<f64>().abs()).fold(0.0, f64::max);
    let c0 = (mg + m_norm * grad_err) * slack;
    let mut ma = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            ma[i][j] = (0..d).map(|k| m[i][k] * a[k][j]).sum::<f64>() - if i == j { 1.0 } else { 0.0 };
        }
    }
    let c1 = (inf_norm(&ma) + m_norm * d as f64 * hess_err + gamma(2 * d + 4) * m_norm * inf_norm(&a)) * slack;
    Ok(Linearization { m, m_norm, c0, c1, det })
}

fn third_derivative_bound(sys: &ChargeSystem, bx: &AxisBox, order: u32) -> f64 {
    sys.charges().iter().map(|c| derivative_bound(c, order, box_distance(bx, &c.position))).sum()
}

/// [`certify_pm`] with the intermediate bounds.
///
/// With `h(u) = M ∇f(x + u)`, Taylor's theorem gives
/// `‖h(u) − u‖∞ ≤ c0 + c1 α + c2 α²` on the box. When that is below `α`,
/// `h_j` is positive on the face `u_j = α` and negative on `u_j = −α`, so
/// `h`, and with it `∇f`, has a zero inside. Otherwise the faces are sampled
/// with a margin from the Hessian bound on the box.
pub fn certify_pm_detail(sys: &ChargeSystem, x: &[f64], alpha: f64) -> Result<PmCertificate> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("half-width must be positive, got {alpha}")));
    }
    let lin = linearize(sys, x)?;
    let d = sys.dim();
    let bx = AxisBox::cube(x, 2.0 * alpha);
    let m3 = third_derivative_bound(sys, &bx, 3);
    let c2 = lin.m_norm * (d * d) as f64 / 2.0 * m3;
    let mut cert = PmCertificate {
        alpha,
        certified: false,
        method: PmMethod::Failed,
        c0: lin.c0,
        c1: lin.c1,
        c2,
        hessian_det: lin.det,
    };
    if !m3.is_finite() {
        return Ok(cert);
    }
    if (lin.c0 + lin.c1 * alpha + c2 * alpha * alpha) * (1.0 + 1e-12) < alpha {
        cert.certified = true;
        cert.method = PmMethod::Analytic;
        return Ok(cert);
    }
    if sample_faces(sys, x, alpha, &lin, &bx)? {
        cert.certified = true;
        cert.method = PmMethod::Sampling;
    }
    Ok(cert)
}

/// Certifies with the half-width chosen from the contraction bound, capped
/// at `alpha_max`.
pub(crate) fn certify_adaptive(sys: &ChargeSystem, x: &[f64], alpha_max: f64) -> Result<PmCertificate> {
    let outer = certify_pm_detail(sys, x, alpha_max)?;
    if outer.method == PmMethod::Failed || outer.c1 >= 1.0 {
        return Ok(outer);
    }
    let (c0, c1, c2) = (outer.c0, outer.c1, outer.c2);
    let (r1, r2) = if c2 > 0.0 {
        let disc = (1.0 - c1) * (1.0 - c1) - 4.0 * c2 * c0;
        if disc <= 0.0 {
            return Ok(outer);
        }
        let s = disc.sqrt();
        (2.0 * c0 / (1.0 - c1 + s), (1.0 - c1 + s) / (2.0 * c2))
    } else {
        (c0 / (1.0 - c1), f64::INFINITY)
    };
    let target = if 2.0 * r1 < r2 { 2.0 * r1 } else { 0.5 * (r1 + r2) };
    if !(target > 0.0) || target >= alpha_max {
        return Ok(outer);
    }
    let inner = certify_pm_detail(sys, x, target)?;
    Ok(if inner.certified { inner } else { outer })
}

fn sample_faces(sys: &ChargeSystem, x: &[f64], alpha: f64, lin: &Linearization, bx: &AxisBox) -> Result<bool> {
    let d = sys.dim();
    if d == 1 {
        return Ok(face_sign_ok(sys, x, &[alpha], 0, 1.0, 0.0, lin)? && face_sign_ok(sys, x, &[-alpha], 0, -1.0, 0.0, lin)?);
    }
    let m2 = third_derivative_bound(sys, bx, 2);
    let row_l1: Vec<f64> = lin.m.iter().map(|r| r.iter().map(|v| v.abs()).sum()).collect();
    let mut per_side = 17usize;
    while per_side.pow(d as u32 - 1) * 2 * d <= MAX_FACE_POINTS {
        let spacing = 2.0 * alpha / (per_side - 1) as f64;
        let mut all = true;
        'faces: for j in 0..d {
            let margin = row_l1[j] * m2 * (d - 1) as f64 * spacing / 2.0;
            for sign in [1.0, -1.0] {
                let mut idx = vec![0usize; d - 1];
                loop {
                    let mut u = vec![0.0; d];
                    let mut t = 0;
                    for (i, ui) in u.iter_mut().enumerate() {
                        if i == j {
                            *ui = sign * alpha;
                        } else {
                            *ui = -alpha + spacing * idx[t] as f64;
                            t += 1;
                        }
                    }
                    if !face_sign_ok(sys, x, &u, j, sign, margin, lin)? {
                        all = false;
                        break 'faces;
                    }
                    if !crate::grid::advance(&mut idx, &vec![per_side; d - 1]) {
                        break;
                    }
                }
            }
        }
        if all {
            return Ok(true);
        }
        per_side = 2 * per_side - 1;
    }
    Ok(false)
}

fn face_sign_ok(sys: &ChargeSystem, x: &[f64], u: &[f64], j: usize, sign: f64, margin: f64, lin: &Linearization) -> Result<bool> {
    let p: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + b).collect();
    let g = eval_gradient(sys, &p)?;
    let gmag: f64 = sys
        .charges()
        .iter()
        .map(|c| {
            let r = crate::potential::euclidean(&p, &c.position);
            c.q.abs() / (r * r)
        })
        .sum::<f64>()
        * gamma(16 * sys.dim() + 32);
    let h: f64 = (0..sys.dim()).map(|k| lin.m[j][k] * g[k]).sum();
    let err = lin.m[j].iter().map(|v| v.abs()).sum::<f64>() * gmag + gamma(2 * sys.dim()) * h.abs();
    Ok(sign * h > margin + err)
}

fn inf_norm(m: &[Vec<f64>]) -> f64 {
    m.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> ChargeSystem {
        ChargeSystem::from_pairs(&[(1.0, &[-0.5, 0.0]), (1.0, &[0.5, 0.0])]).unwrap()
    }

    #[test]
    fn symmetric_midpoint_is_certified() {
        let c = certify_pm_detail(&symmetric(), &[0.0, 0.0], 1e-3).unwrap();
        assert!(c.certified && c.method == PmMethod::Analytic, "{c:?}");
        assert!(c.hessian_det < 0.0);
    }

    #[test]
    fn far_point_fails() {
        assert!(!certify_pm(&symmetric(), &[0.0, 0.2], 1e-3).unwrap());
    }

    #[test]
    fn vanishing_box_at_non_stationary_point_fails() {
        assert!(!certify_pm(&symmetric(), &[1e-6, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn adaptive_radius_shrinks_to_the_zero() {
        let sys = symmetric();
        let c = certify_adaptive(&sys, &[1e-9, -2e-9], 1e-3).unwrap();
        assert!(c.certified && c.alpha < 1e-3 && c.alpha >= 2e-9, "{c:?}");
    }

    #[test]
    fn point_on_a_charge_is_rejected() {
        assert!(matches!(certify_pm(&symmetric(), &[0.5, 0.0], 1e-3), Err(Error::SingularPoint { .. })));
    }

}
