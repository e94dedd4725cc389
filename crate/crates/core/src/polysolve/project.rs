use crate::error::{Error, Result};
use crate::grid::{Halfspace, Polytope, MEMBERSHIP_TOL};

/// Stopping tolerance on the change between Dykstra sweeps.
pub const PROJECTION_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 200_000;

/// Euclidean projection of `x` onto `X`.
///
/// Boxes are handled by clamping. General polytopes use Dykstra's
/// alternating projections onto the half-spaces.
pub fn project(x: &[f64], poly: &Polytope) -> Result<Vec<f64>> {
    if x.len() != poly.dim() {
        return Err(Error::InvalidInput("point dimension does not match the polytope".into()));
    }
    let bbox = poly.bounding_box();
    if poly.is_box() {
        return Ok(bbox.clamp(x));
    }
    if poly.contains_tol(x, 0.0) {
        return Ok(x.to_vec());
    }
    let rows = poly.rows();
    let norms: Vec<f64> = rows.iter().map(|r| r.normal.iter().map(|a| a * a).sum::<f64>()).collect();
    let mut y = x.to_vec();
    let mut incr = vec![vec![0.0; x.len()]; rows.len()];
    for _ in 0..MAX_SWEEPS {
        let prev = y.clone();
        for (i, r) in rows.iter().enumerate() {
            let z: Vec<f64> = y.iter().zip(&incr[i]).map(|(a, b)| a + b).collect();
            let p = halfspace_projection(&z, r, norms[i]);
            for j in 0..y.len() {
                incr[i][j] = z[j] - p[j];
            }
            y = p;
        }
        let change = y.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < PROJECTION_TOL && poly.contains_tol(&y, MEMBERSHIP_TOL) {
            return Ok(y);
        }
    }
    // Plain alternating projections settle residual infeasibility.
    for _ in 0..1000 {
        if poly.contains_tol(&y, MEMBERSHIP_TOL) {
            return Ok(y);
        }
        for (i, r) in rows.iter().enumerate() {
            y = halfspace_projection(&y, r, norms[i]);
        }
    }
    if poly.contains_tol(&y, MEMBERSHIP_TOL) {
        Ok(y)
    } else {
        Err(Error::EmptyPolytope)
    }
}

fn halfspace_projection(z: &[f64], r: &Halfspace, norm2: f64) -> Vec<f64> {
    let v = r.eval(z);
    if v <= 0.0 || norm2 == 0.0 {
        return z.to_vec();
    }
    let t = v / norm2;
    z.iter().zip(&r.normal).map(|(a, n)| a - t * n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisBox;

    fn unit_square() -> AxisBox {
        AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn inside_point_is_fixed() {
        let x = Polytope::from_box(&unit_square());
        assert_eq!(project(&[0.3, 0.7], &x).unwrap(), vec![0.3, 0.7]);
    }

    #[test]
    fn box_clamp() {
        let x = Polytope::from_box(&unit_square());
        assert_eq!(project(&[2.0, 0.5], &x).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn projection_onto_active_face() {
        let mut rows = Polytope::from_box(&unit_square()).rows().to_vec();
        rows.push(Halfspace::new(vec![1.0, 1.0], 1.0));
        let x = Polytope::new(2, rows).unwrap();
        let p = project(&[1.0, 1.0], &x).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn projection_onto_a_vertex() {
        let mut rows = Polytope::from_box(&unit_square()).rows().to_vec();
        rows.push(Halfspace::new(vec![1.0, 1.0], 1.0));
        let x = Polytope::new(2, rows).unwrap();
        let p = project(&[3.0, -1.0], &x).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9 && p[1].abs() < 1e-9, "{p:?}");
    }
}
