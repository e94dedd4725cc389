use super::{AxisBox, Polytope};
use crate::error::{Error, Result};
use crate::potential::ChargeSystem;
use crate::wellbehaved::WellBehaved;

/// Cuts closer than this are merged, keeping the smaller coordinate.
pub const CUT_MERGE_TOL: f64 = 1e-12;

/// Half-width of the cubes around charges that contain no point with
/// `‖∇f‖∞ ≤ eps`, for a normalized system with at least two charges.
pub fn exclusion_radius(sys: &ChargeSystem, eps: f64) -> Result<f64> {
    if sys.len() < 2 {
        return Err(Error::TooFewCharges);
    }
    exclusion_radius_formula(sys, eps)
}

/// The exclusion formula without the two-charge precondition. For a single
/// charge the gradient near the charge only grows, so the same radius is sound.
pub(crate) fn exclusion_radius_formula(sys: &ChargeSystem, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("gradient tolerance must be finite and nonnegative, got {eps}")));
    }
    let d = sys.dim() as f64;
    let n = sys.len() as f64;
    Ok(1.0 / (d * d.sqrt() * (4.0 * n * sys.q_max() + eps)))
}

/// The cube `a_i ± ρ` around each charge.
pub fn exclusion_boxes(sys: &ChargeSystem, rho: f64) -> Vec<AxisBox> {
    sys.charges().iter().map(|c| AxisBox::cube(&c.position, 2.0 * rho)).collect()
}

/// Splits `x` by the hyperplanes `x_j = a_{i,j} ± ρ`, dropping pieces inside an
/// exclusion cube and empty pieces. Pieces are returned in lexicographic order
/// of their slab indices.
pub fn split_domain(x: &Polytope, sys: &ChargeSystem, rho: f64) -> Vec<Polytope> {
    let d = x.dim();
    let bbox = x.bounding_box();
    let excl = exclusion_boxes(sys, rho);
    let slabs: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|j| {
            let mut pts: Vec<f64> = sys
                .charges()
                .iter()
                .flat_map(|c| [c.position[j] - rho, c.position[j] + rho])
                .filter(|v| *v > bbox.lo[j] && *v < bbox.hi[j])
                .collect();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let mut edges = vec![bbox.lo[j]];
            edges.extend(pts);
            edges.push(bbox.hi[j]);
            edges.windows(2).map(|w| (w[0], w[1])).collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let lo: Vec<f64> = (0..d).map(|j| slabs[j][idx[j]].0).collect();
        let hi: Vec<f64> = (0..d).map(|j| slabs[j][idx[j]].1).collect();
        let piece_box = AxisBox { lo, hi };
        if !excl.iter().any(|e| piece_box.is_subset_of(e)) {
            if let Some(p) = x.intersect_box(&piece_box) {
                out.push(p);
            }
        }
        if !advance(&mut idx, &slabs.iter().map(Vec::len).collect::<Vec<_>>()) {
            break;
        }
    }
    out
}

/// Lexicographic odometer step; false once every index wrapped.
pub(crate) fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < lens[j] {
            return true;
        }
        idx[j] = 0;
    }
    false
}

/// Sorted cut coordinates per axis together with the cut-count bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisCuts {
    pub cuts: Vec<Vec<f64>>,
    /// `Σ_ℓ (1 + 4 C_ℓ d)(1 + Σ_t n_{ℓ,β_t})`, the per-axis bound on cut counts.
    pub formula_bound: usize,
    /// The `β` schedule of each family.
    pub schedules: Vec<Vec<f64>>,
}

impl AxisCuts {
    pub fn counts(&self) -> Vec<usize> {
        self.cuts.iter().map(Vec::len).collect()
    }

    /// `Π_j (cuts_j − 1)`, an upper bound on the cell count.
    pub fn max_cells(&self) -> f64 {
        self.cuts.iter().map(|c| c.len().saturating_sub(1) as f64).product()
    }
}

/// `β_min 2^t` for `t = 0..=t_max`, with `t_max` the smallest `t` such that
/// `β_min 2^t ≥ width`.
pub fn beta_schedule(beta_min: f64, width: f64) -> Vec<f64> {
    let mut out = vec![beta_min];
    let mut beta = beta_min;
    while beta < width {
        beta *= 2.0;
        out.push(beta);
    }
    out
}

fn uniform(lo: f64, hi: f64, pieces: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / pieces as f64;
    (0..=pieces).map(move |i| if i == pieces { hi } else { lo + step * i as f64 })
}

/// Cut planes of the variable-coarseness grid over `x`: the bounding box and
/// every cover box of every `β` in each family's schedule, each split into
/// `4 C_ℓ d` uniform pieces. Cover boxes missing the bounding box and cut
/// coordinates outside it do not affect any cell and are skipped.
pub fn build_axis_cuts(funcs: &[WellBehaved], x: &Polytope) -> Result<AxisCuts> {
    let d = x.dim();
    let bbox = x.bounding_box().clone();
    for j in 0..d {
        if !bbox.lo[j].is_finite() || !bbox.hi[j].is_finite() {
            return Err(Error::UnboundedDomain { axis: j });
        }
    }
    let width = bbox.max_width();
    let mut raw: Vec<Vec<f64>> = (0..d).map(|j| vec![bbox.lo[j], bbox.hi[j]]).collect();
    let mut formula_bound = 0usize;
    let mut schedules = Vec::with_capacity(funcs.len());
    for f in funcs {
        let pieces = (4 * f.params.c as usize) * d;
        for (j, axis) in raw.iter_mut().enumerate() {
            axis.extend(uniform(bbox.lo[j], bbox.hi[j], pieces));
        }
        let schedule = beta_schedule(f.params.beta_min, width);
        let mut total_boxes = 0usize;
        for &beta in &schedule {
            let boxes = f.cover.boxes(beta);
            total_boxes += boxes.len();
            for b in boxes.iter().filter(|b| b.intersects(&bbox)) {
                for (j, axis) in raw.iter_mut().enumerate() {
                    axis.extend(
                        uniform(b.lo[j], b.hi[j], pieces).filter(|v| *v >= bbox.lo[j] && *v <= bbox.hi[j]),
                    );
                }
            }
        }
        formula_bound += (1 + pieces) * (1 + total_boxes);
        schedules.push(schedule);
    }
    let cuts = raw.into_iter().map(merge_cuts).collect();
    Ok(AxisCuts { cuts, formula_bound, schedules })
}

/// Sorts and merges coordinates closer than [`CUT_MERGE_TOL`].
pub fn merge_cuts(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for c in v {
        match out.last() {
            Some(&last) if c - last <= CUT_MERGE_TOL => {}
            _ => out.push(c),
        }
    }
    out
}

/// The grid induced by the single-charge families of a normalized system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeGrid {
    /// Exclusion half-width, also used as the safe distance of every family.
    pub rho: f64,
    pub families: Vec<WellBehaved>,
    pub cuts: AxisCuts,
}

/// Superimposes the grids of the charges' own families over `x`, with the
/// safe distance set to the exclusion radius for gradient tolerance `eps`.
pub fn charge_grid(sys: &ChargeSystem, x: &Polytope, eps: f64) -> Result<ChargeGrid> {
    let rho = exclusion_radius_formula(sys, eps)?;
    let families = sys
        .charges()
        .iter()
        .map(|c| crate::wellbehaved::single_charge_params(c, rho))
        .collect::<Result<Vec<_>>>()?;
    let cuts = build_axis_cuts(&families, x)?;
    Ok(ChargeGrid { rho, families, cuts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Charge;
    use crate::wellbehaved::{polynomial_family, single_charge_params};

    #[test]
    fn exclusion_radius_examples() {
        let one_d = ChargeSystem::from_pairs(&[(1.0, &[0.0]), (1.0, &[1.0])]).unwrap();
        assert_eq!(exclusion_radius(&one_d, 0.0).unwrap(), 0.125);
        let two_d = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0])]).unwrap();
        let r = exclusion_radius(&two_d, 0.5).unwrap();
        assert!((r - 1.0 / (2.0 * 2f64.sqrt() * 16.5)).abs() < 1e-15);
        assert!((r - 0.021427).abs() < 1e-6);
        let three_d = ChargeSystem::from_pairs(&[(1.0, &[0.0; 3]), (1.0, &[1.0, 0.0, 0.0])]).unwrap();
        assert!((exclusion_radius(&three_d, 1.0).unwrap() - 0.021383).abs() < 1e-6);
        let single = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0])]).unwrap();
        assert_eq!(exclusion_radius(&single, 0.1), Err(Error::TooFewCharges));
    }

    #[test]
    fn centered_charge_leaves_eight_pieces() {
        let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0])]).unwrap();
        let x = Polytope::from_box(&AxisBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap());
        let pieces = split_domain(&x, &sys, 0.1);
        assert_eq!(pieces.len(), 8);
    }

    #[test]
    fn outer_box_contributes_uniform_cuts() {
        let c = Charge::new(1.0, vec![5.0, 5.0]).unwrap();
        let f = single_charge_params(&c, 0.5).unwrap();
        let x = Polytope::from_box(&AxisBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap());
        let cuts = build_axis_cuts(&[f], &x).unwrap();
        // The cover boxes around the distant charge miss the domain.
        assert_eq!(cuts.counts(), vec![33, 33]);
    }

    #[test]
    fn schedule_doubles_until_width() {
        assert_eq!(beta_schedule(1.0, 8.0), vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(beta_schedule(1.0, 0.5), vec![1.0]);
    }

    #[test]
    fn empty_cover_gives_only_bounding_box_cuts() {
        let f = polynomial_family(2, 1.0);
        let x = Polytope::from_box(&AxisBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap());
        let cuts = build_axis_cuts(&[f], &x).unwrap();
        assert_eq!(cuts.counts(), vec![17, 17]);
    }

    #[test]
    fn merge_keeps_smaller_coordinate() {
        assert_eq!(merge_cuts(vec![1.0 + 1e-13, 0.0, 1.0, 0.5]), vec![0.0, 0.5, 1.0]);
    }
}
