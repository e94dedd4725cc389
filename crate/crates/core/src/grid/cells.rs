use super::cuts::advance;
use super::{AxisBox, BoxRelation, Polytope};
use crate::polysolve::project;

/// A minimal box of the grid together with its anchor point in `cell ∩ X`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// Interval index along each axis.
    pub index: Vec<usize>,
    pub bounds: AxisBox,
    pub anchor: Vec<f64>,
}

/// The cells cut out of a polytope by per-axis cut lists.
#[derive(Debug, Clone)]
pub struct CellGrid {
    cuts: Vec<Vec<f64>>,
    domain: Polytope,
}

impl CellGrid {
    /// `cuts` must be sorted, merged, and contain at least two entries per axis.
    pub fn new(cuts: Vec<Vec<f64>>, domain: Polytope) -> Self {
        assert_eq!(cuts.len(), domain.dim());
        assert!(cuts.iter().all(|c| c.len() >= 2), "each axis needs at least two cuts");
        Self { cuts, domain }
    }

    pub fn cuts(&self) -> &[Vec<f64>] {
        &self.cuts
    }

    pub fn domain(&self) -> &Polytope {
        &self.domain
    }

    /// Number of intervals along each axis.
    pub fn shape(&self) -> Vec<usize> {
        self.cuts.iter().map(|c| c.len() - 1).collect()
    }

    /// `Π_j (cuts_j − 1)`.
    pub fn max_cells(&self) -> f64 {
        self.shape().iter().map(|&n| n as f64).product()
    }

    pub fn cell_box(&self, index: &[usize]) -> AxisBox {
        AxisBox {
            lo: index.iter().enumerate().map(|(j, &i)| self.cuts[j][i]).collect(),
            hi: index.iter().enumerate().map(|(j, &i)| self.cuts[j][i + 1]).collect(),
        }
    }

    fn block_box(&self, lo: &[usize], hi: &[usize]) -> AxisBox {
        AxisBox {
            lo: lo.iter().enumerate().map(|(j, &i)| self.cuts[j][i]).collect(),
            hi: hi.iter().enumerate().map(|(j, &i)| self.cuts[j][i]).collect(),
        }
    }

    /// The cell with the given index, or `None` when it misses the domain.
    /// The anchor is the projection of the box center onto `cell ∩ X`.
    pub fn cell(&self, index: &[usize]) -> Option<GridCell> {
        let bounds = self.cell_box(index);
        let center = bounds.center();
        let anchor = match self.domain.relation(&bounds) {
            BoxRelation::Outside => return None,
            BoxRelation::Inside => center,
            BoxRelation::Unknown => {
                let piece = self.domain.intersect_box(&bounds)?;
                project(&center, &piece).ok()?
            }
        };
        Some(GridCell { index: index.to_vec(), bounds, anchor })
    }

    /// Streams every cell meeting the domain in lexicographic index order.
    pub fn enumerate_cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        let shape = self.shape();
        let mut idx = vec![0usize; shape.len()];
        let mut done = shape.contains(&0);
        std::iter::from_fn(move || {
            while !done {
                let current = idx.clone();
                done = !advance(&mut idx, &shape);
                if let Some(cell) = self.cell(&current) {
                    return Some(cell);
                }
            }
            None
        })
    }

    /// Counts the cells meeting the domain without building anchors.
    pub fn count_cells(&self) -> usize {
        self.candidates(|_| true).len()
    }

    /// Indices of the cells meeting the domain for which `keep` accepts every
    /// enclosing block, in lexicographic order. `keep` must be monotone: if it
    /// rejects a box it must reject every sub-box.
    pub fn candidates(&self, keep: impl Fn(&AxisBox) -> bool) -> Vec<Vec<usize>> {
        let d = self.cuts.len();
        let mut out = Vec::new();
        let mut stack = vec![(vec![0usize; d], self.shape())];
        while let Some((lo, hi)) = stack.pop() {
            let bx = self.block_box(&lo, &hi);
            let rel = self.domain.relation(&bx);
            if rel == BoxRelation::Outside || !keep(&bx) {
                continue;
            }
            let (axis, len) = (0..d).map(|j| (j, hi[j] - lo[j])).max_by_key(|&(j, l)| (l, d - j)).unwrap();
            if len == 1 {
                if rel == BoxRelation::Inside || self.domain.intersects_box(&bx) {
                    out.push(lo);
                }
                continue;
            }
            let mid = lo[axis] + len / 2;
            let mut upper_lo = lo.clone();
            upper_lo[axis] = mid;
            let mut lower_hi = hi.clone();
            lower_hi[axis] = mid;
            stack.push((upper_lo, hi));
            stack.push((lo, lower_hi));
        }
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Halfspace;

    fn unit_square() -> Polytope {
        Polytope::from_box(&AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap())
    }

    #[test]
    fn single_cell() {
        let g = CellGrid::new(vec![vec![0.0, 1.0]; 2], unit_square());
        let cells: Vec<_> = g.enumerate_cells().collect();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].anchor, vec![0.5, 0.5]);
    }

    #[test]
    fn two_by_two_in_lexicographic_order() {
        let g = CellGrid::new(vec![vec![0.0, 0.5, 1.0]; 2], unit_square());
        let idx: Vec<_> = g.enumerate_cells().map(|c| c.index).collect();
        assert_eq!(idx, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(g.candidates(|_| true), idx);
    }

    #[test]
    fn triangle_omits_outside_cells() {
        let tri = Polytope::new(
            2,
            vec![
                Halfspace::new(vec![-1.0, 0.0], 0.0),
                Halfspace::new(vec![0.0, -1.0], 0.0),
                Halfspace::new(vec![1.0, 1.0], 1.0),
            ],
        )
        .unwrap();
        let cuts = vec![vec![0.0, 0.25, 0.5, 0.75, 1.0]; 2];
        let g = CellGrid::new(cuts, tri.clone());
        let cells: Vec<_> = g.enumerate_cells().collect();
        // Cells (i, j) meet the closed triangle exactly when i + j ≤ 4; the
        // three with i + j = 4 touch it at a corner.
        assert_eq!(cells.len(), 13);
        for c in &cells {
            assert!(c.index[0] + c.index[1] <= 4);
            assert!(tri.contains(&c.anchor) && c.bounds.inflate(1e-9).contains(&c.anchor));
        }
        assert_eq!(g.count_cells(), 13);
    }

    #[test]
    fn candidates_respect_the_filter() {
        let cuts = vec![(0..=8).map(|i| i as f64 / 8.0).collect::<Vec<_>>(); 2];
        let g = CellGrid::new(cuts, unit_square());
        let target = [0.3, 0.6];
        let hits = g.candidates(|b| b.contains(&target));
        assert_eq!(hits, vec![vec![2, 4]]);
    }
}
