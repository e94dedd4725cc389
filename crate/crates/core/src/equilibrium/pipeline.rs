use rayon::prelude::*;

use super::GridStats;
use crate::error::{CellId, Error, Result};
use crate::grid::{build_axis_cuts, split_domain, AxisBox, CellGrid, GridCell, Halfspace, Polytope};
use crate::potential::ChargeSystem;
use crate::wellbehaved::WellBehaved;

/// The normalized system together with the domain in normalized coordinates.
pub(crate) fn normalize(sys: &ChargeSystem, x: &Polytope) -> Result<(ChargeSystem, Polytope)> {
    if x.dim() != sys.dim() {
        return Err(Error::InvalidInput(format!(
            "domain has dimension {} but the charges live in dimension {}",
            x.dim(),
            sys.dim()
        )));
    }
    let s = sys.scale_x();
    let domain = if x.is_box() {
        let b = x.bounding_box();
        Polytope::from_box(&AxisBox { lo: sys.to_normalized(&b.lo), hi: sys.to_normalized(&b.hi) })
    } else {
        let rows = x.rows().iter().map(|r| Halfspace::new(r.normal.clone(), r.offset / s)).collect();
        Polytope::new(x.dim(), rows)?
    };
    Ok((sys.normalized(), domain))
}

/// A convex piece of the domain with its grid.
pub(crate) struct Piece {
    pub poly: Polytope,
    pub grid: CellGrid,
}

pub(crate) fn build_pieces(
    sys: &ChargeSystem,
    x: &Polytope,
    rho: f64,
    families: &[WellBehaved],
) -> Result<(Vec<Piece>, GridStats)> {
    let polys = split_domain(x, sys, rho);
    let mut stats = GridStats { pieces: polys.len(), ..GridStats::default() };
    let mut pieces = Vec::with_capacity(polys.len());
    for poly in polys {
        let cuts = build_axis_cuts(families, &poly)?;
        stats.cut_counts.push(cuts.counts());
        stats.max_cells.push(cuts.max_cells());
        let grid = CellGrid::new(cuts.cuts, poly.clone());
        pieces.push(Piece { poly, grid });
    }
    Ok((pieces, stats))
}

/// Cells of every piece accepted by `keep`, in piece then lexicographic order.
pub(crate) fn candidate_cells(pieces: &[Piece], keep: impl Fn(&AxisBox) -> bool + Sync) -> Vec<(usize, Vec<usize>)> {
    pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| p.grid.candidates(&keep).into_iter().map(|idx| (i, idx)).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// The cell together with the piece of the domain it sees.
pub(crate) fn cell_domain(piece: &Piece, index: &[usize]) -> Option<(GridCell, Polytope)> {
    let cell = piece.grid.cell(index)?;
    let local = piece.poly.intersect_box(&cell.bounds)?;
    Some((cell, local))
}

/// Outcome of scanning cells in order.
pub(crate) struct Scan<T> {
    pub found: Vec<(CellId, T)>,
    pub error: Option<Error>,
    pub processed: usize,
}

/// Runs `f` on the cells in parallel chunks, keeping results in cell order.
/// Stops after the first chunk containing a result accepted by `stop`.
pub(crate) fn scan_cells<T: Send>(
    cells: &[(usize, Vec<usize>)],
    stop: impl Fn(&T) -> bool + Sync,
    f: impl Fn(usize, &[usize]) -> Result<Option<T>> + Sync,
) -> Scan<T> {
    let chunk = 32 * rayon::current_num_threads().max(1);
    let mut scan = Scan { found: Vec::new(), error: None, processed: 0 };
    for block in cells.chunks(chunk) {
        let results: Vec<Result<Option<T>>> = block.par_iter().map(|(p, idx)| f(*p, idx)).collect();
        scan.processed += block.len();
        let mut done = false;
        for ((p, idx), r) in block.iter().zip(results) {
            match r {
                Ok(Some(v)) => {
                    done |= stop(&v);
                    scan.found.push((CellId { piece: *p, index: idx.clone() }, v));
                }
                Ok(None) => {}
                Err(e) => {
                    if scan.error.is_none() {
                        scan.error = Some(attach_cell(e, CellId { piece: *p, index: idx.clone() }));
                    }
                }
            }
        }
        if done {
            break;
        }
    }
    scan
}

fn attach_cell(e: Error, id: CellId) -> Error {
    match e {
        Error::BudgetExceeded { budget, cell: None } => Error::BudgetExceeded { budget, cell: Some(id) },
        Error::PrecisionLoss(msg) => Error::PrecisionLoss(format!("{id}: {msg}")),
        other => other,
    }
}

/// Runs `f` inside a dedicated pool when a thread count is configured.
pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
