use thiserror::Error;

/// Identifies a grid cell inside the solver pipeline: the convex piece of the
/// domain it belongs to and its interval index along each axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellId {
    pub piece: usize,
    pub index: Vec<usize>,
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "piece {} cell {:?}", self.piece, self.index)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point coincides with charge {charge}")]
    SingularPoint { charge: usize },
    #[error("charges {0} and {1} share a position")]
    CoincidentCharges(usize, usize),
    #[error("derivative order {order} overflows the coefficient representation")]
    DegreeOverflow { order: u32 },
    #[error("safe distance tau must be positive, got {0}")]
    InvalidTau(f64),
    #[error("sum of an empty family")]
    EmptySum,
    #[error("product of an empty family")]
    EmptyProduct,
    #[error("exclusion radius needs at least two charges")]
    TooFewCharges,
    #[error("domain is unbounded along axis {axis}")]
    UnboundedDomain { axis: usize },
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("subdivision budget of {budget} boxes exceeded{}", cell.as_ref().map(|c| format!(" in {c}")).unwrap_or_default())]
    BudgetExceeded { budget: usize, cell: Option<CellId> },
    #[error("double precision cannot resolve the requested tolerance: {0}")]
    PrecisionLoss(String),
    #[error("Hessian is numerically singular (det = {det:e})")]
    SingularHessian { det: f64 },
    #[error("scan grid of {points:e} points exceeds the cap of {cap:e}")]
    TooFine { points: f64, cap: f64 },
    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

pub type Result<T> = std::result::Result<T, Error>;
