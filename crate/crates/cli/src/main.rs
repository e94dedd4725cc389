//! `equilibria`: command-line front end for the equilibrium solvers.

mod instance;
mod output;
mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use equilibria_core::equilibrium::{
    solve_strong_auto_with, solve_strong_with, solve_weak_with, SolverConfig, StrongReport, WeakAnswer,
};
use equilibria_core::grid::{charge_grid, exclusion_boxes, AxisBox, Halfspace, Polytope};
use equilibria_core::oracle::{brute_force_scan, two_charge_bisect_trace};
use equilibria_core::potential::{
    euclidean, eval_gradient, eval_potential, hessian, hessian_det, ChargeSystem,
};
use equilibria_core::{Error, Result};
use serde_json::{json, Value};

use instance::Instance;

#[derive(Parser)]
#[command(name = "equilibria", version, about = "Certified equilibrium points of point-charge potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance file (JSON).
    instance: PathBuf,
    /// Override the instance's epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the instance's delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Print a machine-readable report.
    #[arg(long)]
    json: bool,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Box budget of each feasibility solve.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// A point with small gradient, or a certificate that none has gradient below delta.
    SolveWeak {
        #[command(flatten)]
        common: Common,
        /// Report every solution cell instead of the first.
        #[arg(long)]
        enumerate_all: bool,
    },
    /// A certified point near an exact, strongly non-degenerate equilibrium.
    SolveStrong {
        #[command(flatten)]
        common: Common,
        /// Try delta = 1, 1/2, 1/4, ... instead of a fixed delta.
        #[arg(long)]
        auto: bool,
    },
    /// Dump the grid induced by the charges as CSV and, in the plane, SVG.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Require the SVG rendering (fails for d > 2).
        #[arg(long)]
        svg: bool,
        /// Also write one line per cell.
        #[arg(long)]
        cells: bool,
    },
    /// Reference computations: dense grid scan and two-charge bisection.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Scan a uniform grid of the domain.
        #[arg(long)]
        scan: bool,
        /// Bisect between the two charges of a two-charge instance.
        #[arg(long)]
        bisect: bool,
        /// Scan spacing.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Gradient-norm threshold of the scan (default: delta, else epsilon).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Potential, gradient and Hessian at a point.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
}

/// Exit codes.
const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_NO_ANSWER: u8 = 4;
const EXIT_SVG_DIMENSION: u8 = 5;
const EXIT_TOO_FINE: u8 = 6;

const MAX_CELL_LINES: f64 = 1e6;

struct Report {
    code: u8,
    json: Value,
    text: String,
}

/// A failure of a command: a solver error or a request the CLI refuses.
enum Failure {
    Core(Error),
    SvgDimension(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) => exit_code(e),
            Failure::SvgDimension(_) => EXIT_SVG_DIMENSION,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::SvgDimension(d) => format!("SVG output needs d = 2, the instance has d = {d}"),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_)
        | Error::CoincidentCharges(..)
        | Error::UnboundedDomain { .. }
        | Error::EmptyPolytope
        | Error::SingularPoint { .. } => EXIT_INPUT,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::TooFine { .. } => EXIT_TOO_FINE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, json) = match &cli.command {
        Command::SolveWeak { common, .. }
        | Command::SolveStrong { common, .. }
        | Command::Grid { common, .. }
        | Command::Oracle { common, .. }
        | Command::Eval { common, .. } => (common, common.json),
    };
    if let Some(n) = common.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().is_err() {
            eprintln!("error: cannot configure {n} threads");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let result = Instance::load(&common.instance).map_err(Failure::from).and_then(|inst| run(&cli.command, &inst));
    match result {
        Ok(r) => {
            if json {
                println!("{}", output::to_json(&r.json));
            } else {
                print!("{}", r.text);
            }
            ExitCode::from(r.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: &Command, inst: &Instance) -> std::result::Result<Report, Failure> {
    match cmd {
        Command::SolveWeak { common, enumerate_all } => Ok(solve_weak(inst, common, *enumerate_all)?),
        Command::SolveStrong { common, auto } => Ok(solve_strong(inst, common, *auto)?),
        Command::Grid { common, out, svg, cells } => {
            let d = inst.system.dim();
            if *svg && d != 2 {
                return Err(Failure::SvgDimension(d));
            }
            Ok(grid(inst, common, out, *cells)?)
        }
        Command::Oracle { common, scan, bisect, h, threshold } => {
            Ok(oracle(inst, common, *scan, *bisect, *h, *threshold)?)
        }
        Command::Eval { point, .. } => Ok(eval(inst, point)?),
    }
}

fn config(common: &Common) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(b) = common.budget {
        cfg.budget = b;
    }
    cfg
}

fn epsilon(inst: &Instance, common: &Common) -> f64 {
    common.epsilon.unwrap_or(inst.epsilon)
}

fn delta(inst: &Instance, common: &Common) -> Option<f64> {
    common.delta.or(inst.delta)
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" ")
}

fn solve_weak(inst: &Instance, common: &Common, enumerate_all: bool) -> Result<Report> {
    let eps = epsilon(inst, common);
    let delta = delta(inst, common).unwrap_or(eps / 100.0);
    let mut cfg = config(common);
    cfg.enumerate_all = enumerate_all || inst.file.mode.enumerate_all;
    let r = solve_weak_with(&inst.system, &inst.domain, eps, delta, &cfg)?;
    let stats = json!({
        "pieces": r.stats.pieces,
        "candidates": r.stats.candidates,
        "solved": r.stats.solved,
        "kernel_boxes": r.stats.kernel_boxes,
        "max_k": r.stats.max_k,
    });
    let points: Vec<&Vec<f64>> = if cfg.enumerate_all {
        r.points.iter().map(|(_, p)| p).collect()
    } else {
        r.points.iter().take(1).map(|(_, p)| p).collect()
    };
    let mut text = String::new();
    let (code, json) = match &r.answer {
        WeakAnswer::Point { x, residual } => {
            let _ = writeln!(text, "point {}", fmt_point(x));
            let _ = writeln!(text, "gradient residual {residual:.6e} (epsilon {eps:.6e})");
            if points.len() > 1 {
                for p in &points[1..] {
                    let _ = writeln!(text, "also {}", fmt_point(p));
                }
            }
            (
                0,
                json!({"command": "solve-weak", "status": "point", "epsilon": eps, "delta": delta,
                       "point": x, "residual": residual, "points": points, "stats": stats}),
            )
        }
        WeakAnswer::NoDeltaSolution { delta } => {
            let _ = writeln!(text, "no point has gradient norm at most delta = {delta:.6e}");
            (
                EXIT_NO_ANSWER,
                json!({"command": "solve-weak", "status": "no_delta_solution", "epsilon": eps, "delta": delta,
                       "point": null, "residual": null, "points": [], "stats": stats}),
            )
        }
    };
    Ok(Report { code, json, text })
}

fn solve_strong(inst: &Instance, common: &Common, auto: bool) -> Result<Report> {
    let eps = epsilon(inst, common);
    let cfg = config(common);
    let auto = auto || inst.file.mode.auto;
    let r: StrongReport = if auto {
        solve_strong_auto_with(&inst.system, &inst.domain, eps, &cfg)?
    } else {
        let Some(delta) = delta(inst, common) else {
            return Err(Error::InvalidInput("solve-strong needs a delta or --auto".into()));
        };
        solve_strong_with(&inst.system, &inst.domain, eps, delta, &cfg)?
    };
    let params = r.params.map(|p| json!({"delta_prime": p.delta_prime, "alpha": p.alpha, "eps_prime": p.eps_prime}));
    let mut text = String::new();
    let (code, json) = match &r.answer {
        Some(a) => {
            let _ = writeln!(text, "point {}", fmt_point(&a.point));
            let _ = writeln!(text, "hessian determinant {:.6e} (delta {:.6e})", a.hessian_det, a.delta);
            let _ = writeln!(text, "alpha {:.6e}", a.alpha);
            let _ = writeln!(
                text,
                "certificate {}",
                if a.certified { "verified: an exact equilibrium lies within alpha in every coordinate" } else { "not verified" }
            );
            (
                0,
                json!({
                    "command": "solve-strong", "status": "found", "epsilon": eps, "delta": a.delta,
                    "point": a.point, "hessian_det": a.hessian_det, "alpha": a.alpha, "certified": a.certified,
                    "branch": a.branch, "gradient_residual": a.gradient_residual, "deltas_tried": r.deltas,
                    "params": params,
                    "certificate": {
                        "method": format!("{:?}", a.certificate.method).to_lowercase(),
                        "c0": a.certificate.c0, "c1": a.certificate.c1, "c2": a.certificate.c2,
                    },
                }),
            )
        }
        None => {
            let status = if auto { "exhausted" } else { "not_found" };
            if auto {
                let _ = writeln!(text, "no certified point for any delta down to {:.6e}", cfg.delta_floor);
            } else {
                let _ = writeln!(text, "no strongly non-degenerate equilibrium for delta = {:.6e}", r.deltas[0]);
            }
            (
                EXIT_NO_ANSWER,
                json!({"command": "solve-strong", "status": status, "epsilon": eps,
                       "delta": r.deltas.last(), "deltas_tried": r.deltas, "params": params,
                       "delta_floor": cfg.delta_floor}),
            )
        }
    };
    Ok(Report { code, json, text })
}

fn to_caller(sys: &ChargeSystem, b: &AxisBox) -> AxisBox {
    AxisBox { lo: sys.from_normalized(&b.lo), hi: sys.from_normalized(&b.hi) }
}

fn normalized_domain(sys: &ChargeSystem, x: &Polytope) -> Result<Polytope> {
    if x.is_box() {
        let b = x.bounding_box();
        return Ok(Polytope::from_box(&AxisBox { lo: sys.to_normalized(&b.lo), hi: sys.to_normalized(&b.hi) }));
    }
    let rows = x.rows().iter().map(|r| Halfspace::new(r.normal.clone(), r.offset / sys.scale_x())).collect();
    Polytope::new(x.dim(), rows)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn grid(inst: &Instance, common: &Common, out: &Path, want_cells: bool) -> Result<Report> {
    let sys = &inst.system;
    let d = sys.dim();
    let tol = delta(inst, common).unwrap_or_else(|| epsilon(inst, common)) / sys.gradient_scale();
    let sys_n = sys.normalized();
    let dom_n = normalized_domain(sys, &inst.domain)?;
    let cg = charge_grid(&sys_n, &dom_n, tol)?;
    let cuts: Vec<Vec<f64>> = cg.cuts.cuts.iter().map(|c| c.iter().map(|v| v * sys.scale_x()).collect()).collect();
    std::fs::create_dir_all(out).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out.display())))?;
    let mut files = Vec::new();

    let mut csv = String::from("axis,index,value\n");
    for (j, axis) in cuts.iter().enumerate() {
        for (i, v) in axis.iter().enumerate() {
            let _ = writeln!(csv, "{j},{i},{v:.16e}");
        }
    }
    let path = out.join("cuts.csv");
    write_file(&path, &csv)?;
    files.push(path.display().to_string());

    if want_cells {
        if cg.cuts.max_cells() > MAX_CELL_LINES {
            return Err(Error::TooFine { points: cg.cuts.max_cells(), cap: MAX_CELL_LINES });
        }
        let grid = equilibria_core::grid::CellGrid::new(cuts.clone(), inst.domain.clone());
        let mut body = String::new();
        let header: Vec<String> = (0..d)
            .map(|j| format!("i{j}"))
            .chain((0..d).map(|j| format!("lo{j}")))
            .chain((0..d).map(|j| format!("hi{j}")))
            .collect();
        let _ = writeln!(body, "{}", header.join(","));
        for c in grid.enumerate_cells() {
            let fields: Vec<String> = c
                .index
                .iter()
                .map(|i| i.to_string())
                .chain(c.bounds.lo.iter().chain(&c.bounds.hi).map(|v| format!("{v:.16e}")))
                .collect();
            let _ = writeln!(body, "{}", fields.join(","));
        }
        let path = out.join("cells.csv");
        write_file(&path, &body)?;
        files.push(path.display().to_string());
    }

    if d == 2 {
        let exclusion: Vec<AxisBox> = exclusion_boxes(&sys_n, cg.rho).iter().map(|b| to_caller(sys, b)).collect();
        let bbox = dom_n.bounding_box();
        let mut covers = Vec::new();
        for (f, schedule) in cg.families.iter().zip(&cg.cuts.schedules) {
            for &beta in schedule {
                covers.extend(f.cover.boxes(beta).into_iter().filter(|b| b.intersects(bbox)).map(|b| to_caller(sys, &b)));
            }
        }
        let body = svg::render(&svg::Scene {
            domain: &inst.domain,
            cuts: &cuts,
            exclusion: &exclusion,
            covers: &covers,
            charges: sys.charges(),
        });
        let path = out.join("grid.svg");
        write_file(&path, &body)?;
        files.push(path.display().to_string());
    }

    let counts = cg.cuts.counts();
    let mut text = String::new();
    let _ = writeln!(text, "exclusion half-width {:.6e}", cg.rho * sys.scale_x());
    let _ = writeln!(text, "cuts per axis {:?} (bound {})", counts, cg.cuts.formula_bound);
    let _ = writeln!(text, "cells at most {}", cg.cuts.max_cells());
    for f in &files {
        let _ = writeln!(text, "wrote {f}");
    }
    Ok(Report {
        code: 0,
        json: json!({
            "command": "grid", "status": "ok", "rho": cg.rho * sys.scale_x(), "cut_counts": counts,
            "formula_bound": cg.cuts.formula_bound, "max_cells": cg.cuts.max_cells(), "files": files,
        }),
        text,
    })
}

fn oracle(inst: &Instance, common: &Common, scan: bool, bisect: bool, h: f64, threshold: Option<f64>) -> Result<Report> {
    let sys = &inst.system;
    let scan = scan || !bisect;
    let mut text = String::new();
    let mut scan_json = Value::Null;
    let mut bisect_json = Value::Null;
    if bisect {
        let c = sys.charges();
        if c.len() != 2 {
            return Err(Error::InvalidInput("--bisect needs exactly two charges".into()));
        }
        let sep = euclidean(&c[0].position, &c[1].position);
        let t = two_charge_bisect_trace(c[0].q, c[1].q, sep, 1e-12 * sep)?;
        let point: Vec<f64> =
            c[0].position.iter().zip(&c[1].position).map(|(a, b)| a + t.position / sep * (b - a)).collect();
        let _ = writeln!(text, "bisection distance {:.12e} from the first charge", t.position);
        let _ = writeln!(text, "bisection point {}", fmt_point(&point));
        bisect_json = json!({"distance": t.position, "point": point, "iterations": t.widths.len()});
    }
    if scan {
        let thr = threshold.or(delta(inst, common)).unwrap_or_else(|| epsilon(inst, common));
        let r = brute_force_scan(sys, &inst.domain, thr, h)?;
        text.push_str(&r.to_text());
        scan_json = serde_json::to_value(&r).expect("scan report serializes");
    }
    Ok(Report { code: 0, json: json!({"command": "oracle", "scan": scan_json, "bisect": bisect_json}), text })
}

fn eval(inst: &Instance, point: &str) -> Result<Report> {
    let sys = &inst.system;
    let x: Vec<f64> = point
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad coordinate {s:?}: {e}"))))
        .collect::<Result<_>>()?;
    if x.len() != sys.dim() {
        return Err(Error::InvalidInput(format!("point has {} coordinates, expected {}", x.len(), sys.dim())));
    }
    let f = eval_potential(sys, &x)?;
    let g = eval_gradient(sys, &x)?;
    let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = hessian(sys, &x)?;
    let det = hessian_det(sys, &x)?;
    let mut text = String::new();
    let _ = writeln!(text, "potential {f:.12e}");
    let _ = writeln!(text, "gradient {} (max norm {norm:.6e})", fmt_point(&g));
    let _ = writeln!(text, "hessian determinant {det:.12e}");
    Ok(Report {
        code: 0,
        json: json!({"command": "eval", "point": x, "potential": f, "gradient": g, "gradient_norm": norm,
                     "hessian": h, "hessian_det": det}),
        text,
    })
}
