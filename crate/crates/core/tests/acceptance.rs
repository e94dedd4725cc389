//! Acceptance suite: ten criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p equilibria-core --test acceptance`. The process
//! exits with status 1 when any criterion fails.

use std::time::{Duration, Instant};

use equilibria_core::equilibrium::{
    solve_strong_auto_with, solve_weak, solve_weak_with, strong_params, SolverConfig, WeakAnswer,
};
use equilibria_core::grid::{charge_grid, exclusion_boxes, exclusion_radius, AxisBox, Polytope};
use equilibria_core::oracle::{brute_force_scan, finite_difference_auto, newton_refine, NEWTON_TOL};
use equilibria_core::polysolve::{solve_system, SolveOutcome};
use equilibria_core::potential::{
    derivative_terms, eval_gradient, eval_partial, gradient_norm, hessian, indices_of_order, indices_up_to, Charge,
    ChargeSystem, MultiIndex,
};
use equilibria_core::taylor::{hessian_det_series, potential_series, Polynomial};
use equilibria_core::wellbehaved::{hessian_det_family, potential_family, single_charge_params, WellBehaved};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_2024;

// C1
const GOLDEN_EPS: f64 = 1e-6;
const GOLDEN_DELTA: f64 = 1e-8;
const GOLDEN_DISTANCE: f64 = 1e-5;
const GOLDEN_TIME: Duration = Duration::from_secs(30);
// C2
const STRONG_EPS: f64 = 1e-4;
const NEWTON_ITERS: usize = 10;
// C3
const EXCLUSION_INSTANCES: usize = 5;
const EXCLUSION_SAMPLES: usize = 1000;
// C4
const MODEL_SAMPLES: usize = 100;
// C5
const FD_MAX_ORDER: u32 = 4;
const FD_POINTS: usize = 100;
const FD_REL_TOL: f64 = 1e-4;
const FD_FLOOR: f64 = 1e-3;
const TERM_MAX_ORDER: u32 = 8;
// C6
const WB_POINTS: usize = 1000;
const WB_MAX_K: u32 = 5;
// C7
const KERNEL_SYSTEMS: usize = 100;
const KERNEL_SLACK: f64 = 1e-12;
// C8
const ORACLE_INSTANCES: usize = 10;
const ORACLE_H: f64 = 1e-3;
const ORACLE_EPS: f64 = 1e-3;
const ORACLE_DELTA: f64 = 1e-5;
// C9
const GRID_MAX_CELLS: f64 = 1e6;
const GRID_TIME: Duration = Duration::from_secs(5);
// C10
const SIG_DIGITS: f64 = 5e-4;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("C1 golden weak point", c1_golden_weak),
        ("C2 golden strong point and Newton", c2_golden_strong),
        ("C3 exclusion soundness", c3_exclusion),
        ("C4 Taylor certification", c4_taylor_models),
        ("C5 derivative exactness", c5_derivatives),
        ("C6 well-behaved bounds", c6_well_behaved),
        ("C7 feasibility kernel", c7_kernel),
        ("C8 oracle equivalence", c8_oracle),
        ("C9 grid size", c9_grid),
        ("C10 strong parameters", c10_strong_params),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.2} s]");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn golden() -> (ChargeSystem, Polytope) {
    let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0])]).unwrap();
    let x = Polytope::from_box(&AxisBox::new(vec![-0.5, -0.5], vec![1.5, 0.5]).unwrap());
    (sys, x)
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn golden_point() -> [f64; 2] {
    [2f64.sqrt() - 1.0, 0.0]
}

fn random_system(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ChargeSystem {
    loop {
        let charges: Vec<Charge> = (0..n)
            .map(|_| {
                let q = rng.gen_range(0.5..3.0);
                Charge::new(q, (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
            })
            .collect();
        if let Ok(sys) = ChargeSystem::new(charges) {
            let far_apart = sys.charges().iter().enumerate().all(|(i, a)| {
                sys.charges()[i + 1..].iter().all(|b| inf_dist(&a.position, &b.position) > 0.1)
            });
            if far_apart {
                return sys;
            }
        }
    }
}

fn c1_golden_weak() -> Outcome {
    let (sys, x) = golden();
    let t = Instant::now();
    let answer = solve_weak(&sys, &x, GOLDEN_EPS, GOLDEN_DELTA).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let WeakAnswer::Point { x: p, residual } = answer else {
        return Err(format!("expected a point, got {answer:?}"));
    };
    let dist = inf_dist(&p, &golden_point());
    if dist > GOLDEN_DISTANCE || residual > GOLDEN_EPS || elapsed > GOLDEN_TIME {
        return Err(format!("point {p:?}, distance {dist:e}, residual {residual:e}, time {elapsed:?}"));
    }
    Ok(format!("distance {dist:.2e}, residual {residual:.2e}, {:.3} s", elapsed.as_secs_f64()))
}

fn c2_golden_strong() -> Outcome {
    let (sys, x) = golden();
    let r = solve_strong_auto_with(&sys, &x, STRONG_EPS, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let a = r.answer.ok_or_else(|| format!("exhausted after deltas {:?}", r.deltas))?;
    let dist = inf_dist(&a.point, &golden_point());
    if !a.certified || dist > STRONG_EPS {
        return Err(format!("certified {}, distance {dist:e}", a.certified));
    }
    let n = newton_refine(&sys, &a.point, NEWTON_ITERS).map_err(|e| e.to_string())?;
    let moved = inf_dist(&n.point, &a.point);
    if !n.converged || n.grad_norm > NEWTON_TOL || n.iterations > NEWTON_ITERS || moved > STRONG_EPS {
        return Err(format!("Newton: {n:?}, moved {moved:e}"));
    }
    Ok(format!(
        "delta {}, distance {dist:.2e}, Newton {} iterations to {:.1e}, moved {moved:.1e}",
        a.delta, n.iterations, n.grad_norm
    ))
}

fn c3_exclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    for _ in 0..EXCLUSION_INSTANCES {
        let n = rng.gen_range(2..=4);
        let sys = random_system(&mut rng, n, 2).normalized();
        let eps = 10f64.powf(rng.gen_range(-4.0..0.0));
        let rho = exclusion_radius(&sys, eps).map_err(|e| e.to_string())?;
        for b in exclusion_boxes(&sys, rho) {
            for _ in 0..EXCLUSION_SAMPLES {
                let p: Vec<f64> = (0..2).map(|j| rng.gen_range(b.lo[j]..=b.hi[j])).collect();
                let Ok(g) = gradient_norm(&sys, &p) else { continue };
                checked += 1;
                if g <= eps {
                    return Err(format!("gradient {g:e} <= {eps:e} at {p:?} inside the box {b:?}"));
                }
            }
        }
    }
    Ok(format!("{checked} samples, zero violations"))
}

fn c4_taylor_models() -> Outcome {
    let sys = ChargeSystem::from_pairs(&[(1.0, &[0.0, 0.0]), (2.0, &[1.0, 0.0]), (1.5, &[0.4, 0.8])]).unwrap();
    let x = Polytope::from_box(&AxisBox::new(vec![-0.5, -0.5], vec![1.5, 1.3]).unwrap());
    let cfg = SolverConfig { keep_models: true, enumerate_all: true, ..SolverConfig::default() };
    let r = solve_weak_with(&sys, &x, 1e-4, 1e-6, &cfg).map_err(|e| e.to_string())?;
    let sys_n = sys.normalized();
    let bound = r.model_eps / 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut samples = 0;
    let mut worst: f64 = 0.0;
    for cm in &r.models {
        for _ in 0..MODEL_SAMPLES {
            let p: Vec<f64> = (0..2).map(|j| rng.gen_range(cm.bounds.lo[j]..=cm.bounds.hi[j])).collect();
            let g = eval_gradient(&sys_n, &p).map_err(|e| e.to_string())?;
            for (j, m) in cm.models.iter().enumerate() {
                let err = (g[j] - m.poly.eval(&p)).abs();
                worst = worst.max(err / bound);
                samples += 1;
                if err > bound {
                    return Err(format!("cell {}: error {err:e} above {bound:e} at {p:?}", cm.cell));
                }
            }
        }
    }
    if r.models.is_empty() {
        return Err("no models were built".into());
    }
    Ok(format!("{} cells, {samples} samples, worst error {worst:.2e} of the bound", r.models.len()))
}

fn c5_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        for s in indices_up_to(d, FD_MAX_ORDER) {
            let k = s.order();
            for _ in 0..FD_POINTS {
                let q = rng.gen_range(0.2..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let charge = Charge::new(q, a.clone()).unwrap();
                let sys = ChargeSystem::new(vec![charge.clone()]).unwrap();
                let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r = rng.gen_range(0.3..3.0);
                let x: Vec<f64> = a.iter().zip(&dir).map(|(c, u)| c + r * u / norm).collect();
                let exact = derivative_terms(&charge, s).and_then(|e| e.eval(&x)).map_err(|e| e.to_string())?;
                let fd = finite_difference_auto(&sys, &x, s).map_err(|e| e.to_string())?;
                let scale = exact.abs().max(FD_FLOOR * q.abs() / r.powi(k as i32 + 1));
                let rel = (exact - fd).abs() / scale;
                worst = worst.max(rel);
                compared += 1;
                if rel > FD_REL_TOL {
                    return Err(format!("D^{s:?} at {x:?} for charge {q} at {a:?}: exact {exact:e}, differences {fd:e}, relative {rel:e}"));
                }
            }
        }
    }
    let mut terms = 0;
    for d in [1usize, 2, 3] {
        let charge = Charge::new(1.0, vec![0.0; d]).unwrap();
        for k in 0..=TERM_MAX_ORDER {
            for s in indices_of_order(d, k) {
                for t in derivative_terms(&charge, s).map_err(|e| e.to_string())?.terms {
                    terms += 1;
                    let tp = t.den_pow;
                    if tp % 2 == 0 || tp > 2 * k + 1 || tp - t.num.order() != k + 1 {
                        return Err(format!("D^{s:?}: term with t' = {tp}, |s'| = {}", t.num.order()));
                    }
                }
            }
        }
    }
    Ok(format!("{compared} comparisons, worst relative error {worst:.2e}; {terms} terms well formed"))
}

fn kth_derivatives_max(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| m.max(v.abs()))
}

/// Checks `M^(k)(x) ≤ C^k 2^B k!/β^k` at points outside the family's cover.
fn check_family(
    fam: &WellBehaved,
    sys: &ChargeSystem,
    tau: f64,
    m_k: &dyn Fn(&[f64]) -> Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<usize, String> {
    let d = sys.dim();
    let p = fam.params;
    let betas: Vec<f64> = (0..7).map(|t| p.beta_min * 2f64.powi(t)).collect();
    let mut checks = 0;
    let mut points = 0;
    while points < WB_POINTS {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..3.0)).collect();
        if sys.charges().iter().any(|c| inf_dist(&c.position, &x) < tau) {
            continue;
        }
        points += 1;
        let m = m_k(&x);
        for &beta in &betas {
            if fam.cover.boxes(beta).iter().any(|b| b.contains(&x)) {
                continue;
            }
            for (k, &mk) in m.iter().enumerate() {
                let bound = p.bound(k as u32, beta);
                checks += 1;
                if mk > bound * (1.0 + 1e-12) {
                    return Err(format!("M^({k}) = {mk:e} above {bound:e} at {x:?}, beta {beta}"));
                }
            }
        }
    }
    Ok(checks)
}

fn c6_well_behaved() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let partials = |sys: &ChargeSystem| {
        let sys = sys.clone();
        move |x: &[f64]| -> Vec<f64> {
            (0..=WB_MAX_K)
                .map(|k| kth_derivatives_max(indices_of_order(sys.dim(), k).into_iter().map(|s| eval_partial(&sys, s, x).unwrap())))
                .collect()
        }
    };
    let mut checks = 0;
    for d in [2usize, 3] {
        let q = rng.gen_range(0.2..5.0);
        let charge = Charge::new(q, (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let tau = rng.gen_range(0.02..0.3);
        let sys = ChargeSystem::new(vec![charge.clone()]).unwrap();
        let fam = single_charge_params(&charge, tau).map_err(|e| e.to_string())?;
        checks += check_family(&fam, &sys, tau, &partials(&sys), &mut rng)?;
    }
    let sys = random_system(&mut rng, 3, 2);
    let tau = 0.05;
    let fam = potential_family(sys.charges(), tau).map_err(|e| e.to_string())?;
    checks += check_family(&fam, &sys, tau, &partials(&sys), &mut rng)?;

    let det_fam = hessian_det_family(&fam, 2).map_err(|e| e.to_string())?;
    let det_partials = |x: &[f64]| -> Vec<f64> {
        let series = hessian_det_series(&potential_series(&sys, x, WB_MAX_K + 2).unwrap(), WB_MAX_K).unwrap();
        (0..=WB_MAX_K)
            .map(|k| {
                kth_derivatives_max(
                    indices_of_order(2, k).into_iter().map(|s: MultiIndex| series.coeffs[s.rank()] * s.factorial()),
                )
            })
            .collect()
    };
    checks += check_family(&det_fam, &sys, tau, &det_partials, &mut rng)?;
    Ok(format!("{checks} bound checks, zero violations"))
}

/// A random polynomial with constant term `constant` anchored at `c`.
fn random_poly(rng: &mut ChaCha8Rng, c: &[f64], constant: f64) -> Polynomial {
    let d = c.len();
    let degree = rng.gen_range(1..=3);
    let terms: Vec<(MultiIndex, f64)> = indices_up_to(d, degree)
        .into_iter()
        .map(|s| (s, if s.order() == 0 { constant } else { rng.gen_range(-1.0..1.0) }))
        .collect();
    Polynomial::from_terms(d, c.to_vec(), &terms)
}

fn squared_distance(c: &[f64], shift: f64, sign: f64) -> Polynomial {
    let d = c.len();
    let mut terms = vec![(MultiIndex::zero(d), shift)];
    terms.extend((0..d).map(|j| (MultiIndex::unit(d, j).plus_unit(j), sign)));
    Polynomial::from_terms(d, c.to_vec(), &terms)
}

fn c7_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let (mut found, mut infeasible) = (0, 0);
    for case in 0..KERNEL_SYSTEMS {
        let d = rng.gen_range(1..=2);
        let bx = AxisBox { lo: vec![-1.0; d], hi: vec![1.0; d] };
        let x = Polytope::from_box(&bx);
        let gap = 10f64.powf(rng.gen_range(-6.0..-2.0));
        let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let (polys, feasible): (Vec<Polynomial>, bool) = match case % 5 {
            0 | 1 => {
                let n = rng.gen_range(1..=3);
                let polys = (0..n)
                    .map(|_| {
                        let m = rng.gen_range(2.0 * gap..1.0);
                        random_poly(&mut rng, &c, -m)
                    })
                    .collect();
                (polys, true)
            }
            2 => {
                let r = rng.gen_range(0.1..0.5);
                let rr = r + rng.gen_range(0.01..0.3);
                (vec![squared_distance(&c, -r * r, 1.0), squared_distance(&c, rr * rr, -1.0)], false)
            }
            3 => (vec![squared_distance(&c, rng.gen_range(1e-6..1.0), 1.0)], false),
            _ => {
                let mut far = c.clone();
                far[0] = 2.5;
                (vec![squared_distance(&far, -1.0, 1.0)], false)
            }
        };
        match solve_system(&polys, &x, &bx, gap) {
            Ok(SolveOutcome::Found { point, .. }) => {
                if !feasible {
                    return Err(format!("case {case}: Found {point:?} for an infeasible system"));
                }
                let worst = polys.iter().map(|p| p.eval(&point)).fold(f64::NEG_INFINITY, f64::max);
                if worst > KERNEL_SLACK || !x.contains_tol(&point, 1e-12) {
                    return Err(format!("case {case}: point {point:?} has residual {worst:e}"));
                }
                found += 1;
            }
            Ok(SolveOutcome::Infeasible { .. }) => {
                if feasible {
                    return Err(format!("case {case}: Infeasible for a system satisfied at {c:?}"));
                }
                infeasible += 1;
            }
            Err(e) => return Err(format!("case {case}: {e}")),
        }
    }
    Ok(format!("{found} Found and {infeasible} Infeasible, all correct"))
}

fn c8_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let (mut points, mut empty) = (0, 0);
    for case in 0..ORACLE_INSTANCES {
        let n = rng.gen_range(2..=3);
        let sys = random_system(&mut rng, n, 2);
        let center: Vec<f64> = (0..2).map(|_| rng.gen_range(0.2..0.8)).collect();
        let half: Vec<f64> = (0..2).map(|_| rng.gen_range(0.15..0.35)).collect();
        let bx = AxisBox::new(
            center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            center.iter().zip(&half).map(|(c, h)| c + h).collect(),
        )
        .unwrap();
        let x = Polytope::from_box(&bx);
        let answer = solve_weak(&sys, &x, ORACLE_EPS, ORACLE_DELTA).map_err(|e| format!("case {case}: {e}"))?;
        match answer {
            WeakAnswer::Point { x: p, .. } => {
                let h = hessian(&sys, &p).map_err(|e| e.to_string())?;
                let h_norm = h.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
                let threshold = ORACLE_EPS + 2.0 * h_norm * ORACLE_H;
                let scan = brute_force_scan(&sys, &x, threshold, ORACLE_H).map_err(|e| e.to_string())?;
                let reach = ORACLE_H + ORACLE_EPS / h_norm;
                if !scan.points.iter().any(|s| inf_dist(&s.x, &p) <= reach) {
                    return Err(format!("case {case}: no scan point within {reach:e} of {p:?}"));
                }
                points += 1;
            }
            WeakAnswer::NoDeltaSolution { .. } => {
                let scan = brute_force_scan(&sys, &x, ORACLE_DELTA, ORACLE_H).map_err(|e| e.to_string())?;
                if let Some(s) = scan.points.first() {
                    return Err(format!("case {case}: NoDeltaSolution but the scan has {:?}", s));
                }
                empty += 1;
            }
        }
    }
    Ok(format!("{points} points and {empty} NoDeltaSolution answers agree with the scan"))
}

fn c9_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut summary = Vec::new();
    for n in 1..=5 {
        let sys = random_system(&mut rng, n, 2).normalized();
        let lo: Vec<f64> = (0..2).map(|j| sys.charges().iter().map(|c| c.position[j]).fold(f64::INFINITY, f64::min) - 0.5).collect();
        let hi: Vec<f64> = (0..2).map(|j| sys.charges().iter().map(|c| c.position[j]).fold(f64::NEG_INFINITY, f64::max) + 0.5).collect();
        let x = Polytope::from_box(&AxisBox::new(lo, hi).unwrap());
        let t = Instant::now();
        let g = charge_grid(&sys, &x, 1e-3).map_err(|e| e.to_string())?;
        let elapsed = t.elapsed();
        let counts = g.cuts.counts();
        let cells = g.cuts.max_cells();
        if counts.iter().any(|&c| c > g.cuts.formula_bound) || cells >= GRID_MAX_CELLS || elapsed > GRID_TIME {
            return Err(format!(
                "n = {n}: cuts {counts:?}, bound {}, cells {cells}, time {elapsed:?}",
                g.cuts.formula_bound
            ));
        }
        summary.push(format!("n={n}: {counts:?}<={} cells {cells}", g.cuts.formula_bound));
    }
    Ok(summary.join("; "))
}

fn c10_strong_params() -> Outcome {
    let p = strong_params(1, 4, 1.0, 1.0, 0.1, 2);
    let expected = [(p.delta_prime, 3.90625e-3), (p.alpha, 9.5367e-7), (p.eps_prime, 6.985e-10)];
    for (got, want) in expected {
        if ((got - want) / want).abs() > SIG_DIGITS {
            return Err(format!("{p:?}"));
        }
    }
    Ok(format!("delta' {:.6e}, alpha {:.6e}, eps' {:.6e}", p.delta_prime, p.alpha, p.eps_prime))
}
