//! Independent oracles and bound checkers.
//!
//! Nothing here calls the Mirror Descent solvers: the reference solver uses
//! its own projected-subgradient and pattern-search code, and the checkers
//! replay traces from retained iterates.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{MdError, Result};
use crate::geometry::{FeasibleSet, Point, ProxSetup};
use crate::instances::ProblemInstance;
use crate::oracles::Oracle;
use crate::solvers::{step_residual, Algorithm, SolveTrace, StepKind};
use crate::vector::{norm2, sub};

pub const STEP_RESIDUAL_TOL: f64 = 1e-8;
pub const BOUND_TOL: f64 = 1e-9;

/// Largest dimension the reference solver accepts.
pub const REFERENCE_MAX_DIM: usize = 10;
/// Largest dimension the ω grid search accepts.
pub const OMEGA_MAX_DIM: usize = 3;
pub const DEFAULT_OMEGA_GRID: usize = 401;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// `lhs ≤ rhs + tolerance`; always false when not applicable.
    pub passed: bool,
    /// False when the check's premises do not hold (e.g. a point outside the
    /// region the check is stated for).
    pub applicable: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub details: String,
}

impl CheckReport {
    pub fn compare(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol: f64,
        details: impl Into<String>,
    ) -> Self {
        CheckReport {
            name: name.into(),
            passed: lhs <= rhs + tol,
            applicable: true,
            lhs,
            rhs,
            margin: rhs - lhs,
            details: details.into(),
        }
    }

    /// Strict `lhs < rhs`.
    pub fn strict(name: impl Into<String>, lhs: f64, rhs: f64, details: impl Into<String>) -> Self {
        CheckReport {
            passed: lhs < rhs,
            ..Self::compare(name, lhs, rhs, 0.0, details)
        }
    }

    pub fn not_applicable(name: impl Into<String>, details: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            passed: false,
            applicable: false,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            details: details.into(),
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.applicable, self.passed) {
            (false, _) => "N/A ",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        write!(
            f,
            "{status}  {:<44} lhs={:<24.16e} rhs={:<24.16e} {}",
            self.name, self.lhs, self.rhs, self.details
        )
    }
}

fn require_solution(inst: &ProblemInstance, what: &str) -> Result<(Vec<f64>, f64, f64)> {
    inst.known_solution()
        .map(|s| (s.x.coords().to_vec(), s.f, s.grad_norm))
        .ok_or_else(|| MdError::MissingSolution(what.to_string()))
}

// ---------------------------------------------------------------------------
// Reference solver

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub x: Point,
    pub f: f64,
    pub g: f64,
    /// Final pattern-search step length.
    pub achieved_tol: f64,
    /// False when the evaluation budget ran out before the step length
    /// reached its floor.
    pub converged: bool,
}

const PATTERN_FLOOR: f64 = 1e-13;

/// Euclidean projection onto `X`; the simplex case uses the sort-based
/// algorithm, not the entropy mirror step.
fn euclidean_projection(setup: &ProxSetup, z: &[f64]) -> Vec<f64> {
    match setup.set() {
        FeasibleSet::Simplex { .. } => {
            let mut u = z.to_vec();
            u.sort_by(|a, b| b.total_cmp(a));
            let mut cumulative = 0.0;
            let mut theta = 0.0;
            for (i, ui) in u.iter().enumerate() {
                cumulative += ui;
                let t = (cumulative - 1.0) / (i as f64 + 1.0);
                if ui - t > 0.0 {
                    theta = t;
                }
            }
            z.iter().map(|v| (v - theta).max(0.0)).collect()
        }
        _ => setup.project(z).expect("finite point").into_vec(),
    }
}

struct PenaltyMerit<'a> {
    f: &'a dyn Oracle,
    g: &'a dyn Oracle,
    rho: f64,
    evaluations: usize,
}

impl PenaltyMerit<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        self.f.eval_value(x) + self.rho * self.g.eval_value(x).max(0.0)
    }
}

/// High-accuracy solution of a desk-scale instance.
///
/// Phase one runs a long projected-subgradient method on
/// `max{f(x) − f_best, g(x)}` with diminishing steps, where `f_best` is the
/// best feasible value seen. Phase two polishes with a pattern search on the
/// exact penalty `f + ρ·max{g, 0}`, doubling `ρ` while the result stays
/// infeasible. `seed` drives the random search directions.
pub fn reference_solve(
    inst: &ProblemInstance,
    budget: usize,
    seed: u64,
) -> Result<ReferenceSolution> {
    let n = inst.dim();
    if n > REFERENCE_MAX_DIM {
        return Err(MdError::precondition(format!(
            "reference solver handles dimension ≤ {REFERENCE_MAX_DIM}, got {n}"
        )));
    }
    let setup = inst.setup();
    let f = inst.objective() as &dyn Oracle;
    let g = inst.constraint() as &dyn Oracle;
    let diameter = setup.max_dist_sq_from(setup.center()).sqrt().max(1e-12);

    // Phase one.
    let iterations = (budget / 4).max(1000);
    let mut x = setup.center().coords().to_vec();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut least_violation = (f64::INFINITY, x.clone());
    for k in 0..iterations {
        let gx = g.eval_value(&x);
        let fx = f.eval_value(&x);
        if gx <= 0.0 && best.as_ref().is_none_or(|(bf, _)| fx < *bf) {
            best = Some((fx, x.clone()));
        }
        if gx < least_violation.0 {
            least_violation = (gx, x.clone());
        }
        let f_level = best.as_ref().map_or(f64::INFINITY, |(bf, _)| *bf);
        let dir = if gx > 0.0 || fx - f_level < gx {
            g.eval_subgradient(&x)
        } else {
            f.eval_subgradient(&x)
        };
        let len = norm2(&dir);
        if len == 0.0 {
            break;
        }
        let h = 0.5 * diameter / ((k + 1) as f64).sqrt() / len;
        x = euclidean_projection(
            setup,
            &sub(&x, &dir.iter().map(|v| v * h).collect::<Vec<_>>()),
        );
    }
    let start = best.map_or(least_violation.1, |(_, x)| x);

    // Phase two.
    let grad_f = norm2(&f.eval_subgradient(&start));
    let grad_g = norm2(&g.eval_subgradient(&start)).max(1e-12);
    let mut rho = 2.0 * grad_f / grad_g + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = budget.saturating_sub(2 * iterations);
    let mut x = start;
    let mut step = 0.05 * diameter;
    let mut converged = false;
    for _ in 0..40 {
        let mut merit = PenaltyMerit {
            f,
            g,
            rho,
            evaluations: 0,
        };
        let (polished, final_step, done) =
            pattern_search(setup, &mut merit, &x, step, remaining, &mut rng);
        remaining = remaining.saturating_sub(merit.evaluations);
        x = polished;
        converged = done;
        if g.eval_value(&x) <= 1e-12 || remaining == 0 {
            step = final_step;
            break;
        }
        rho *= 2.0;
        step = 1e-3 * diameter;
    }
    let fx = f.eval_value(&x);
    let gx = g.eval_value(&x);
    Ok(ReferenceSolution {
        x: Point::new(x)?,
        f: fx,
        g: gx,
        achieved_tol: step,
        converged,
    })
}

fn pattern_directions(setup: &ProxSetup, n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    if let FeasibleSet::Simplex { .. } = setup.set() {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let mut d = vec![0.0; n];
                    d[i] = 1.0;
                    d[j] = -1.0;
                    dirs.push(d);
                }
            }
        }
        return dirs;
    }
    if n <= 4 {
        // Full 3ⁿ − 1 stencil.
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let digit = c % 3;
                    c /= 3;
                    digit as f64 - 1.0
                })
                .collect();
            if d.iter().any(|v| *v != 0.0) {
                let len = norm2(&d);
                dirs.push(d.iter().map(|v| v / len).collect());
            }
        }
    } else {
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = s;
                dirs.push(d);
            }
            for j in (i + 1)..n {
                for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = vec![0.0; n];
                    d[i] = a * std::f64::consts::FRAC_1_SQRT_2;
                    d[j] = b * std::f64::consts::FRAC_1_SQRT_2;
                    dirs.push(d);
                }
            }
        }
    }
    dirs
}

fn pattern_search(
    setup: &ProxSetup,
    merit: &mut PenaltyMerit<'_>,
    start: &[f64],
    mut step: f64,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, bool) {
    let n = start.len();
    let fixed = pattern_directions(setup, n);
    let mut x = start.to_vec();
    let mut best = merit.value(&x);
    while step > PATTERN_FLOOR {
        if merit.evaluations >= budget {
            return (x, step, false);
        }
        let mut dirs = fixed.clone();
        if setup.is_euclidean() {
            for _ in 0..2 * n {
                let d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = norm2(&d).max(1e-300);
                dirs.push(d.iter().map(|v| v / len).collect());
            }
        }
        let mut improved = false;
        for d in &dirs {
            let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + step * di).collect();
            let trial = euclidean_projection(setup, &trial);
            let m = merit.value(&trial);
            if m < best {
                best = m;
                x = trial;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, step, true)
}

// ---------------------------------------------------------------------------
// ω(τ)

fn omega_grid_max(
    inst: &ProblemInstance,
    solution: &[f64],
    f_star: f64,
    tau: f64,
    lo: &[f64],
    hi: &[f64],
    grid: usize,
) -> (f64, Vec<f64>) {
    let setup = inst.setup();
    let simplex = !setup.is_euclidean();
    let free = lo.len();
    let mut best = (0.0f64, solution[..free].to_vec());
    let mut idx = vec![0usize; free];
    let axis = |i: usize, j: usize| -> f64 {
        if grid == 1 {
            0.5 * (lo[i] + hi[i])
        } else {
            lo[i] + (hi[i] - lo[i]) * j as f64 / (grid - 1) as f64
        }
    };
    loop {
        let u: Vec<f64> = idx.iter().enumerate().map(|(i, &j)| axis(i, j)).collect();
        let mut x: Vec<f64> = if simplex {
            let mut x = u.clone();
            x.push(1.0 - u.iter().sum::<f64>());
            x
        } else {
            u
        };
        // Grid points outside the τ-ball are pulled radially onto its
        // boundary, where the maximum sits for convex f.
        let d = sub(&x, solution);
        let dist = setup.norm(&d);
        if dist > tau {
            x = solution
                .iter()
                .zip(&d)
                .map(|(s, di)| s + di * (tau / dist))
                .collect();
        }
        if setup.contains(&x) {
            let gap = inst.objective().eval_value(&x) - f_star;
            if gap > best.0 {
                best = (gap, x[..free].to_vec());
            }
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == free {
                return best;
            }
            idx[i] += 1;
            if idx[i] < grid {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Grid estimate of `ω(τ) = max{f(x) − f* : x ∈ X, ‖x − x*‖ ≤ τ}`, refined
/// once around the grid argmax.
pub fn estimate_omega(inst: &ProblemInstance, tau: f64, grid: usize) -> Result<f64> {
    let (solution, f_star, _) = require_solution(inst, "ω(τ) is centered at x*")?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(MdError::input(format!("τ must be ≥ 0, got {tau}")));
    }
    if grid < 2 {
        return Err(MdError::input("grid needs at least 2 points per axis"));
    }
    let free = if inst.setup().is_euclidean() {
        inst.dim()
    } else {
        inst.dim() - 1
    };
    if inst.dim() > OMEGA_MAX_DIM {
        return Err(MdError::precondition(format!(
            "ω grid search handles dimension ≤ {OMEGA_MAX_DIM}, got {}",
            inst.dim()
        )));
    }
    if tau == 0.0 || free == 0 {
        return Ok(0.0);
    }
    let lo: Vec<f64> = solution[..free].iter().map(|s| s - tau).collect();
    let hi: Vec<f64> = solution[..free].iter().map(|s| s + tau).collect();
    let (coarse, at) = omega_grid_max(inst, &solution, f_star, tau, &lo, &hi, grid);
    let cell = 2.0 * tau / (grid - 1) as f64;
    let lo: Vec<f64> = at.iter().map(|a| a - 2.0 * cell).collect();
    let hi: Vec<f64> = at.iter().map(|a| a + 2.0 * cell).collect();
    let (fine, _) = omega_grid_max(inst, &solution, f_star, tau, &lo, &hi, grid);
    Ok(coarse.max(fine))
}

// ---------------------------------------------------------------------------
// Checkers

/// Replays every step of a trace and checks
/// `h⟨∇, x^k − x*⟩ ≤ h²‖∇‖*²/2 + V(x^k, x*) − V(x^{k+1}, x*)`.
pub fn check_md_step_inequality(trace: &SolveTrace, inst: &ProblemInstance) -> Result<CheckReport> {
    let name = format!("step inequality ({:?})", trace.algorithm);
    let (solution, _, _) = require_solution(inst, "the step inequality is evaluated at x*")?;
    let iterates = trace
        .iterates
        .as_ref()
        .ok_or_else(|| MdError::input("trace does not retain its iterates"))?;
    if trace.iterations.len() + 1 != iterates.len() {
        return Err(MdError::input(
            "trace records and iterates disagree in length",
        ));
    }
    let setup = inst.setup();
    let mut worst = (f64::NEG_INFINITY, 0.0, 0usize);
    for (rec, pair) in trace.iterations.iter().zip(iterates.windows(2)) {
        let (x, x_next) = (&pair[0], &pair[1]);
        let grad = match rec.kind {
            StepKind::Productive => inst.objective().eval_subgradient(x),
            StepKind::NonProductive => inst.constraint().eval_subgradient(x),
        };
        let norm = setup.dual_norm_unchecked(&grad);
        let (residual, scale) =
            step_residual(setup, rec.step_size, &grad, norm, x, x_next, &solution);
        let scaled = residual / (1.0 + scale);
        if scaled > worst.0 {
            worst = (scaled, residual, rec.k);
        }
    }
    if trace.iterations.is_empty() {
        worst = (0.0, 0.0, 0);
    }
    Ok(CheckReport::compare(
        name,
        worst.0,
        STEP_RESIDUAL_TOL,
        0.0,
        format!(
            "worst scaled residual at k={} (raw {:.3e})",
            worst.2, worst.1
        ),
    ))
}

/// `f(x̄) − f* ≤ ‖∇f(x*)‖*·r + L r²/2`, with `r = ε/M_g` for the
/// partial-adaptive method and `r = ε` for the adaptive one.
pub fn check_gap_bound(
    trace: &SolveTrace,
    inst: &ProblemInstance,
    eps: f64,
) -> Result<CheckReport> {
    let (_, f_star, grad_norm) = require_solution(inst, "the gap bound needs f* and ‖∇f(x*)‖*")?;
    let c = inst.constants();
    let radius = match trace.algorithm {
        Algorithm::Partial => {
            if !(c.m_g > 0.0) {
                return Err(MdError::MissingSolution(
                    "the gap bound needs M_g > 0".into(),
                ));
            }
            eps / c.m_g
        }
        Algorithm::Adaptive => eps,
    };
    let bound = grad_norm * radius + 0.5 * c.l * radius * radius;
    Ok(CheckReport::compare(
        format!("objective gap bound ({:?})", trace.algorithm),
        trace.output_f - f_star,
        bound,
        BOUND_TOL,
        format!(
            "ε_f = {:.6e}, curvature term = {:.6e}",
            grad_norm * radius,
            0.5 * c.l * radius * radius
        ),
    ))
}

/// `(μ/2)‖x − x*‖² ≤ max{ε_f, ε_g}` for a point with `f(x) − f* ≤ ε_f` and
/// `g(x) ≤ ε_g`; not applicable when those premises fail.
pub fn check_strong_convexity_localization(
    x: &[f64],
    inst: &ProblemInstance,
    eps_f: f64,
    eps_g: f64,
) -> Result<CheckReport> {
    let name = "strong-convexity localization";
    let mu = inst.constants().mu;
    if !(mu > 0.0) {
        return Err(MdError::precondition("localization needs μ > 0"));
    }
    let (solution, f_star, _) = require_solution(inst, "localization is measured from x*")?;
    if x.len() != inst.dim() {
        return Err(MdError::input("point has the wrong dimension"));
    }
    let f_gap = inst.objective().eval_value(x) - f_star;
    let g = inst.constraint().eval_value(x);
    if f_gap > eps_f || g > eps_g {
        return Ok(CheckReport::not_applicable(
            name,
            format!("premises fail: f − f* = {f_gap:.3e} (ε_f {eps_f:.3e}), g = {g:.3e} (ε_g {eps_g:.3e})"),
        ));
    }
    let dist = inst.setup().norm(&sub(x, &solution));
    Ok(CheckReport::compare(
        name,
        0.5 * mu * dist * dist,
        eps_f.max(eps_g),
        BOUND_TOL,
        format!("‖x − x*‖² = {:.6e}", dist * dist),
    ))
}
