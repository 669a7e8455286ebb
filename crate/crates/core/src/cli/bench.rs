use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::{restart_start, AlgorithmArg, SolverArgs};
use crate::error::{MdError, Result};
use crate::instances::ProblemInstance;
use crate::reference::{reference_solve, REFERENCE_MAX_DIM};
use crate::solvers::{
    adaptive_cap, iteration_bound_adaptive, iteration_bound_partial, run_adaptive_with,
    run_partial_adaptive_with, run_restarted, SolveOptions,
};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub epsilon: f64,
    pub theoretical_n: usize,
    pub iterations: usize,
    /// `f(x̄) − f*`; NaN when no optimal value is available.
    pub f_gap: f64,
    /// `max{g(x̄), 0}`.
    pub g_violation: f64,
    pub seconds: f64,
}

fn optimal_value(inst: &ProblemInstance, seed: u64) -> Option<f64> {
    if let Some(s) = inst.known_solution() {
        return Some(s.f);
    }
    if inst.dim() > REFERENCE_MAX_DIM {
        warn!(
            "no known solution and dimension {} is too large for the reference solver",
            inst.dim()
        );
        return None;
    }
    match reference_solve(inst, 2_000_000, seed) {
        Ok(r) => {
            info!(
                "reference optimum f* ≈ {:e} (step {:e})",
                r.f, r.achieved_tol
            );
            Some(r.f)
        }
        Err(e) => {
            warn!("reference solve failed: {e}");
            None
        }
    }
}

fn bench_one(
    inst: &ProblemInstance,
    algorithm: AlgorithmArg,
    eps: f64,
    solver: &SolverArgs,
) -> Result<(usize, usize, Vec<f64>)> {
    let c = inst.constants();
    let options = SolveOptions {
        record_iterations: false,
        retain_iterates: false,
        reference: None,
    };
    Ok(match algorithm {
        AlgorithmArg::Partial => {
            let t = run_partial_adaptive_with(inst, eps, &options)?;
            (
                iteration_bound_partial(c.m_g, c.theta0_sq, eps)?,
                t.total_iterations,
                t.output_point.into_vec(),
            )
        }
        AlgorithmArg::Adaptive => {
            let cap = adaptive_cap(inst, eps, solver.cap_multiplier)?;
            let t = run_adaptive_with(inst, eps, Some(cap), &options)?;
            (
                iteration_bound_adaptive(c.m_g.max(1.0), c.theta0_sq, eps)?,
                t.total_iterations,
                t.output_point.into_vec(),
            )
        }
        AlgorithmArg::Restart => {
            let (x0, r0_sq) = restart_start(inst, solver.r0_sq);
            let rep = run_restarted(inst, eps, &x0, r0_sq)?;
            (
                rep.iteration_bound,
                rep.total_inner_iterations,
                rep.final_point.into_vec(),
            )
        }
    })
}

/// One row per ε, sorted by decreasing ε. Rows run concurrently.
pub fn bench_rows(
    inst: &ProblemInstance,
    algorithm: AlgorithmArg,
    epsilons: &[f64],
    solver: &SolverArgs,
) -> Result<Vec<BenchRow>> {
    if epsilons.is_empty() {
        return Err(MdError::input("empty ε list"));
    }
    if let Some(bad) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(MdError::precondition(format!(
            "epsilon must be positive, got {bad}"
        )));
    }
    let f_star = optimal_value(inst, solver.seed).unwrap_or(f64::NAN);
    let mut sorted = epsilons.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .par_iter()
        .map(|&eps| {
            let started = Instant::now();
            let (theoretical_n, iterations, x) = bench_one(inst, algorithm, eps, solver)?;
            let seconds = started.elapsed().as_secs_f64();
            Ok(BenchRow {
                epsilon: eps,
                theoretical_n,
                iterations,
                f_gap: inst.objective().value(&x)? - f_star,
                g_violation: inst.constraint().value(&x)?.max(0.0),
                seconds,
            })
        })
        .collect()
}
