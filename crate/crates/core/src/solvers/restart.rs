//! Restarted partial-adaptive Mirror Descent for strongly convex problems.
//!
//! Restart `p` re-centers the d.g.f. at the previous output `x_{p−1}` and
//! shrinks the radius: `R_p² = R₀²·2⁻ᵖ`, target accuracy `ε_p = μR_p²/2`.
//! Each inner solve runs in the frame `y = (x − x_{p−1})/R_{p−1}`, where the
//! unscaled d.g.f. is 1-strongly convex and `d(y*) ≤ ½` whenever
//! `‖x_{p−1} − x*‖ ≤ R_{p−1}`. In that frame `M_g` scales by `R_{p−1}` and
//! function values are unchanged, so the accuracy `φ(ε_p)` carries over.

use log::{debug, info};

use super::bounds::{phi_inverse, robust_ceil};
use super::engine::{self, Problem, Schedule};
use super::{iteration_bound_partial, SolveOptions};
use crate::error::{MdError, Result};
use crate::geometry::Point;
use crate::instances::ProblemInstance;
use crate::oracles::Oracle;
use crate::reference::{check_strong_convexity_localization, CheckReport};
use crate::vector::dist2_sq;

/// `f̃(y) = f(anchor + radius·y)`.
struct Rescaled<'a> {
    inner: &'a dyn Oracle,
    anchor: &'a [f64],
    radius: f64,
}

impl Rescaled<'_> {
    fn to_global(&self, y: &[f64]) -> Vec<f64> {
        self.anchor
            .iter()
            .zip(y)
            .map(|(a, v)| a + self.radius * v)
            .collect()
    }
}

impl Oracle for Rescaled<'_> {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn eval_value(&self, y: &[f64]) -> f64 {
        self.inner.eval_value(&self.to_global(y))
    }

    fn eval_subgradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = self.inner.eval_subgradient(&self.to_global(y));
        g.iter_mut().for_each(|v| *v *= self.radius);
        g
    }

    fn eval(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let x = self.to_global(y);
        let mut g = self.inner.eval_subgradient(&x);
        g.iter_mut().for_each(|v| *v *= self.radius);
        (self.inner.eval_value(&x), g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartRecord {
    pub p: usize,
    pub r_p_sq: f64,
    pub eps_p: f64,
    /// Accuracy handed to the inner solve, `φ(ε_p)`.
    pub inner_accuracy: f64,
    pub inner_iterations: usize,
    pub productive_count: usize,
    pub x_p: Point,
    /// `‖x_p − x*‖²` when the solution is known.
    pub dist_sq_to_solution: Option<f64>,
    /// Strong-convexity localization check of `x_p` at `(ε_p, ε_p)`.
    pub localization: Option<CheckReport>,
    pub max_scaled_step_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartReport {
    pub restarts: Vec<RestartRecord>,
    pub final_point: Point,
    pub p_hat: usize,
    pub total_inner_iterations: usize,
    /// `p̂ + Σ_p ⌈2Θ₀²M_g²/φ²(ε_p)⌉`.
    pub iteration_bound: usize,
    /// `‖∇f(x*)‖*` (or its upper bound) used to evaluate `φ`.
    pub grad_norm_star: f64,
    /// `Θ₀²` of the inner solves: `max d` over the unit ball.
    pub inner_theta0_sq: f64,
}

/// `p̂ = ⌈log₂(μR₀²/(2ε))⌉`, at least 1.
pub fn restart_count(mu: f64, r0_sq: f64, eps: f64) -> Result<usize> {
    for (name, v) in [("mu", mu), ("R0²", r0_sq), ("epsilon", eps)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(MdError::precondition(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let levels = robust_ceil((mu * r0_sq / (2.0 * eps)).log2());
    Ok(levels.max(1.0) as usize)
}

pub fn run_restarted(
    inst: &ProblemInstance,
    eps: f64,
    x0: &Point,
    r0_sq: f64,
) -> Result<RestartReport> {
    let c = *inst.constants();
    if !(c.mu > 0.0) {
        return Err(MdError::precondition(
            "restarts need μ > 0 (f and g strongly convex with a common modulus)",
        ));
    }
    if !(c.m_g > 0.0) {
        return Err(MdError::precondition("restarts need M_g > 0"));
    }
    let setup = inst.setup();
    let inner_theta0_sq = setup.unit_ball_dgf_bound().ok_or_else(|| {
        MdError::precondition(
            "restarts need a d.g.f. bounded on the unit ball; the entropy setup is not supported",
        )
    })?;
    if x0.dim() != setup.dim() || !setup.contains(x0) {
        return Err(MdError::precondition(
            "starting point must lie in the feasible set",
        ));
    }
    let p_hat = restart_count(c.mu, r0_sq, eps)?;

    let grad_norm_star = match inst.known_solution() {
        Some(s) => s.grad_norm,
        None => inst
            .objective()
            .lipschitz_value_const(setup)
            .ok_or_else(|| {
                MdError::precondition("no bound on ‖∇f(x*)‖* is available for this setup")
            })?,
    };
    let solution = inst.known_solution().map(|s| s.x.coords().to_vec());

    let mut x_prev = x0.coords().to_vec();
    let mut restarts = Vec::with_capacity(p_hat);
    let mut iteration_bound = p_hat;
    let mut total = 0usize;

    for p in 1..=p_hat {
        let r_prev_sq = r0_sq / 2f64.powi(p as i32 - 1);
        let r_p_sq = r0_sq / 2f64.powi(p as i32);
        let eps_p = c.mu * r_p_sq / 2.0;
        let delta = phi_inverse(eps_p, grad_norm_star, c.l, c.m_g)?;
        iteration_bound +=
            robust_ceil(2.0 * inner_theta0_sq * c.m_g * c.m_g / (delta * delta)) as usize;

        let radius = r_prev_sq.sqrt();
        let local_setup = setup.rescaled(&x_prev, radius)?;
        let objective = Rescaled {
            inner: inst.objective(),
            anchor: &x_prev,
            radius,
        };
        let constraint = Rescaled {
            inner: inst.constraint(),
            anchor: &x_prev,
            radius,
        };
        let local_m_g = c.m_g * radius;
        let steps = iteration_bound_partial(local_m_g, inner_theta0_sq, delta)?;
        let options = SolveOptions {
            record_iterations: false,
            retain_iterates: false,
            reference: solution.as_ref().map(|s| {
                s.iter()
                    .zip(&x_prev)
                    .map(|(xs, a)| (xs - a) / radius)
                    .collect()
            }),
        };
        let problem = Problem {
            setup: &local_setup,
            objective: &objective,
            constraint: &constraint,
            m_g: local_m_g,
            theta0_sq: inner_theta0_sq,
        };
        debug!("restart {p}: R² = {r_p_sq:e}, ε_p = {eps_p:e}, φ(ε_p) = {delta:e}, {steps} inner steps");
        let trace = engine::run(&problem, delta, Schedule::Partial { steps }, &options).map_err(
            |e| match e {
                MdError::InvariantViolation(m) => {
                    MdError::InvariantViolation(format!("restart {p}: {m}"))
                }
                other => other,
            },
        )?;

        let x_p = setup.project(&objective.to_global(&trace.output_point))?;
        let dist_sq_to_solution = solution.as_ref().map(|s| dist2_sq(&x_p, s));
        let localization = match inst.known_solution() {
            Some(_) => Some(check_strong_convexity_localization(
                &x_p, inst, eps_p, eps_p,
            )?),
            None => None,
        };
        total += trace.total_iterations;
        restarts.push(RestartRecord {
            p,
            r_p_sq,
            eps_p,
            inner_accuracy: delta,
            inner_iterations: trace.total_iterations,
            productive_count: trace.productive_count,
            x_p: x_p.clone(),
            dist_sq_to_solution,
            localization,
            max_scaled_step_residual: trace.max_scaled_step_residual,
        });
        x_prev = x_p.into_vec();
    }
    info!("restarted solve: {p_hat} restarts, {total} inner iterations (bound {iteration_bound})");

    Ok(RestartReport {
        restarts,
        final_point: Point::new(x_prev)?,
        p_hat,
        total_inner_iterations: total,
        iteration_bound,
        grad_norm_star,
        inner_theta0_sq,
    })
}
