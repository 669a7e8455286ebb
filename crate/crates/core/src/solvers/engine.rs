//! The shared Mirror Descent loop with productive / non-productive switching.

use log::debug;

use super::{Algorithm, IterationRecord, SolveOptions, SolveTrace, StepKind, StopReason};
use crate::error::{MdError, Result};
use crate::geometry::{Point, ProxSetup};
use crate::oracles::{v_f_from_gradient, Oracle};
use crate::vector::{dot, sub};

/// What one run needs, independent of whether the coordinates are the
/// instance's own or a rescaled restart frame.
pub(crate) struct Problem<'a> {
    pub setup: &'a ProxSetup,
    pub objective: &'a dyn Oracle,
    pub constraint: &'a dyn Oracle,
    pub m_g: f64,
    pub theta0_sq: f64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Schedule {
    /// Stop once `Θ₀² ≤ (ε²/2)|I| + Σ_{k∉I} ε²/(2‖∇g(x^k)‖*²)`, or at `cap`.
    Adaptive { cap: usize },
    /// Exactly `steps` iterations with the fixed `M_g`-based step sizes.
    Partial { steps: usize },
}

/// Per-step inequality residual `h⟨∇, x − r⟩ − h²‖∇‖*²/2 − V(x, r) + V(x⁺, r)` and
/// its magnitude scale.
pub(crate) fn step_residual(
    setup: &ProxSetup,
    h: f64,
    grad: &[f64],
    grad_norm: f64,
    x: &[f64],
    x_next: &[f64],
    reference: &[f64],
) -> (f64, f64) {
    let lhs = h * dot(grad, &sub(x, reference));
    let quad = 0.5 * h * h * grad_norm * grad_norm;
    let v_now = setup.bregman_unchecked(x, reference);
    let v_next = setup.bregman_unchecked(x_next, reference);
    let residual = lhs - quad - v_now + v_next;
    let scale = lhs.abs().max(quad).max(v_now).max(v_next);
    (residual, scale)
}

pub(crate) fn run(
    problem: &Problem<'_>,
    eps: f64,
    schedule: Schedule,
    options: &SolveOptions,
) -> Result<SolveTrace> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(MdError::precondition(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let algorithm = match schedule {
        Schedule::Adaptive { .. } => Algorithm::Adaptive,
        Schedule::Partial { .. } => {
            if !(problem.m_g.is_finite() && problem.m_g > 0.0) {
                return Err(MdError::precondition(format!(
                    "the partial-adaptive method needs M_g > 0, got {}",
                    problem.m_g
                )));
            }
            Algorithm::Partial
        }
    };
    let limit = match schedule {
        Schedule::Adaptive { cap } => cap,
        Schedule::Partial { steps } => steps,
    };
    let setup = problem.setup;
    let reference = options.reference.as_deref();
    if let Some(r) = reference {
        if r.len() != setup.dim() {
            return Err(MdError::input("reference point has the wrong dimension"));
        }
    }

    let mut x: Point = setup.center().clone();
    let mut records = Vec::with_capacity(if options.record_iterations {
        limit.min(1 << 20)
    } else {
        0
    });
    let mut iterates = options.retain_iterates.then(|| vec![x.clone()]);
    let (mut productive, mut nonproductive) = (0usize, 0usize);
    let mut nonproductive_credit = 0.0;
    let mut best: Option<(usize, f64, Point)> = None;
    let mut min_vf: Option<f64> = None;
    let mut max_scaled_residual: Option<f64> = None;
    let stop_reason;
    let mut k = 0usize;

    loop {
        if k == limit {
            stop_reason = match schedule {
                Schedule::Adaptive { .. } => StopReason::CapReached,
                Schedule::Partial { .. } => StopReason::FixedBudget,
            };
            break;
        }
        let g_value = problem.constraint.eval_value(&x);
        // Exact comparison: no tolerance on the switching rule.
        let kind = if g_value <= eps {
            StepKind::Productive
        } else {
            StepKind::NonProductive
        };
        let (f_value, grad) = match kind {
            StepKind::Productive => {
                let (f, grad) = problem.objective.eval(&x);
                (Some(f), grad)
            }
            StepKind::NonProductive => {
                let f = options
                    .record_iterations
                    .then(|| problem.objective.eval_value(&x));
                (f, problem.constraint.eval_subgradient(&x))
            }
        };
        let grad_norm = setup.dual_norm_unchecked(&grad);
        let step_size = match (kind, schedule) {
            // ∇f = 0: x already minimizes f over E, take a zero step.
            (StepKind::Productive, _) if grad_norm == 0.0 => 0.0,
            (StepKind::Productive, Schedule::Adaptive { .. }) => eps / grad_norm,
            (StepKind::Productive, Schedule::Partial { .. }) => eps / (problem.m_g * grad_norm),
            (StepKind::NonProductive, Schedule::Adaptive { .. }) => {
                if grad_norm == 0.0 {
                    return Err(MdError::InvariantViolation(format!(
                        "non-productive step {k} with ∇g = 0 while g = {g_value} > ε: the constraint has no feasible point"
                    )));
                }
                eps / (grad_norm * grad_norm)
            }
            (StepKind::NonProductive, Schedule::Partial { .. }) => {
                eps / (problem.m_g * problem.m_g)
            }
        };
        let x_next = if step_size == 0.0 {
            x.clone()
        } else {
            let p: Vec<f64> = grad.iter().map(|v| step_size * v).collect();
            setup.mirror_step_unchecked(&x, &p)
        };

        let vf = match (kind, reference) {
            (StepKind::Productive, Some(r)) => Some(v_f_from_gradient(setup, &grad, &x, r)),
            _ => None,
        };
        if let Some(v) = vf {
            min_vf = Some(min_vf.map_or(v, |m: f64| m.min(v)));
        }
        let step_residual = reference.map(|r| {
            let (res, scale) = step_residual(setup, step_size, &grad, grad_norm, &x, &x_next, r);
            let scaled = res / (1.0 + scale);
            max_scaled_residual = Some(max_scaled_residual.map_or(scaled, |m: f64| m.max(scaled)));
            res
        });

        match kind {
            StepKind::Productive => {
                productive += 1;
                let f = f_value.expect("productive steps evaluate f");
                if best.as_ref().is_none_or(|(_, bf, _)| f < *bf) {
                    best = Some((k, f, x.clone()));
                }
            }
            StepKind::NonProductive => {
                nonproductive += 1;
                if let Schedule::Adaptive { .. } = schedule {
                    nonproductive_credit += eps * eps / (2.0 * grad_norm * grad_norm);
                }
            }
        }

        if options.record_iterations {
            records.push(IterationRecord {
                k,
                kind,
                step_size,
                f_value: f_value.unwrap_or(f64::NAN),
                g_value,
                grad_dual_norm: grad_norm,
                step_residual,
                vf,
            });
        }
        if let Some(its) = iterates.as_mut() {
            its.push(x_next.clone());
        }
        x = x_next;
        k += 1;

        if let Schedule::Adaptive { .. } = schedule {
            let credit = 0.5 * eps * eps * productive as f64 + nonproductive_credit;
            if problem.theta0_sq <= credit {
                stop_reason = StopReason::CriterionMet;
                break;
            }
        }
    }

    debug!("{algorithm:?} run: {k} steps, |I| = {productive}, |J| = {nonproductive}, stop = {stop_reason:?}");

    let Some((output_index, output_f, output_point)) = best else {
        return Err(MdError::InvariantViolation(format!(
            "no productive step in {k} iterations; the guarantee of at least one productive step fails \
             (is M_g a valid Lipschitz constant of g, and is the problem feasible?)"
        )));
    };
    let output_g = problem.constraint.eval_value(&output_point);

    Ok(SolveTrace {
        algorithm,
        epsilon: eps,
        iterations: records,
        iterates,
        output_point,
        output_index,
        output_f,
        output_g,
        total_iterations: k,
        productive_count: productive,
        nonproductive_count: nonproductive,
        stop_reason,
        min_productive_vf: min_vf,
        max_scaled_step_residual: max_scaled_residual,
    })
}
