//! Mirror Descent for `min f(x)` s.t. `g(x) ≤ 0`, `x ∈ X`.
//!
//! Every method alternates between *productive* steps (the current point is
//! ε-feasible, so step along `∇f`) and *non-productive* steps (step along
//! `∇g` to restore feasibility). They differ in step sizes and stopping:
//!
//! | method             | productive `h`         | non-productive `h` | stop                      |
//! |--------------------|------------------------|--------------------|---------------------------|
//! | [`run_adaptive`]   | `ε/‖∇f‖*`              | `ε/‖∇g‖*²`         | accumulated-credit rule   |
//! | [`run_partial_adaptive`] | `ε/(M_g‖∇f‖*)`   | `ε/M_g²`           | fixed `⌈2M_g²Θ₀²/ε²⌉`     |
//!
//! [`run_restarted`] wraps the partial-adaptive method in a halving-radius
//! restart schedule for strongly convex problems.

mod bounds;
mod engine;
mod restart;

use serde::Serialize;

pub use bounds::{iteration_bound_adaptive, iteration_bound_partial, phi_inverse, tau};
pub use restart::{restart_count, run_restarted, RestartRecord, RestartReport};

pub(crate) use engine::step_residual;

use crate::error::{MdError, Result};
use crate::geometry::Point;
use crate::instances::ProblemInstance;
use engine::{Problem, Schedule};

/// Default ratio between the adaptive method's iteration cap and its
/// theoretical bound.
pub const DEFAULT_CAP_MULTIPLIER: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Adaptive,
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepKind {
    Productive,
    NonProductive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// The adaptive stopping rule fired.
    CriterionMet,
    /// The adaptive method hit its iteration cap first.
    CapReached,
    /// The partial-adaptive method ran its prescribed number of steps.
    FixedBudget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub kind: StepKind,
    pub step_size: f64,
    /// `f(x^k)`; NaN for non-productive steps when `f` was not evaluated.
    pub f_value: f64,
    pub g_value: f64,
    /// Dual norm of the subgradient actually used at this step.
    pub grad_dual_norm: f64,
    /// Raw step-inequality residual against the reference point, if any.
    pub step_residual: Option<f64>,
    /// `v_f(x^k, reference)` on productive steps, if a reference is known.
    pub vf: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrace {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub iterations: Vec<IterationRecord>,
    /// `x^0, …, x^N` when retained.
    pub iterates: Option<Vec<Point>>,
    /// `x̄`: the productive iterate with the smallest `f`.
    pub output_point: Point,
    pub output_index: usize,
    pub output_f: f64,
    pub output_g: f64,
    pub total_iterations: usize,
    pub productive_count: usize,
    pub nonproductive_count: usize,
    pub stop_reason: StopReason,
    pub min_productive_vf: Option<f64>,
    /// `max_k residual_k / (1 + scale_k)` over all steps.
    pub max_scaled_step_residual: Option<f64>,
}

/// Knobs shared by all runs.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub record_iterations: bool,
    pub retain_iterates: bool,
    /// Point used for step residuals and `v_f`; usually the known solution.
    pub reference: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            record_iterations: true,
            retain_iterates: true,
            reference: None,
        }
    }
}

impl SolveOptions {
    /// Default options with the instance's known solution as reference.
    pub fn for_instance(inst: &ProblemInstance) -> Self {
        SolveOptions {
            reference: inst.known_solution().map(|s| s.x.coords().to_vec()),
            ..SolveOptions::default()
        }
    }
}

fn problem_of(inst: &ProblemInstance) -> Problem<'_> {
    Problem {
        setup: inst.setup(),
        objective: inst.objective(),
        constraint: inst.constraint(),
        m_g: inst.constants().m_g,
        theta0_sq: inst.constants().theta0_sq,
    }
}

/// Adaptive Mirror Descent. `cap` defaults to
/// [`DEFAULT_CAP_MULTIPLIER`] times the theoretical bound.
pub fn run_adaptive(inst: &ProblemInstance, eps: f64, cap: Option<usize>) -> Result<SolveTrace> {
    run_adaptive_with(inst, eps, cap, &SolveOptions::for_instance(inst))
}

pub fn run_adaptive_with(
    inst: &ProblemInstance,
    eps: f64,
    cap: Option<usize>,
    options: &SolveOptions,
) -> Result<SolveTrace> {
    let cap = match cap {
        Some(c) => c,
        None => adaptive_cap(inst, eps, DEFAULT_CAP_MULTIPLIER)?,
    };
    engine::run(&problem_of(inst), eps, Schedule::Adaptive { cap }, options)
}

/// `multiplier ×` the adaptive bound, with `M_g = 0` treated as `M_g = 1`
/// (the bound only depends on `max{1, M_g²}`).
pub fn adaptive_cap(inst: &ProblemInstance, eps: f64, multiplier: f64) -> Result<usize> {
    if !(multiplier.is_finite() && multiplier >= 1.0) {
        return Err(MdError::precondition(format!(
            "cap multiplier must be ≥ 1, got {multiplier}"
        )));
    }
    let c = inst.constants();
    let bound = iteration_bound_adaptive(c.m_g.max(1.0), c.theta0_sq, eps)?;
    Ok((bound as f64 * multiplier).ceil() as usize)
}

/// Partial-adaptive Mirror Descent: exactly `⌈2M_g²Θ₀²/ε²⌉` steps.
pub fn run_partial_adaptive(inst: &ProblemInstance, eps: f64) -> Result<SolveTrace> {
    run_partial_adaptive_with(inst, eps, &SolveOptions::for_instance(inst))
}

pub fn run_partial_adaptive_with(
    inst: &ProblemInstance,
    eps: f64,
    options: &SolveOptions,
) -> Result<SolveTrace> {
    let c = inst.constants();
    if !(eps.is_finite() && eps > 0.0) {
        return Err(MdError::precondition(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let steps = iteration_bound_partial(c.m_g, c.theta0_sq, eps)?;
    engine::run(&problem_of(inst), eps, Schedule::Partial { steps }, options)
}
