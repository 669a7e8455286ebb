//! Problem instances: `min f(x)` over `x ∈ X` subject to `g(x) ≤ 0`,
//! together with the constants the solvers are parameterized by.

mod file;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use file::{from_json_str, load_instance, save_instance, to_json_string, FORMAT_VERSION};

use crate::error::{MdError, Result};
use crate::geometry::{Point, ProxSetup};
use crate::oracles::{ConvexFunction, MaxOfQuadratics, Oracle, PiecewiseMaxAffine, QuadraticPiece};

/// Generated constraints satisfy `g(center) ≤ −SLATER_MARGIN`.
pub const SLATER_MARGIN: f64 = 0.1;

const SOLUTION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    /// Lipschitz constant of `g` on `X`.
    pub m_g: f64,
    /// Lipschitz constant of `∇f` (0 if unknown).
    pub l: f64,
    /// Common strong convexity modulus of `f` and `g` (0 if not strongly convex).
    pub mu: f64,
    /// Upper bound on `d(x*)`.
    pub theta0_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnownSolution {
    pub x: Point,
    pub f: f64,
    /// `‖∇f(x*)‖*`.
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    setup: ProxSetup,
    objective: ConvexFunction,
    constraint: ConvexFunction,
    constants: Constants,
    solution: Option<KnownSolution>,
}

impl ProblemInstance {
    pub fn new(
        setup: ProxSetup,
        objective: ConvexFunction,
        constraint: ConvexFunction,
        constants: Constants,
        solution: Option<KnownSolution>,
    ) -> Result<Self> {
        let n = setup.dim();
        if objective.dim() != n || constraint.dim() != n {
            return Err(MdError::Validation(format!(
                "dimension mismatch: setup {n}, objective {}, constraint {}",
                objective.dim(),
                constraint.dim()
            )));
        }
        let Constants {
            m_g,
            l,
            mu,
            theta0_sq,
        } = constants;
        for (name, v) in [("Mg", m_g), ("L", l), ("mu", mu)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MdError::Validation(format!(
                    "constant {name} must be finite and ≥ 0, got {v}"
                )));
            }
        }
        if !(theta0_sq.is_finite() && theta0_sq > 0.0) {
            return Err(MdError::Validation(format!(
                "theta0_sq must be positive, got {theta0_sq}"
            )));
        }
        if let Some(sol) = &solution {
            if sol.x.dim() != n {
                return Err(MdError::Validation(format!(
                    "known solution has dimension {}, expected {n}",
                    sol.x.dim()
                )));
            }
            if !setup.contains(&sol.x) {
                return Err(MdError::Validation(
                    "known solution lies outside the feasible set".into(),
                ));
            }
            let g = constraint.eval_value(&sol.x);
            if g > SOLUTION_TOL {
                return Err(MdError::Validation(format!(
                    "known solution is infeasible: g(x*) = {g}"
                )));
            }
            let d = setup.dgf_value_unchecked(&sol.x);
            if theta0_sq < d - SOLUTION_TOL * (1.0 + d) {
                return Err(MdError::Validation(format!(
                    "theta0_sq = {theta0_sq} is below d(x*) = {d}"
                )));
            }
            let f = objective.eval_value(&sol.x);
            if (f - sol.f).abs() > SOLUTION_TOL * (1.0 + f.abs()) {
                return Err(MdError::Validation(format!(
                    "stored f(x*) = {} but f evaluates to {f}",
                    sol.f
                )));
            }
            if !(sol.grad_norm.is_finite() && sol.grad_norm >= 0.0) {
                return Err(MdError::Validation(
                    "stored ‖∇f(x*)‖* must be finite and ≥ 0".into(),
                ));
            }
            if objective.tie_gap(&sol.x) > SOLUTION_TOL {
                let gn = setup.dual_norm_unchecked(&objective.eval_subgradient(&sol.x));
                if (gn - sol.grad_norm).abs() > SOLUTION_TOL * (1.0 + gn) {
                    return Err(MdError::Validation(format!(
                        "stored ‖∇f(x*)‖* = {} but the gradient norm is {gn}",
                        sol.grad_norm
                    )));
                }
            }
        }
        Ok(ProblemInstance {
            setup,
            objective,
            constraint,
            constants,
            solution,
        })
    }

    pub fn setup(&self) -> &ProxSetup {
        &self.setup
    }

    pub fn objective(&self) -> &ConvexFunction {
        &self.objective
    }

    pub fn constraint(&self) -> &ConvexFunction {
        &self.constraint
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn known_solution(&self) -> Option<&KnownSolution> {
        self.solution.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.setup.dim()
    }

    pub fn with_solution(self, solution: Option<KnownSolution>) -> Result<Self> {
        Self::new(
            self.setup,
            self.objective,
            self.constraint,
            self.constants,
            solution,
        )
    }

    pub fn with_constants(self, constants: Constants) -> Result<Self> {
        Self::new(
            self.setup,
            self.objective,
            self.constraint,
            constants,
            self.solution,
        )
    }
}

/// Random max-of-quadratics objective with a piecewise-affine constraint on
/// the box `[−1, 1]ⁿ`. Deterministic in `seed`.
pub fn generate_max_quadratic(dim: usize, pieces: usize, seed: u64) -> Result<ProblemInstance> {
    if dim < 1 || pieces < 1 {
        return Err(MdError::precondition(
            "generator needs dim ≥ 1 and pieces ≥ 1",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let scale = 1.0 / (dim as f64).sqrt();

    let mut quad = Vec::with_capacity(pieces);
    for _ in 0..pieces {
        let g: Vec<f64> = (0..dim * dim).map(|_| normal() * scale).collect();
        let mut a = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in r..dim {
                let v: f64 = (0..dim).map(|k| g[k * dim + r] * g[k * dim + c]).sum();
                a[r * dim + c] = v;
                a[c * dim + r] = v;
            }
        }
        let b = (0..dim).map(|_| normal()).collect();
        let alpha = normal();
        quad.push(QuadraticPiece { a, b, alpha });
    }
    let rows: Vec<Vec<f64>> = (0..pieces)
        .map(|_| (0..dim).map(|_| normal()).collect())
        .collect();
    let offsets: Vec<f64> = (0..pieces).map(|_| normal()).collect();

    let setup = ProxSetup::euclidean_box(vec![-1.0; dim], vec![1.0; dim], None)?;
    let mut affine = PiecewiseMaxAffine::new(rows, offsets)?;
    let at_center = ConvexFunction::PiecewiseMaxAffine(affine.clone()).eval_value(setup.center());
    if at_center > -SLATER_MARGIN {
        affine.shift_offsets(-SLATER_MARGIN - at_center);
    }
    let m_g = affine.lipschitz_value_const(&setup);
    let objective = ConvexFunction::MaxOfQuadratics(MaxOfQuadratics::new(dim, quad)?);
    let constants = Constants {
        m_g,
        l: objective.lipschitz_grad_const(),
        mu: 0.0,
        theta0_sq: setup.max_dgf_over_set(),
    };
    ProblemInstance::new(
        setup,
        objective,
        ConvexFunction::PiecewiseMaxAffine(affine),
        constants,
        None,
    )
}

/// Analytic fixtures with known solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FixtureKind {
    /// `½‖x‖²` on `[−2,2]²` subject to `1 − x₁ − x₂ ≤ 0`; `x* = (½, ½)`.
    ActiveLinear,
    /// `½‖x‖²` on `[−2,2]²` subject to `½‖x − (1,1)‖² − ¼ ≤ 0`; `x* = (½, ½)`,
    /// both functions 1-strongly convex.
    StronglyConvexBall,
    /// `max{½‖x‖², x₁² + ½x₂² − 1/20}` on `[−2,2]²` subject to
    /// `1 − x₁ − x₂ ≤ 0`; `x* = (⅓, ⅔)` with only the second piece active.
    MaxQuadraticLinear,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 3] = [
        FixtureKind::ActiveLinear,
        FixtureKind::StronglyConvexBall,
        FixtureKind::MaxQuadraticLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::ActiveLinear => "active-linear",
            FixtureKind::StronglyConvexBall => "strongly-convex-ball",
            FixtureKind::MaxQuadraticLinear => "max-quadratic-linear",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| MdError::input(format!("unknown fixture kind `{name}`")))
    }
}

fn quadratic(a: [f64; 4], b: [f64; 2], alpha: f64) -> QuadraticPiece {
    QuadraticPiece {
        a: a.to_vec(),
        b: b.to_vec(),
        alpha,
    }
}

pub fn make_known_solution_instance(kind: FixtureKind) -> ProblemInstance {
    let setup = ProxSetup::euclidean_box(vec![-2.0; 2], vec![2.0; 2], None).expect("fixture box");
    let half_norm_sq = quadratic([1.0, 0.0, 0.0, 1.0], [0.0, 0.0], 0.0);
    let active_line = ConvexFunction::PiecewiseMaxAffine(
        PiecewiseMaxAffine::new(vec![vec![-1.0, -1.0]], vec![1.0]).expect("fixture line"),
    );
    let sqrt2 = std::f64::consts::SQRT_2;

    let (objective, constraint, constants, solution) = match kind {
        FixtureKind::ActiveLinear => (
            ConvexFunction::MaxOfQuadratics(
                MaxOfQuadratics::new(2, vec![half_norm_sq]).expect("fixture f"),
            ),
            active_line,
            Constants {
                m_g: sqrt2,
                l: 1.0,
                mu: 0.0,
                theta0_sq: 0.25,
            },
            KnownSolution {
                x: Point::from_vec_unchecked(vec![0.5, 0.5]),
                f: 0.25,
                grad_norm: sqrt2 / 2.0,
            },
        ),
        FixtureKind::StronglyConvexBall => (
            ConvexFunction::MaxOfQuadratics(
                MaxOfQuadratics::new(2, vec![half_norm_sq]).expect("fixture f"),
            ),
            // ½‖x − (1,1)‖² − ¼ = ½‖x‖² − x₁ − x₂ + ¾
            ConvexFunction::MaxOfQuadratics(
                MaxOfQuadratics::new(2, vec![quadratic([1.0, 0.0, 0.0, 1.0], [1.0, 1.0], 0.75)])
                    .expect("fixture g"),
            ),
            Constants {
                m_g: 3.0 * sqrt2,
                l: 1.0,
                mu: 1.0,
                theta0_sq: 0.25,
            },
            KnownSolution {
                x: Point::from_vec_unchecked(vec![0.5, 0.5]),
                f: 0.25,
                grad_norm: sqrt2 / 2.0,
            },
        ),
        FixtureKind::MaxQuadraticLinear => (
            ConvexFunction::MaxOfQuadratics(
                MaxOfQuadratics::new(
                    2,
                    vec![
                        half_norm_sq,
                        quadratic([2.0, 0.0, 0.0, 1.0], [0.0, 0.0], -0.05),
                    ],
                )
                .expect("fixture f"),
            ),
            active_line,
            Constants {
                m_g: sqrt2,
                l: 2.0,
                mu: 0.0,
                theta0_sq: 5.0 / 18.0,
            },
            KnownSolution {
                x: Point::from_vec_unchecked(vec![1.0 / 3.0, 2.0 / 3.0]),
                f: 1.0 / 3.0 - 0.05,
                grad_norm: 2.0 * sqrt2 / 3.0,
            },
        ),
    };
    ProblemInstance::new(setup, objective, constraint, constants, Some(solution))
        .expect("fixture is valid")
}
