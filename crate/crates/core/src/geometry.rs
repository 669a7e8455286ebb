//! Proximal setups: feasible sets, distance-generating functions, Bregman
//! divergences and the mirror (prox-mapping) step.
//!
//! Three setups are supported, each with a closed-form mirror step:
//!
//! * `EuclideanBox` and `EuclideanBall` use `d(x) = ½‖x − c‖₂²`, where `c` is
//!   the setup center. The mirror step is the Euclidean projection of `x − p`.
//! * `EntropySimplex` uses the negative entropy `d(x) = ln n + Σ xᵢ ln xᵢ`
//!   on the probability simplex, with the ℓ1 norm. The mirror step is the
//!   multiplicative (exponentiated-gradient) update.

use std::ops::Deref;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, MdError, Result};
use crate::vector::{dist2_sq, dot, norm1, norm2, norm_inf, sub};

/// Entropy iterates are floored here after normalization so that `∇d` stays
/// finite.
pub const ENTROPY_FLOOR: f64 = 1e-300;

const MEMBERSHIP_TOL: f64 = 1e-9;

/// A primal point with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        ensure_finite(&coords, "point")?;
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupKind {
    EuclideanBox,
    EuclideanBall,
    EntropySimplex,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeasibleSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { dim: usize },
}

/// A feasible set together with its distance-generating function.
///
/// `center` is the minimizer of `d` over the set; every solver starts there.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxSetup {
    set: FeasibleSet,
    center: Point,
}

impl ProxSetup {
    /// Box `[lower, upper]` with the Euclidean d.g.f. centered at `center`
    /// (defaults to the projection of the origin onto the box).
    pub fn euclidean_box(
        lower: Vec<f64>,
        upper: Vec<f64>,
        center: Option<Vec<f64>>,
    ) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(MdError::Validation(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        ensure_finite(&lower, "box lower bound")?;
        ensure_finite(&upper, "box upper bound")?;
        if let Some(i) = lower.iter().zip(&upper).position(|(l, u)| l > u) {
            return Err(MdError::Validation(format!(
                "box coordinate {i}: lower bound exceeds upper bound"
            )));
        }
        let center = match center {
            Some(c) => c,
            None => lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| 0.0f64.clamp(*l, *u))
                .collect(),
        };
        Self::with_center(FeasibleSet::Box { lower, upper }, center)
    }

    /// Euclidean ball; the d.g.f. center defaults to the ball center.
    pub fn euclidean_ball(
        ball_center: Vec<f64>,
        radius: f64,
        center: Option<Vec<f64>>,
    ) -> Result<Self> {
        if ball_center.is_empty() {
            return Err(MdError::Validation("ball center is empty".into()));
        }
        ensure_finite(&ball_center, "ball center")?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(MdError::Validation(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        let center = center.unwrap_or_else(|| ball_center.clone());
        Self::with_center(
            FeasibleSet::Ball {
                center: ball_center,
                radius,
            },
            center,
        )
    }

    /// Probability simplex in `dim` coordinates with the entropy d.g.f.
    pub fn entropy_simplex(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(MdError::Validation(
                "simplex dimension must be at least 1".into(),
            ));
        }
        let center = vec![1.0 / dim as f64; dim];
        Ok(ProxSetup {
            set: FeasibleSet::Simplex { dim },
            center: Point(center),
        })
    }

    fn with_center(set: FeasibleSet, center: Vec<f64>) -> Result<Self> {
        ensure_finite(&center, "setup center")?;
        let setup = ProxSetup {
            set,
            center: Point(center),
        };
        if setup.center.dim() != setup.dim() {
            return Err(MdError::Validation(format!(
                "setup center has dimension {}, set has dimension {}",
                setup.center.dim(),
                setup.dim()
            )));
        }
        if !setup.contains(&setup.center) {
            return Err(MdError::Validation(
                "setup center lies outside the feasible set".into(),
            ));
        }
        Ok(setup)
    }

    pub fn kind(&self) -> SetupKind {
        match self.set {
            FeasibleSet::Box { .. } => SetupKind::EuclideanBox,
            FeasibleSet::Ball { .. } => SetupKind::EuclideanBall,
            FeasibleSet::Simplex { .. } => SetupKind::EntropySimplex,
        }
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn dim(&self) -> usize {
        match &self.set {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Simplex { dim } => *dim,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        !matches!(self.set, FeasibleSet::Simplex { .. })
    }

    /// Membership test with a small absolute/relative tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.set {
            FeasibleSet::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| {
                    let tol = MEMBERSHIP_TOL * (1.0 + l.abs().max(u.abs()));
                    *v >= l - tol && *v <= u + tol
                })
            }
            FeasibleSet::Ball { center, radius } => {
                dist2_sq(x, center).sqrt() <= radius * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL
            }
            FeasibleSet::Simplex { dim } => {
                let sum: f64 = x.iter().sum();
                x.iter().all(|v| *v >= 0.0) && (sum - 1.0).abs() <= MEMBERSHIP_TOL * *dim as f64
            }
        }
    }

    fn check_member(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(MdError::input(format!(
                "{what} has dimension {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        ensure_finite(x, what)?;
        if !self.contains(x) {
            return Err(MdError::domain(format!(
                "{what} lies outside the feasible set"
            )));
        }
        Ok(())
    }

    fn check_interior_simplex(&self, x: &[f64], what: &str) -> Result<()> {
        if let FeasibleSet::Simplex { .. } = self.set {
            if let Some(i) = x.iter().position(|v| *v <= 0.0) {
                return Err(MdError::domain(format!(
                    "{what}: coordinate {i} is on the simplex boundary, entropy gradient undefined"
                )));
            }
        }
        Ok(())
    }

    /// The distance-generating function `d(x)`.
    pub fn dgf_value(&self, x: &[f64]) -> Result<f64> {
        self.check_member(x, "point")?;
        Ok(self.dgf_value_unchecked(x))
    }

    pub(crate) fn dgf_value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.set {
            FeasibleSet::Simplex { dim } => {
                let neg_entropy: f64 = x.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum();
                (*dim as f64).ln() + neg_entropy
            }
            _ => 0.5 * dist2_sq(x, &self.center),
        }
    }

    /// `∇d(x)`; for the entropy setup `x` must be strictly positive.
    pub fn dgf_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_member(x, "point")?;
        self.check_interior_simplex(x, "point")?;
        Ok(match &self.set {
            FeasibleSet::Simplex { .. } => x.iter().map(|v| v.ln() + 1.0).collect(),
            _ => sub(x, &self.center),
        })
    }

    /// Primal norm `‖·‖` of the setup.
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self.set {
            FeasibleSet::Simplex { .. } => norm1(v),
            _ => norm2(v),
        }
    }

    /// Dual norm `‖·‖*`: ℓ2 for the Euclidean setups, ℓ∞ for the simplex.
    pub fn dual_norm(&self, p: &[f64]) -> Result<f64> {
        ensure_finite(p, "dual vector")?;
        Ok(self.dual_norm_unchecked(p))
    }

    pub(crate) fn dual_norm_unchecked(&self, p: &[f64]) -> f64 {
        match self.set {
            FeasibleSet::Simplex { .. } => norm_inf(p),
            _ => norm2(p),
        }
    }

    /// Bregman divergence `V(x, y) = d(y) − d(x) − ⟨∇d(x), y − x⟩`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_member(x, "x")?;
        self.check_member(y, "y")?;
        self.check_interior_simplex(x, "x")?;
        Ok(self.bregman_unchecked(x, y))
    }

    pub(crate) fn bregman_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.set {
            FeasibleSet::Simplex { .. } => {
                // KL form; the Σ(x − y) term vanishes on the simplex up to rounding.
                let kl: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(xi, yi)| if *yi > 0.0 { yi * (yi / xi).ln() } else { 0.0 } + xi - yi)
                    .sum();
                kl.max(0.0)
            }
            _ => 0.5 * dist2_sq(x, y),
        }
    }

    /// Euclidean projection onto the feasible set (Euclidean setups only).
    pub fn project(&self, z: &[f64]) -> Result<Point> {
        ensure_finite(z, "point")?;
        match &self.set {
            FeasibleSet::Box { lower, upper } => Ok(Point(
                z.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (l, u))| v.clamp(*l, *u))
                    .collect(),
            )),
            FeasibleSet::Ball { center, radius } => {
                let offset = sub(z, center);
                let len = norm2(&offset);
                if len <= *radius {
                    Ok(Point(z.to_vec()))
                } else {
                    let s = radius / len;
                    Ok(Point(
                        center.iter().zip(&offset).map(|(c, o)| c + s * o).collect(),
                    ))
                }
            }
            FeasibleSet::Simplex { .. } => Err(MdError::precondition(
                "Euclidean projection is not the mirror step of the entropy setup",
            )),
        }
    }

    /// `Mirr_x(p) = argmin_{u ∈ X} {⟨p, u⟩ + V(x, u)}`.
    pub fn mirror_step(&self, x: &[f64], p: &[f64]) -> Result<Point> {
        self.check_member(x, "x")?;
        self.check_interior_simplex(x, "x")?;
        if p.len() != self.dim() {
            return Err(MdError::input(format!(
                "dual vector has dimension {}, expected {}",
                p.len(),
                self.dim()
            )));
        }
        ensure_finite(p, "dual vector")?;
        Ok(self.mirror_step_unchecked(x, p))
    }

    pub(crate) fn mirror_step_unchecked(&self, x: &[f64], p: &[f64]) -> Point {
        match &self.set {
            FeasibleSet::Simplex { .. } => {
                let logits: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi.ln() - pi).collect();
                let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = weights.iter().sum();
                Point(
                    weights
                        .iter()
                        .map(|w| (w / total).max(ENTROPY_FLOOR))
                        .collect(),
                )
            }
            _ => {
                let z = sub(x, p);
                // Finite by construction of x and p.
                self.project(&z).expect("finite Euclidean step")
            }
        }
    }

    /// `max_{x ∈ X} d(x)`, a valid `Θ₀²` for any solution in `X`.
    pub fn max_dgf_over_set(&self) -> f64 {
        match &self.set {
            FeasibleSet::Box { lower, upper } => {
                0.5 * lower
                    .iter()
                    .zip(upper)
                    .zip(self.center.iter())
                    .map(|((l, u), c)| (u - c).powi(2).max((c - l).powi(2)))
                    .sum::<f64>()
            }
            FeasibleSet::Ball { center, radius } => {
                0.5 * (dist2_sq(center, &self.center).sqrt() + radius).powi(2)
            }
            FeasibleSet::Simplex { dim } => (*dim as f64).ln(),
        }
    }

    /// `max_{‖x − center‖ ≤ 1} d(x)`; `None` for the entropy setup, whose
    /// d.g.f. is not defined on a norm ball.
    pub fn unit_ball_dgf_bound(&self) -> Option<f64> {
        if self.is_euclidean() {
            Some(0.5)
        } else {
            None
        }
    }

    /// `max_{x ∈ X} ‖x − from‖²` in the setup norm.
    pub fn max_dist_sq_from(&self, from: &[f64]) -> f64 {
        match &self.set {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(from)
                .map(|((l, u), c)| (u - c).powi(2).max((c - l).powi(2)))
                .sum(),
            FeasibleSet::Ball { center, radius } => {
                (dist2_sq(center, from).sqrt() + radius).powi(2)
            }
            FeasibleSet::Simplex { .. } => {
                let smallest = from.iter().cloned().fold(f64::INFINITY, f64::min);
                (2.0 * (1.0 - smallest)).powi(2)
            }
        }
    }

    /// The setup in coordinates `y = (x − anchor) / radius`, with the d.g.f.
    /// centered at `y = 0`.
    pub fn rescaled(&self, anchor: &[f64], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(MdError::precondition(format!(
                "rescaling radius must be positive, got {radius}"
            )));
        }
        self.check_member(anchor, "rescaling anchor")?;
        let to_local = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(anchor)
                .map(|(x, a)| (x - a) / radius)
                .collect()
        };
        let zero = vec![0.0; self.dim()];
        match &self.set {
            FeasibleSet::Box { lower, upper } => {
                // The anchor may sit a hair outside the box after rounding.
                let lower: Vec<f64> = to_local(lower).into_iter().map(|v| v.min(0.0)).collect();
                let upper: Vec<f64> = to_local(upper).into_iter().map(|v| v.max(0.0)).collect();
                Self::with_center(FeasibleSet::Box { lower, upper }, zero)
            }
            FeasibleSet::Ball { center, radius: r } => {
                let local_center = to_local(center);
                let local_radius = (r / radius).max(norm2(&local_center));
                Self::with_center(
                    FeasibleSet::Ball {
                        center: local_center,
                        radius: local_radius,
                    },
                    zero,
                )
            }
            FeasibleSet::Simplex { .. } => Err(MdError::precondition(
                "restarts need a d.g.f. bounded on a norm ball; the entropy setup is not supported",
            )),
        }
    }

    /// Draws a point of `X`: uniform on boxes and balls, flat Dirichlet on
    /// the simplex.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.set {
            FeasibleSet::Box { lower, upper } => Point(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        if l == u {
                            *l
                        } else {
                            rng.random_range(*l..=*u)
                        }
                    })
                    .collect(),
            ),
            FeasibleSet::Ball { center, radius } => {
                let n = center.len();
                let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = norm2(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                Point(
                    center
                        .iter()
                        .zip(&dir)
                        .map(|(c, d)| c + r * d / len)
                        .collect(),
                )
            }
            FeasibleSet::Simplex { dim } => {
                let e: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                Point(e.iter().map(|v| (v / total).max(ENTROPY_FLOOR)).collect())
            }
        }
    }

    /// Whether the set contains more than one point.
    pub fn is_degenerate(&self) -> bool {
        match &self.set {
            FeasibleSet::Box { lower, upper } => lower.iter().zip(upper).all(|(l, u)| l == u),
            FeasibleSet::Ball { .. } => false,
            FeasibleSet::Simplex { dim } => *dim == 1,
        }
    }
}

/// `⟨p + ∇d(u) − ∇d(x), w − u⟩`, the first-order optimality residual of a
/// mirror step `u = Mirr_x(p)` tested against a feasible `w`.
pub fn mirror_optimality_gap(
    setup: &ProxSetup,
    x: &[f64],
    p: &[f64],
    u: &[f64],
    w: &[f64],
) -> Result<f64> {
    let gu = setup.dgf_gradient(u)?;
    let gx = setup.dgf_gradient(x)?;
    let lhs: Vec<f64> = p
        .iter()
        .zip(gu.iter().zip(&gx))
        .map(|(pi, (a, b))| pi + a - b)
        .collect();
    Ok(dot(&lhs, &sub(w, u)))
}
