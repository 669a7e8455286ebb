//! Convex-function evaluators: values, subgradients and the constants the
//! solvers need (`M`, `L`, `μ`).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_finite, MdError, Result};
use crate::geometry::{FeasibleSet, ProxSetup};
use crate::vector::{dist2_sq, dot, mat_vec, sub};

const PSD_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;
/// Vertex enumeration for gradient-norm bounds on boxes stops here.
const MAX_VERTEX_DIM: usize = 16;

/// Value and subgradient evaluation without input validation; the solvers
/// call this in their inner loops on points they produced themselves.
pub trait Oracle: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_value(&self, x: &[f64]) -> f64;
    fn eval_subgradient(&self, x: &[f64]) -> Vec<f64>;

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.eval_value(x), self.eval_subgradient(x))
    }
}

/// One quadratic piece `½⟨A x, x⟩ − ⟨b, x⟩ + α`, with `A` stored dense
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPiece {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: f64,
}

impl QuadraticPiece {
    fn value(&self, n: usize, x: &[f64]) -> f64 {
        0.5 * dot(&mat_vec(&self.a, n, x), x) - dot(&self.b, x) + self.alpha
    }

    fn gradient(&self, n: usize, x: &[f64]) -> Vec<f64> {
        sub(&mat_vec(&self.a, n, x), &self.b)
    }

    fn eigenvalues(&self, n: usize) -> Vec<f64> {
        let m = DMatrix::from_row_slice(n, n, &self.a);
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    }
}

/// `f(x) = max_i {½⟨A_i x, x⟩ − ⟨b_i, x⟩ + α_i}` with every `A_i` symmetric
/// positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxOfQuadratics {
    dim: usize,
    pieces: Vec<QuadraticPiece>,
}

impl MaxOfQuadratics {
    pub fn new(dim: usize, pieces: Vec<QuadraticPiece>) -> Result<Self> {
        if dim == 0 || pieces.is_empty() {
            return Err(MdError::Validation(
                "max-of-quadratics needs dim ≥ 1 and at least one piece".into(),
            ));
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.a.len() != dim * dim || p.b.len() != dim {
                return Err(MdError::Validation(format!(
                    "objective piece {i}: matrix has {} entries and vector {} entries, expected {} and {dim}",
                    p.a.len(),
                    p.b.len(),
                    dim * dim
                )));
            }
            ensure_finite(&p.a, &format!("piece {i} matrix"))?;
            ensure_finite(&p.b, &format!("piece {i} vector"))?;
            ensure_finite(&[p.alpha], &format!("piece {i} offset"))?;
            let scale = p.a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for r in 0..dim {
                for c in (r + 1)..dim {
                    if (p.a[r * dim + c] - p.a[c * dim + r]).abs() > SYMMETRY_TOL * scale {
                        return Err(MdError::Validation(format!(
                            "piece {i}: matrix is not symmetric at ({r}, {c})"
                        )));
                    }
                }
            }
            let min_eig = p.eigenvalues(dim).into_iter().fold(f64::INFINITY, f64::min);
            if min_eig < -PSD_TOL * scale {
                return Err(MdError::Validation(format!(
                    "piece {i}: matrix is not positive semidefinite (smallest eigenvalue {min_eig})"
                )));
            }
        }
        Ok(MaxOfQuadratics { dim, pieces })
    }

    pub fn pieces(&self) -> &[QuadraticPiece] {
        &self.pieces
    }

    fn piece_values<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let n = self.dim;
        self.pieces.iter().map(move |p| p.value(n, x))
    }

    /// `max_i λ_max(A_i)`.
    pub fn lipschitz_grad_const(&self) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| p.eigenvalues(self.dim))
            .fold(0.0, f64::max)
    }

    /// `min_i λ_min(A_i)`, clamped at zero.
    pub fn strong_convexity(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                p.eigenvalues(self.dim)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

/// `g(x) = max_j {⟨c_j, x⟩ + d_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseMaxAffine {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl PiecewiseMaxAffine {
    pub fn new(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || rows.len() != offsets.len() {
            return Err(MdError::Validation(format!(
                "piecewise-affine function has {} rows and {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(MdError::Validation(
                "piecewise-affine rows are empty".into(),
            ));
        }
        for (j, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MdError::Validation(format!(
                    "constraint row {j} has length {}, expected {n}",
                    r.len()
                )));
            }
            ensure_finite(r, &format!("constraint row {j}"))?;
        }
        ensure_finite(&offsets, "constraint offsets")?;
        Ok(PiecewiseMaxAffine { rows, offsets })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub(crate) fn shift_offsets(&mut self, delta: f64) {
        for d in &mut self.offsets {
            *d += delta;
        }
    }

    /// `max_j ‖c_j‖*` in the dual norm of `setup`.
    pub fn lipschitz_value_const(&self, setup: &ProxSetup) -> f64 {
        self.rows
            .iter()
            .map(|r| setup.dual_norm_unchecked(r))
            .fold(0.0, f64::max)
    }

    fn piece_values<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.rows
            .iter()
            .zip(&self.offsets)
            .map(move |(c, d)| dot(c, x) + d)
    }
}

/// `base(x) + (μ/2)‖x − anchor‖₂²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularized {
    pub base: Box<ConvexFunction>,
    pub mu: f64,
    pub anchor: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexFunction {
    MaxOfQuadratics(MaxOfQuadratics),
    PiecewiseMaxAffine(PiecewiseMaxAffine),
    Regularized(Regularized),
}

/// Index of the first maximal value; ties go to the lowest index.
fn first_argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Gap between the largest and second-largest piece value.
fn top_two_gap(values: impl Iterator<Item = f64>) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    first - second
}

impl ConvexFunction {
    pub fn regularized(base: ConvexFunction, mu: f64, anchor: Vec<f64>) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(MdError::Validation(format!(
                "regularization weight must be ≥ 0, got {mu}"
            )));
        }
        if anchor.len() != base.dim() {
            return Err(MdError::Validation(
                "regularization anchor has the wrong dimension".into(),
            ));
        }
        ensure_finite(&anchor, "regularization anchor")?;
        Ok(ConvexFunction::Regularized(Regularized {
            base: Box::new(base),
            mu,
            anchor,
        }))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(MdError::input(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        ensure_finite(x, "point")
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.eval_value(x))
    }

    /// A subgradient at `x`; for max-type functions the gradient of the
    /// lowest-index piece achieving the maximum.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.eval_subgradient(x))
    }

    /// Distance to the nearest tie between maximal pieces at `x`
    /// (`+∞` for a single smooth piece).
    pub fn tie_gap(&self, x: &[f64]) -> f64 {
        match self {
            ConvexFunction::MaxOfQuadratics(q) if q.pieces.len() > 1 => {
                top_two_gap(q.piece_values(x))
            }
            ConvexFunction::PiecewiseMaxAffine(a) if a.rows.len() > 1 => {
                top_two_gap(a.piece_values(x))
            }
            ConvexFunction::Regularized(r) => r.base.tie_gap(x),
            _ => f64::INFINITY,
        }
    }

    fn active_piece(&self, x: &[f64]) -> usize {
        match self {
            ConvexFunction::MaxOfQuadratics(q) => first_argmax(q.piece_values(x)).0,
            ConvexFunction::PiecewiseMaxAffine(a) => first_argmax(a.piece_values(x)).0,
            ConvexFunction::Regularized(r) => r.base.active_piece(x),
        }
    }

    /// Lipschitz constant of the gradient (max over pieces), when known
    /// analytically. Affine pieces contribute 0.
    pub fn lipschitz_grad_const(&self) -> f64 {
        match self {
            ConvexFunction::MaxOfQuadratics(q) => q.lipschitz_grad_const(),
            ConvexFunction::PiecewiseMaxAffine(_) => 0.0,
            ConvexFunction::Regularized(r) => r.base.lipschitz_grad_const() + r.mu,
        }
    }

    /// Strong convexity modulus w.r.t. the Euclidean norm.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            ConvexFunction::MaxOfQuadratics(q) => q.strong_convexity(),
            ConvexFunction::PiecewiseMaxAffine(_) => 0.0,
            ConvexFunction::Regularized(r) => r.base.strong_convexity() + r.mu,
        }
    }

    /// An upper bound on `sup_{x ∈ X} ‖∇(x)‖*`, i.e. a Lipschitz constant of
    /// the function on `X`. Exact for affine pieces, and for quadratic pieces
    /// on boxes and simplices (the maximum of a convex function of `x` sits
    /// at a vertex). `None` when no bound is available.
    pub fn lipschitz_value_const(&self, setup: &ProxSetup) -> Option<f64> {
        match self {
            ConvexFunction::PiecewiseMaxAffine(a) => Some(a.lipschitz_value_const(setup)),
            ConvexFunction::MaxOfQuadratics(q) => {
                let n = q.dim;
                let over = |pts: &mut dyn Iterator<Item = Vec<f64>>| -> f64 {
                    pts.map(|v| {
                        q.pieces
                            .iter()
                            .map(|p| setup.dual_norm_unchecked(&p.gradient(n, &v)))
                            .fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max)
                };
                match setup.set() {
                    FeasibleSet::Box { lower, upper } => {
                        if n > MAX_VERTEX_DIM {
                            return None;
                        }
                        Some(over(&mut box_vertices(lower, upper)))
                    }
                    FeasibleSet::Simplex { dim } => Some(over(&mut (0..*dim).map(|i| {
                        let mut e = vec![0.0; *dim];
                        e[i] = 1.0;
                        e
                    }))),
                    FeasibleSet::Ball { center, radius } => Some(
                        q.pieces
                            .iter()
                            .map(|p| {
                                let top = p
                                    .eigenvalues(n)
                                    .into_iter()
                                    .fold(0.0, |m: f64, e| m.max(e.abs()));
                                setup.dual_norm_unchecked(&p.gradient(n, center)) + top * radius
                            })
                            .fold(0.0, f64::max),
                    ),
                }
            }
            ConvexFunction::Regularized(r) => {
                let base = r.base.lipschitz_value_const(setup)?;
                let reach = setup.max_dist_sq_from(&r.anchor).sqrt();
                Some(base + r.mu * reach)
            }
        }
    }
}

fn box_vertices<'a>(lower: &'a [f64], upper: &'a [f64]) -> impl Iterator<Item = Vec<f64>> + 'a {
    let n = lower.len();
    (0u64..(1u64 << n)).map(move |mask| {
        (0..n)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    upper[i]
                } else {
                    lower[i]
                }
            })
            .collect()
    })
}

impl Oracle for ConvexFunction {
    fn dim(&self) -> usize {
        match self {
            ConvexFunction::MaxOfQuadratics(q) => q.dim,
            ConvexFunction::PiecewiseMaxAffine(a) => a.rows[0].len(),
            ConvexFunction::Regularized(r) => r.anchor.len(),
        }
    }

    fn eval_value(&self, x: &[f64]) -> f64 {
        match self {
            ConvexFunction::MaxOfQuadratics(q) => first_argmax(q.piece_values(x)).1,
            ConvexFunction::PiecewiseMaxAffine(a) => first_argmax(a.piece_values(x)).1,
            ConvexFunction::Regularized(r) => {
                r.base.eval_value(x) + 0.5 * r.mu * dist2_sq(x, &r.anchor)
            }
        }
    }

    fn eval_subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexFunction::MaxOfQuadratics(q) => {
                let i = self.active_piece(x);
                q.pieces[i].gradient(q.dim, x)
            }
            ConvexFunction::PiecewiseMaxAffine(a) => a.rows[self.active_piece(x)].clone(),
            ConvexFunction::Regularized(r) => {
                let mut g = r.base.eval_subgradient(x);
                for ((gi, xi), ai) in g.iter_mut().zip(x).zip(&r.anchor) {
                    *gi += r.mu * (xi - ai);
                }
                g
            }
        }
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_value(&self, x: &[f64]) -> f64 {
        (**self).eval_value(x)
    }
    fn eval_subgradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).eval_subgradient(x)
    }
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).eval(x)
    }
}

/// `v_f(x, y) = ⟨∇f(x)/‖∇f(x)‖*, x − y⟩`, or 0 when `∇f(x) = 0`.
pub fn v_f(oracle: &dyn Oracle, setup: &ProxSetup, x: &[f64], y: &[f64]) -> Result<f64> {
    ensure_finite(x, "x")?;
    ensure_finite(y, "y")?;
    let grad = oracle.eval_subgradient(x);
    Ok(v_f_from_gradient(setup, &grad, x, y))
}

pub(crate) fn v_f_from_gradient(setup: &ProxSetup, grad: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let norm = setup.dual_norm_unchecked(grad);
    if norm == 0.0 {
        0.0
    } else {
        dot(grad, &sub(x, y)) / norm
    }
}

/// Outcome of a finite-difference gradient check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FdCheck {
    /// Largest coordinate discrepancy between the central difference and the
    /// returned subgradient.
    MaxError(f64),
    /// `x` sits within tolerance of a tie between maximal pieces.
    NonDifferentiable,
}

pub fn check_gradient_fd(oracle: &ConvexFunction, x: &[f64], h: f64) -> Result<FdCheck> {
    oracle.check_input(x)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(MdError::input(format!("step h must be positive, got {h}")));
    }
    if oracle.tie_gap(x) <= TIE_TOL {
        return Ok(FdCheck::NonDifferentiable);
    }
    let grad = oracle.eval_subgradient(x);
    let active = oracle.active_piece(x);
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = oracle.eval_value(&probe);
        let ap = oracle.active_piece(&probe);
        probe[i] = x[i] - h;
        let fm = oracle.eval_value(&probe);
        let am = oracle.active_piece(&probe);
        probe[i] = x[i];
        if ap != active || am != active {
            // A tie lies inside the stencil.
            return Ok(FdCheck::NonDifferentiable);
        }
        worst = worst.max(((fp - fm) / (2.0 * h) - grad[i]).abs());
    }
    Ok(FdCheck::MaxError(worst))
}

/// Sampled lower bounds `(M_est, L_est)` on the value and gradient Lipschitz
/// constants over random feasible pairs.
pub fn estimate_lipschitz_constants(
    oracle: &dyn Oracle,
    setup: &ProxSetup,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(MdError::input("need at least 2 samples"));
    }
    if setup.is_degenerate() {
        return Err(MdError::domain("feasible set is a single point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut m_est, mut l_est) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = setup.sample_point(&mut rng);
        let y = setup.sample_point(&mut rng);
        let r = setup.norm(&sub(&x, &y));
        if r <= 1e-12 {
            continue;
        }
        let (fx, gx) = oracle.eval(&x);
        let (fy, gy) = oracle.eval(&y);
        m_est = m_est.max((fx - fy).abs() / r);
        l_est = l_est.max(setup.dual_norm_unchecked(&sub(&gx, &gy)) / r);
    }
    Ok((m_est, l_est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn identity_quadratic(n: usize) -> ConvexFunction {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        ConvexFunction::MaxOfQuadratics(
            MaxOfQuadratics::new(
                n,
                vec![QuadraticPiece {
                    a,
                    b: vec![0.0; n],
                    alpha: 0.0,
                }],
            )
            .unwrap(),
        )
    }

    fn two_planes() -> ConvexFunction {
        ConvexFunction::PiecewiseMaxAffine(
            PiecewiseMaxAffine::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap(),
        )
    }

    fn box2(r: f64) -> ProxSetup {
        ProxSetup::euclidean_box(vec![-r; 2], vec![r; 2], None).unwrap()
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(
            identity_quadratic(2).subgradient(&[2.0, 3.0]).unwrap(),
            vec![2.0, 3.0]
        );
        assert_eq!(
            two_planes().subgradient(&[2.0, 1.0]).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            two_planes().subgradient(&[1.0, 1.0]).unwrap(),
            vec![1.0, 0.0]
        );
        assert!(two_planes().subgradient(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn v_f_examples() {
        let s = box2(10.0);
        let affine = ConvexFunction::PiecewiseMaxAffine(
            PiecewiseMaxAffine::new(vec![vec![3.0, 4.0]], vec![0.0]).unwrap(),
        );
        assert_abs_diff_eq!(
            v_f(&affine, &s, &[1.0, 0.0], &[0.0, 0.0]).unwrap(),
            0.6,
            epsilon = 1e-15
        );
        // ∇f(0) = 0 for ½‖x‖².
        assert_eq!(
            v_f(&identity_quadratic(2), &s, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            0.0
        );
        assert_eq!(v_f(&affine, &s, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn v_f_bounded_by_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let setups = [box2(2.0), ProxSetup::entropy_simplex(2).unwrap()];
        let f = ConvexFunction::PiecewiseMaxAffine(
            PiecewiseMaxAffine::new(vec![vec![1.0, -2.0], vec![0.5, 3.0]], vec![0.1, -0.2])
                .unwrap(),
        );
        for s in &setups {
            for _ in 0..1000 {
                let x = s.sample_point(&mut rng);
                let y = s.sample_point(&mut rng);
                assert!(v_f(&f, s, &x, &y).unwrap() <= s.norm(&sub(&x, &y)) + 1e-12);
            }
        }
    }

    #[test]
    fn fd_check_examples() {
        match check_gradient_fd(&identity_quadratic(2), &[1.0, 2.0], 1e-4).unwrap() {
            FdCheck::MaxError(e) => assert!(e <= 1e-7, "{e}"),
            other => panic!("{other:?}"),
        }
        match check_gradient_fd(&two_planes(), &[2.0, 1.0], 1e-4).unwrap() {
            FdCheck::MaxError(e) => assert!(e <= 1e-10, "{e}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            check_gradient_fd(&two_planes(), &[1.0, 1.0], 1e-4).unwrap(),
            FdCheck::NonDifferentiable
        );
        assert!(check_gradient_fd(&two_planes(), &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn lipschitz_estimates() {
        let affine = ConvexFunction::PiecewiseMaxAffine(
            PiecewiseMaxAffine::new(vec![vec![3.0, 4.0]], vec![0.0]).unwrap(),
        );
        let (m, _) = estimate_lipschitz_constants(&affine, &box2(1.0), 5000, 1).unwrap();
        assert!(m <= 5.0 + 1e-12 && m > 4.95, "{m}");
        assert_eq!(affine.lipschitz_value_const(&box2(1.0)), Some(5.0));

        let (_, l) =
            estimate_lipschitz_constants(&identity_quadratic(2), &box2(1.0), 100, 2).unwrap();
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-12);

        let diag = ConvexFunction::MaxOfQuadratics(
            MaxOfQuadratics::new(
                2,
                vec![QuadraticPiece {
                    a: vec![1.0, 0.0, 0.0, 2.0],
                    b: vec![0.0; 2],
                    alpha: 0.0,
                }],
            )
            .unwrap(),
        );
        let (_, l) = estimate_lipschitz_constants(&diag, &box2(1.0), 5000, 3).unwrap();
        assert!(l <= 2.0 + 1e-12 && l > 1.99, "{l}");
        assert_abs_diff_eq!(diag.lipschitz_grad_const(), 2.0, epsilon = 1e-12);

        let point = ProxSetup::euclidean_box(vec![1.0; 2], vec![1.0; 2], None).unwrap();
        assert!(matches!(
            estimate_lipschitz_constants(&diag, &point, 10, 0),
            Err(MdError::Domain(_))
        ));
        assert!(estimate_lipschitz_constants(&diag, &box2(1.0), 1, 0).is_err());
    }

    #[test]
    fn affine_lipschitz_holds_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = ConvexFunction::PiecewiseMaxAffine(
            PiecewiseMaxAffine::new(
                vec![vec![1.0, -2.0], vec![0.5, 3.0], vec![-1.0, 0.0]],
                vec![0.0, 1.0, -1.0],
            )
            .unwrap(),
        );
        for s in [box2(3.0), ProxSetup::entropy_simplex(2).unwrap()] {
            let m = g.lipschitz_value_const(&s).unwrap();
            for _ in 0..1000 {
                let x = s.sample_point(&mut rng);
                let y = s.sample_point(&mut rng);
                assert!(
                    (g.value(&x).unwrap() - g.value(&y).unwrap()).abs()
                        <= m * s.norm(&sub(&x, &y)) + 1e-10
                );
            }
        }
    }

    #[test]
    fn quadratic_gradient_bound_on_box_vertices() {
        // g(x) = ½‖x − (1,1)‖² − ¼ on [−2,2]²: max ‖x − (1,1)‖ = 3√2 at (−2,−2).
        let g = ConvexFunction::MaxOfQuadratics(
            MaxOfQuadratics::new(
                2,
                vec![QuadraticPiece {
                    a: vec![1.0, 0.0, 0.0, 1.0],
                    b: vec![1.0, 1.0],
                    alpha: 0.75,
                }],
            )
            .unwrap(),
        );
        assert_abs_diff_eq!(
            g.lipschitz_value_const(&box2(2.0)).unwrap(),
            3.0 * 2f64.sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(g.value(&[0.5, 0.5]).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_indefinite_and_ragged() {
        let bad = MaxOfQuadratics::new(
            2,
            vec![
                QuadraticPiece {
                    a: vec![1.0, 0.0, 0.0, 1.0],
                    b: vec![0.0; 2],
                    alpha: 0.0,
                },
                QuadraticPiece {
                    a: vec![1.0, 0.0, 0.0, -0.5],
                    b: vec![0.0; 2],
                    alpha: 0.0,
                },
            ],
        );
        match bad {
            Err(MdError::Validation(msg)) => assert!(msg.contains("piece 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(MaxOfQuadratics::new(
            2,
            vec![QuadraticPiece {
                a: vec![1.0, 2.0, 0.0, 1.0],
                b: vec![0.0; 2],
                alpha: 0.0
            }]
        )
        .is_err());
        assert!(PiecewiseMaxAffine::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn regularized_adds_curvature() {
        let f = ConvexFunction::regularized(two_planes(), 2.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(f.strong_convexity(), 2.0);
        assert_eq!(f.subgradient(&[2.0, 1.0]).unwrap(), vec![3.0, 2.0]);
        assert_abs_diff_eq!(f.value(&[2.0, 1.0]).unwrap(), 2.0 + 2.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let gx = f.subgradient(&x).unwrap();
            // Strong subgradient inequality with μ = 2.
            let lower = f.value(&x).unwrap() + dot(&gx, &sub(&y, &x)) + dist2_sq(&x, &y);
            assert!(f.value(&y).unwrap() >= lower - 1e-10);
        }
    }
}
