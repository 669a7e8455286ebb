//! Iteration counts and the accuracy map used by the restart scheme.

use crate::error::{MdError, Result};

/// `⌈v⌉`, except that values within `1e-9` (relative) of an integer round to
/// that integer. Constants such as `√2` squared come back as
/// `2.0000000000000004`, which a plain ceiling would bump by one.
pub(crate) fn robust_ceil(v: f64) -> f64 {
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        v.ceil()
    }
}

fn check_bound_inputs(m_g: f64, theta0_sq: f64, eps: f64) -> Result<()> {
    for (name, v) in [("M_g", m_g), ("theta0_sq", theta0_sq), ("epsilon", eps)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(MdError::precondition(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

fn to_count(v: f64) -> Result<usize> {
    if v > usize::MAX as f64 / 2.0 {
        return Err(MdError::precondition(format!(
            "iteration count {v} is too large"
        )));
    }
    Ok(v as usize)
}

/// `⌈2 max{1, M_g²} Θ₀² / ε²⌉`: the adaptive method's stopping rule must
/// fire within this many steps.
pub fn iteration_bound_adaptive(m_g: f64, theta0_sq: f64, eps: f64) -> Result<usize> {
    check_bound_inputs(m_g, theta0_sq, eps)?;
    to_count(robust_ceil(
        2.0 * (m_g * m_g).max(1.0) * theta0_sq / (eps * eps),
    ))
}

/// `⌈2 M_g² Θ₀² / ε²⌉`: the fixed step count of the partial-adaptive method.
pub fn iteration_bound_partial(m_g: f64, theta0_sq: f64, eps: f64) -> Result<usize> {
    check_bound_inputs(m_g, theta0_sq, eps)?;
    to_count(robust_ceil(2.0 * m_g * m_g * theta0_sq / (eps * eps)))
}

/// `τ(δ) = max{δ‖∇f(x*)‖* + δ²L/2, δ M_g}`.
pub fn tau(delta: f64, grad_norm_star: f64, l: f64, m_g: f64) -> f64 {
    (delta * grad_norm_star + 0.5 * delta * delta * l).max(delta * m_g)
}

/// `φ(ε)`, the inverse of [`tau`]: `min{a⁻¹(ε), ε/M_g}` with
/// `a(δ) = δ‖∇f(x*)‖* + δ²L/2`.
pub fn phi_inverse(eps: f64, grad_norm_star: f64, l: f64, m_g: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(MdError::precondition(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    for (name, v) in [("‖∇f(x*)‖*", grad_norm_star), ("L", l), ("M_g", m_g)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(MdError::precondition(format!(
                "{name} must be finite and ≥ 0, got {v}"
            )));
        }
    }
    if grad_norm_star == 0.0 && l == 0.0 && m_g == 0.0 {
        return Err(MdError::Degenerate(
            "‖∇f(x*)‖*, L and M_g are all zero; τ vanishes".into(),
        ));
    }
    // (√(G² + 2εL) − G)/L rewritten without cancellation; equals ε/G when L = 0.
    let objective_branch =
        2.0 * eps / ((grad_norm_star * grad_norm_star + 2.0 * eps * l).sqrt() + grad_norm_star);
    let constraint_branch = if m_g > 0.0 { eps / m_g } else { f64::INFINITY };
    Ok(objective_branch.min(constraint_branch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adaptive_bound_examples() {
        assert_eq!(iteration_bound_adaptive(1.0, 0.5, 0.1).unwrap(), 100);
        assert_eq!(iteration_bound_adaptive(2.0, 1.0, 1.0).unwrap(), 8);
        assert_eq!(iteration_bound_adaptive(0.5, 1.0, 1.0).unwrap(), 2);
    }

    #[test]
    fn partial_bound_examples() {
        assert_eq!(
            iteration_bound_partial(std::f64::consts::SQRT_2, 0.25, 0.1).unwrap(),
            100
        );
        assert_eq!(iteration_bound_partial(1.0, 1.0, 1.0).unwrap(), 2);
        assert_eq!(iteration_bound_partial(0.5, 1.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn bounds_reject_nonpositive_inputs() {
        assert!(iteration_bound_partial(0.0, 1.0, 1.0).is_err());
        assert!(iteration_bound_partial(1.0, -1.0, 1.0).is_err());
        assert!(iteration_bound_adaptive(1.0, 1.0, 0.0).is_err());
        assert!(iteration_bound_adaptive(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn phi_examples() {
        let p = phi_inverse(1.0, 2.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(p, 2f64.sqrt() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(tau(p, 2.0, 2.0, 1.0), 1.0, max_relative = 1e-14);

        let p = phi_inverse(1.0, 0.5, 2.0, 2.0).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(tau(0.5, 0.5, 2.0, 2.0), 1.0);
        let a_inv = ((0.25f64 + 4.0).sqrt() - 0.5) / 2.0;
        assert!((a_inv - 0.7808).abs() < 1e-4 && a_inv > p);
    }

    #[test]
    fn phi_small_eps_slope() {
        for (g, l, m) in [(2.0, 3.0, 1.0), (0.5, 2.0, 2.0), (1.0, 0.0, 1.0)] {
            let e = 1e-9;
            let slope = phi_inverse(e, g, l, m).unwrap() / e;
            assert_relative_eq!(slope, 1.0 / f64::max(g, m), max_relative = 1e-6);
        }
    }

    #[test]
    fn phi_degenerate_and_edge_cases() {
        assert!(matches!(
            phi_inverse(1.0, 0.0, 0.0, 0.0),
            Err(MdError::Degenerate(_))
        ));
        assert!(phi_inverse(0.0, 1.0, 1.0, 1.0).is_err());
        // Only the constraint branch is finite.
        assert_eq!(phi_inverse(2.0, 0.0, 0.0, 4.0).unwrap(), 0.5);
        // L = 0 reduces the objective branch to ε/G.
        assert_eq!(phi_inverse(1.0, 4.0, 0.0, 1.0).unwrap(), 0.25);
    }

    #[test]
    fn robust_ceil_behaviour() {
        assert_eq!(robust_ceil(100.00000000000001), 100.0);
        assert_eq!(robust_ceil(99.99999999999999), 100.0);
        assert_eq!(robust_ceil(0.5), 1.0);
        assert_eq!(robust_ceil(7.97), 8.0);
    }
}
