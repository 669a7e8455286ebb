//! Mirror Descent for convex minimization with a functional constraint,
//! `min f(x)` subject to `g(x) ≤ 0`, `x ∈ X`.
//!
//! * [`geometry`]: proximal setups (box, ball, simplex) and the mirror step.
//! * [`oracles`]: first-order oracles for max-of-quadratics and piecewise
//!   affine functions.
//! * [`instances`]: generators, analytic fixtures and the JSON file format.
//! * [`solvers`]: the adaptive, partial-adaptive and restarted methods.
//! * [`reference`]: an independent solver and bound checkers.
//! * [`cli`]: the `mdsolve` front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod oracles;
pub mod reference;
pub mod solvers;
pub mod vector;

pub use error::{MdError, Result};
pub use geometry::{Point, ProxSetup};
pub use instances::{make_known_solution_instance, FixtureKind, ProblemInstance};
