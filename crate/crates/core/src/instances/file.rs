//! JSON instance files.
//!
//! Reals are written as decimal strings with 17 significant digits
//! (`{:.16e}`), which round-trips every finite `f64` exactly. Matrices are
//! stored dense, as arrays of rows.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Constants, KnownSolution, ProblemInstance};
use crate::error::{MdError, Result};
use crate::geometry::{FeasibleSet, Point, ProxSetup};
use crate::oracles::{ConvexFunction, MaxOfQuadratics, PiecewiseMaxAffine, QuadraticPiece};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:.16e}", self.0))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a finite real encoded as a decimal string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| E::custom(format!("`{v}` is not a real number")))?;
                if !x.is_finite() {
                    return Err(E::custom(format!("`{v}` is not finite")));
                }
                Ok(Real(x))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
        }

        d.deserialize_any(RealVisitor)
    }
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

fn unreal(v: Vec<Real>) -> Vec<f64> {
    v.into_iter().map(|r| r.0).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u32,
    setup: SetupDto,
    objective: FunctionDto,
    constraint: FunctionDto,
    constants: ConstantsDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solution: Option<SolutionDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum SetupDto {
    EuclideanBox {
        lower: Vec<Real>,
        upper: Vec<Real>,
        center: Vec<Real>,
    },
    EuclideanBall {
        ball_center: Vec<Real>,
        radius: Real,
        center: Vec<Real>,
    },
    EntropySimplex {
        dim: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum FunctionDto {
    MaxOfQuadratics {
        #[serde(rename = "A")]
        a: Vec<Vec<Vec<Real>>>,
        b: Vec<Vec<Real>>,
        alpha: Vec<Real>,
    },
    PiecewiseMaxAffine {
        #[serde(rename = "C")]
        c: Vec<Vec<Real>>,
        d: Vec<Real>,
    },
    Regularized {
        mu: Real,
        anchor: Vec<Real>,
        base: Box<FunctionDto>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsDto {
    #[serde(rename = "Mg")]
    m_g: Real,
    #[serde(rename = "L")]
    l: Real,
    mu: Real,
    theta0_sq: Real,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDto {
    x: Vec<Real>,
    f: Real,
    grad_norm: Real,
}

impl SetupDto {
    fn from_setup(s: &ProxSetup) -> Self {
        match s.set() {
            FeasibleSet::Box { lower, upper } => SetupDto::EuclideanBox {
                lower: reals(lower),
                upper: reals(upper),
                center: reals(s.center()),
            },
            FeasibleSet::Ball { center, radius } => SetupDto::EuclideanBall {
                ball_center: reals(center),
                radius: Real(*radius),
                center: reals(s.center()),
            },
            FeasibleSet::Simplex { dim } => SetupDto::EntropySimplex { dim: *dim },
        }
    }

    fn into_setup(self) -> Result<ProxSetup> {
        match self {
            SetupDto::EuclideanBox {
                lower,
                upper,
                center,
            } => ProxSetup::euclidean_box(unreal(lower), unreal(upper), Some(unreal(center))),
            SetupDto::EuclideanBall {
                ball_center,
                radius,
                center,
            } => ProxSetup::euclidean_ball(unreal(ball_center), radius.0, Some(unreal(center))),
            SetupDto::EntropySimplex { dim } => ProxSetup::entropy_simplex(dim),
        }
    }
}

impl FunctionDto {
    fn from_function(f: &ConvexFunction) -> Self {
        match f {
            ConvexFunction::MaxOfQuadratics(q) => {
                let n = q.pieces()[0].b.len();
                FunctionDto::MaxOfQuadratics {
                    a: q.pieces()
                        .iter()
                        .map(|p| p.a.chunks(n).map(reals).collect())
                        .collect(),
                    b: q.pieces().iter().map(|p| reals(&p.b)).collect(),
                    alpha: q.pieces().iter().map(|p| Real(p.alpha)).collect(),
                }
            }
            ConvexFunction::PiecewiseMaxAffine(a) => FunctionDto::PiecewiseMaxAffine {
                c: a.rows().iter().map(|r| reals(r)).collect(),
                d: reals(a.offsets()),
            },
            ConvexFunction::Regularized(r) => FunctionDto::Regularized {
                mu: Real(r.mu),
                anchor: reals(&r.anchor),
                base: Box::new(FunctionDto::from_function(&r.base)),
            },
        }
    }

    fn into_function(self, role: &str) -> Result<ConvexFunction> {
        match self {
            FunctionDto::MaxOfQuadratics { a, b, alpha } => {
                if a.is_empty() || a.len() != b.len() || a.len() != alpha.len() {
                    return Err(MdError::Validation(format!(
                        "{role}: {} matrices, {} vectors and {} offsets",
                        a.len(),
                        b.len(),
                        alpha.len()
                    )));
                }
                let n = b[0].len();
                let mut pieces = Vec::with_capacity(a.len());
                for (i, ((rows, b), alpha)) in a.into_iter().zip(b).zip(alpha).enumerate() {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(MdError::Validation(format!(
                            "{role} piece {i}: matrix is not {n}×{n}"
                        )));
                    }
                    pieces.push(QuadraticPiece {
                        a: rows.into_iter().flat_map(unreal).collect(),
                        b: unreal(b),
                        alpha: alpha.0,
                    });
                }
                MaxOfQuadratics::new(n, pieces)
                    .map(ConvexFunction::MaxOfQuadratics)
                    .map_err(|e| prefix(e, role))
            }
            FunctionDto::PiecewiseMaxAffine { c, d } => {
                PiecewiseMaxAffine::new(c.into_iter().map(unreal).collect(), unreal(d))
                    .map(ConvexFunction::PiecewiseMaxAffine)
                    .map_err(|e| prefix(e, role))
            }
            FunctionDto::Regularized { mu, anchor, base } => {
                let base = base.into_function(role)?;
                ConvexFunction::regularized(base, mu.0, unreal(anchor)).map_err(|e| prefix(e, role))
            }
        }
    }
}

fn prefix(e: MdError, role: &str) -> MdError {
    match e {
        MdError::Validation(m) => MdError::Validation(format!("{role}: {m}")),
        other => other,
    }
}

fn to_file(inst: &ProblemInstance) -> InstanceFile {
    let c = inst.constants();
    InstanceFile {
        version: FORMAT_VERSION,
        setup: SetupDto::from_setup(inst.setup()),
        objective: FunctionDto::from_function(inst.objective()),
        constraint: FunctionDto::from_function(inst.constraint()),
        constants: ConstantsDto {
            m_g: Real(c.m_g),
            l: Real(c.l),
            mu: Real(c.mu),
            theta0_sq: Real(c.theta0_sq),
        },
        solution: inst.known_solution().map(|s| SolutionDto {
            x: reals(&s.x),
            f: Real(s.f),
            grad_norm: Real(s.grad_norm),
        }),
    }
}

fn from_file(file: InstanceFile) -> Result<ProblemInstance> {
    if file.version != FORMAT_VERSION {
        return Err(MdError::Validation(format!(
            "unsupported instance format version {} (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    let setup = file.setup.into_setup()?;
    let objective = file.objective.into_function("objective")?;
    let constraint = file.constraint.into_function("constraint")?;
    let constants = Constants {
        m_g: file.constants.m_g.0,
        l: file.constants.l.0,
        mu: file.constants.mu.0,
        theta0_sq: file.constants.theta0_sq.0,
    };
    let solution = file
        .solution
        .map(|s| -> Result<KnownSolution> {
            Ok(KnownSolution {
                x: Point::new(unreal(s.x))?,
                f: s.f.0,
                grad_norm: s.grad_norm.0,
            })
        })
        .transpose()?;
    ProblemInstance::new(setup, objective, constraint, constants, solution)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(inst: &ProblemInstance) -> String {
    let mut s = serde_json::to_string_pretty(&to_file(inst)).expect("instance serializes");
    s.push('\n');
    s
}

pub fn from_json_str(text: &str) -> Result<ProblemInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| MdError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_file(file)
}

pub fn save_instance(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(inst))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path)?;
    from_json_str(&text)
}
