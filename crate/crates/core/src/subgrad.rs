//! Subgradient methods with Polyak-type steps for problems with a sharp
//! minimum, and their rate certificates.
//!
//! Row `k` of a trace describes the iterate `x_k`: its value, subgradient
//! norm, squared distance to the solution set, the step taken from it, and
//! the bounds on `dist2(x_k)` implied by the rows before it.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::problem::{ProblemError, ProblemSpec, SharpnessSpec, SolverConfig, ABS_TOL};
use crate::trace::{StepData, Trace, TraceError, TraceRecord};
use crate::vector::{dot, norm2, Vector};

/// Absolute slack allowed when checking distance bounds along a trace.
pub const CERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubgradError {
    #[error("f(x) = {value} is below the declared optimal value {optimal}")]
    InconsistentOptimalValue { value: f64, optimal: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("inexact mode needs 2 M^2 > alpha^2, got M = {step_constant}, alpha = {alpha}")]
    InexactPrecondition { step_constant: f64, alpha: f64 },
    #[error("degenerate contraction: M <= alpha, so {iterations} step suffices")]
    DegenerateContraction { iterations: u64 },
    #[error("zero subgradient at a point that is not a minimizer")]
    ZeroSubgradient,
    #[error("factor {factor} at row {k} is negative: the subgradient norm is below alpha beta")]
    NegativeFactor { k: usize, factor: f64 },
    #[error("trace row {0} lacks the subgradient norm or distance")]
    IncompleteTrace(usize),
    #[error("no step constant: declare M, a Lipschitz constant or a Hölder constant of f")]
    NoStepConstant,
    #[error("exponent must lie in [0, 1), got {0}")]
    BadExponent(f64),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    /// `f(x) - f*` or `dist(x, X*)` fell below the exit tolerance.
    Converged,
    /// A zero step left the iterate unchanged.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradRun {
    pub x: Vector,
    pub f_x: f64,
    pub trace: Trace,
    pub exit: ExitStatus,
    /// Steps taken.
    pub iterations: usize,
}

/// `x_{k+1} = Pr_Q(x - h g)` with `h = beta (f - f*) / ||g||^2`; a zero
/// subgradient means `x` is optimal and yields `(x, 0)`.
pub fn polyak_step(problem: &ProblemSpec, x: &Vector, beta: f64, f_star: f64) -> Result<(Vector, f64), SubgradError> {
    let (f, g) = problem.objective.eval(x);
    polyak_from(problem, x, f, &g, beta, f_star)
}

fn polyak_from(
    problem: &ProblemSpec,
    x: &Vector,
    f: f64,
    g: &Vector,
    beta: f64,
    f_star: f64,
) -> Result<(Vector, f64), SubgradError> {
    if f < f_star - ABS_TOL * f_star.abs().max(1.0) {
        return Err(SubgradError::InconsistentOptimalValue {
            value: f,
            optimal: f_star,
        });
    }
    let g2 = dot(g, g).expect("oracle returns a subgradient of matching dimension");
    if g2 == 0.0 {
        return Ok((x.clone(), 0.0));
    }
    let h = (beta * (f - f_star) / g2).max(0.0);
    let next = geometry::project(&problem.feasible_set, &x.add_scaled(-h, g))?;
    Ok((next, h))
}

/// `x_{k+1} = Pr_Q(x - h g)` with `h = (f - target) / (M ||g||)`, clamped at
/// zero when `f(x)` is already below the target.
pub fn normalized_step(
    problem: &ProblemSpec,
    x: &Vector,
    step_constant: f64,
    target: f64,
) -> Result<(Vector, f64), SubgradError> {
    let (f, g) = problem.objective.eval(x);
    normalized_from(problem, x, f, &g, step_constant, target)
}

fn normalized_from(
    problem: &ProblemSpec,
    x: &Vector,
    f: f64,
    g: &Vector,
    step_constant: f64,
    target: f64,
) -> Result<(Vector, f64), SubgradError> {
    if !(step_constant > 0.0) {
        return Err(SubgradError::NonPositive {
            name: "M",
            value: step_constant,
        });
    }
    let gn = norm2(g);
    if gn == 0.0 || f <= target {
        return Ok((x.clone(), 0.0));
    }
    let h = (f - target) / (step_constant * gn);
    let next = geometry::project(&problem.feasible_set, &x.add_scaled(-h, g))?;
    Ok((next, h))
}

/// `M = max(M_nu, M_nu^(2/(1+nu)) / 2)`, a valid step constant for the
/// normalized method when `f` is `nu`-Hölder with constant `M_nu`.
pub fn m_of_zero(holder_constant: f64, nu: f64) -> f64 {
    holder_constant.max(holder_constant.powf(2.0 / (1.0 + nu)) / 2.0)
}

/// `(M_nu / alpha)^(1/(1-nu))`: every point closer than this to the solution
/// set is where the sharp and Hölder bounds are compatible.
pub fn localization_radius(holder_constant: f64, alpha: f64, nu: f64) -> Result<f64, SubgradError> {
    if !(0.0..1.0).contains(&nu) {
        return Err(SubgradError::BadExponent(nu));
    }
    for (name, value) in [("M_nu", holder_constant), ("alpha", alpha)] {
        if !(value > 0.0) {
            return Err(SubgradError::NonPositive { name, value });
        }
    }
    Ok((holder_constant / alpha).powf(1.0 / (1.0 - nu)))
}

/// `<g / ||g||, x - x*>`, zero at `x = x*`.
pub fn v_f(x: &Vector, x_star: &Vector, subgradient: &Vector) -> Result<f64, SubgradError> {
    if x == x_star {
        return Ok(0.0);
    }
    let gn = norm2(subgradient);
    if gn == 0.0 {
        return Err(SubgradError::ZeroSubgradient);
    }
    Ok(dot(subgradient, &x.sub(x_star)).map_err(GeometryError::from)? / gn)
}

/// Iterations after which `f(x_k) <= (1 + gamma) f*` is guaranteed:
/// `ceil(2 (ln 2M - ln(gamma gamma0)) / (ln M^2 - ln(M^2 - alpha^2)) - 1)`,
/// floored at 0.
pub fn iterations_for_relative(m: f64, alpha: f64, gamma: f64, gamma0: f64) -> Result<u64, SubgradError> {
    for (name, value) in [("M", m), ("alpha", alpha), ("gamma", gamma), ("gamma0", gamma0)] {
        if !(value > 0.0) {
            return Err(SubgradError::NonPositive { name, value });
        }
    }
    if m <= alpha {
        return Err(SubgradError::DegenerateContraction { iterations: 1 });
    }
    let numerator = (2.0 * m).ln() - (gamma * gamma0).ln();
    if numerator <= 0.0 {
        return Ok(0);
    }
    let denominator = (m * m).ln() - (m * m - alpha * alpha).ln();
    let k = 2.0 * numerator / denominator - 1.0;
    Ok(k.ceil().max(0.0) as u64)
}

/// Step constant for the normalized method: the configured value, else the
/// Lipschitz constant, else [`m_of_zero`] of the function's Hölder constant.
pub fn resolve_step_constant(problem: &ProblemSpec, config: &SolverConfig) -> Result<f64, SubgradError> {
    if let Some(m) = config.step_constant {
        return Ok(m);
    }
    if let Some(m) = problem.constants.lipschitz {
        return Ok(m);
    }
    problem
        .constants
        .function_holder
        .map(|h| m_of_zero(h.constant, h.exponent))
        .ok_or(SubgradError::NoStepConstant)
}

fn exit_reached(f: f64, f_star: f64, dist2: Option<f64>) -> bool {
    f - f_star <= 1e-12 * f_star.abs().max(1.0) || dist2.is_some_and(|d| d <= 1e-24)
}

/// Which rate bounds a run reports, as functions of `k` and `dist2(x_0)`.
enum Rates {
    Polyak {
        alpha_beta: Option<f64>,
        lipschitz: Option<f64>,
    },
    Normalized {
        alpha: Option<f64>,
        step_constant: f64,
    },
    Inexact {
        alpha: f64,
        step_constant: f64,
        inexactness: f64,
    },
}

struct Bounds {
    factor: Option<f64>,
    product: Option<f64>,
    geom: Option<f64>,
    inexact: Option<f64>,
}

impl Rates {
    /// Bounds on `dist2(x_k)` plus the factor of the step from `x_k`.
    fn at(&self, k: usize, dist0: Option<f64>, product: Option<f64>, grad_norm: f64) -> Bounds {
        let pow = |base: f64| dist0.map(|d| base.powi(k as i32) * d);
        match *self {
            Rates::Polyak { alpha_beta, lipschitz } => Bounds {
                factor: alpha_beta
                    .filter(|_| grad_norm > 0.0)
                    .map(|ab| 1.0 - ab * ab / (grad_norm * grad_norm)),
                product,
                geom: alpha_beta
                    .zip(lipschitz)
                    .and_then(|(ab, m)| pow(1.0 - ab * ab / (m * m))),
                inexact: None,
            },
            Rates::Normalized { alpha, step_constant } => {
                let factor = alpha.map(|a| 1.0 - a * a / (step_constant * step_constant));
                Bounds {
                    factor,
                    product: None,
                    geom: factor.and_then(pow),
                    inexact: None,
                }
            }
            Rates::Inexact {
                alpha,
                step_constant,
                inexactness,
            } => {
                let factor = 1.0 - alpha * alpha / (2.0 * step_constant * step_constant);
                Bounds {
                    factor: Some(factor),
                    product: None,
                    geom: None,
                    inexact: pow(factor).map(|b| b + 2.0 * inexactness * inexactness / (alpha * alpha)),
                }
            }
        }
    }
}

enum Method {
    Polyak { beta: f64 },
    Normalized { step_constant: f64, target: f64 },
}

fn iterate(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    x0: Vector,
    config: &SolverConfig,
    method: Method,
    rates: Rates,
) -> Result<SubgradRun, SubgradError> {
    let started = Instant::now();
    let f_star = problem.optimal_value()?;
    let mut x = geometry::project(&problem.feasible_set, &x0)?;
    let dist0 = sharpness.dist2(&x)?;
    let mut product = dist0;
    let mut trace = Trace::new();
    let mut calls = 0u64;
    let mut k = 0usize;
    loop {
        let (f, g) = problem.objective.eval(&x);
        calls += 1;
        let dist2 = sharpness.dist2(&x)?;
        let gn = norm2(&g);
        let bounds = rates.at(k, dist0, product, gn);
        let done = exit_reached(f, f_star, dist2);
        let (next, h) = if done || k >= config.max_iterations {
            (x.clone(), 0.0)
        } else {
            match method {
                Method::Polyak { beta } => polyak_from(problem, &x, f, &g, beta, f_star)?,
                Method::Normalized { step_constant, target } => {
                    normalized_from(problem, &x, f, &g, step_constant, target)?
                }
            }
        };
        let stalled = !done && h == 0.0 && next == x;
        let bound = [bounds.geom, bounds.product, bounds.inexact]
            .into_iter()
            .flatten()
            .reduce(f64::min);
        trace.push(TraceRecord {
            k,
            f_x: f,
            grad_norm: Some(gn),
            dist2,
            bound,
            residual: bound.zip(dist2).map(|(b, d)| b - d),
            oracle_calls: calls,
            elapsed_s: started.elapsed().as_secs_f64(),
            step: StepData::Subgradient {
                step: h,
                factor: bounds.factor,
                product_bound: bounds.product,
                geom_bound: bounds.geom,
                inexact_bound: bounds.inexact,
            },
        })?;
        let exit = if done {
            Some(ExitStatus::Converged)
        } else if k >= config.max_iterations {
            Some(ExitStatus::MaxIterations)
        } else if stalled {
            Some(ExitStatus::Stalled)
        } else {
            None
        };
        if let Some(exit) = exit {
            return Ok(SubgradRun {
                x,
                f_x: f,
                trace,
                exit,
                iterations: k,
            });
        }
        if let Rates::Polyak { .. } = rates {
            product = product.zip(bounds.factor).map(|(p, q)| p * q);
        }
        x = next;
        k += 1;
    }
}

/// Polyak-step method for weakly `beta`-quasiconvex problems with known
/// optimal value. Reports the running product bound when the sharp modulus
/// is declared, and its constant-factor relaxation when a Lipschitz constant
/// is too.
pub fn solve_polyak(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    x0: Vector,
    config: &SolverConfig,
) -> Result<SubgradRun, SubgradError> {
    config.validate()?;
    sharpness.validate()?;
    let beta = sharpness.weak_quasiconvexity;
    let rates = Rates::Polyak {
        alpha_beta: sharpness.sharp_modulus.map(|a| a * beta),
        lipschitz: problem.constants.lipschitz,
    };
    iterate(problem, sharpness, x0, config, Method::Polyak { beta }, rates)
}

/// Normalized subgradient method with step constant `M` and the exact
/// optimal value as target.
pub fn solve_normalized(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    step_constant: f64,
    x0: Vector,
    config: &SolverConfig,
) -> Result<SubgradRun, SubgradError> {
    config.validate()?;
    sharpness.validate()?;
    if !(step_constant > 0.0) {
        return Err(SubgradError::NonPositive {
            name: "M",
            value: step_constant,
        });
    }
    let target = problem.optimal_value()?;
    let rates = Rates::Normalized {
        alpha: sharpness.sharp_modulus,
        step_constant,
    };
    iterate(
        problem,
        sharpness,
        x0,
        config,
        Method::Normalized { step_constant, target },
        rates,
    )
}

/// Normalized method aimed at `f_bar = config.target_value` (default
/// `f* + Delta`) for a minimum that is sharp only up to `Delta`. Requires
/// `2 M^2 > alpha^2`.
pub fn solve_normalized_inexact(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    step_constant: f64,
    x0: Vector,
    config: &SolverConfig,
) -> Result<SubgradRun, SubgradError> {
    config.validate()?;
    sharpness.validate()?;
    if !(step_constant > 0.0) {
        return Err(SubgradError::NonPositive {
            name: "M",
            value: step_constant,
        });
    }
    let alpha = sharpness.sharp_modulus()?;
    if 2.0 * step_constant * step_constant <= alpha * alpha {
        return Err(SubgradError::InexactPrecondition { step_constant, alpha });
    }
    let inexactness = config.inexactness;
    let target = match config.target_value {
        Some(t) => t,
        None => problem.optimal_value()? + inexactness,
    };
    let rates = Rates::Inexact {
        alpha,
        step_constant,
        inexactness,
    };
    iterate(
        problem,
        sharpness,
        x0,
        config,
        Method::Normalized { step_constant, target },
        rates,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductCertificate {
    /// Product bound on `dist2` at the last row.
    pub bound: f64,
    pub holds: bool,
}

/// Recomputes `prod_{i<k} (1 - alpha^2 beta^2 / ||g_i||^2) dist2(x_0)` from a
/// trace and checks it against the observed `dist2(x_k)` at every row.
pub fn product_certificate(trace: &Trace, alpha: f64, beta: f64) -> Result<ProductCertificate, SubgradError> {
    let mut bound = None;
    let mut last = 0.0;
    let mut holds = true;
    let ab2 = (alpha * beta).powi(2);
    for r in trace.records() {
        let (Some(gn), Some(d)) = (r.grad_norm, r.dist2) else {
            return Err(SubgradError::IncompleteTrace(r.k));
        };
        let current = *bound.get_or_insert(d);
        last = current;
        if d > current + CERT_TOL {
            holds = false;
        }
        let moved = matches!(r.step, StepData::Subgradient { step, .. } if step > 0.0);
        if moved {
            let factor = 1.0 - ab2 / (gn * gn);
            if factor < 0.0 {
                return Err(SubgradError::NegativeFactor { k: r.k, factor });
            }
            bound = Some(current * factor);
        }
    }
    Ok(ProductCertificate { bound: last, holds })
}
