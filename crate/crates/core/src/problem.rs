//! Problem descriptions shared by every solver.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError, SetSpec};
use crate::vector::Vector;

/// Default absolute tolerance when asserting inequalities.
pub const ABS_TOL: f64 = 1e-9;
/// Default relative tolerance when asserting inequalities.
pub const REL_TOL: f64 = 1e-7;

/// `lhs <= rhs` up to the default absolute and relative tolerances.
pub fn approx_le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + ABS_TOL + REL_TOL * rhs.abs()
}

/// First-order oracle: objective value and one (Clarke) subgradient.
///
/// Implementations must be re-entrant; solvers may share one oracle across
/// threads.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Vector) -> (f64, Vector);

    fn value(&self, x: &Vector) -> f64 {
        self.eval(x).0
    }

    /// Whether the objective is differentiable at `x`. Finite-difference
    /// checks are only meaningful where this holds.
    fn is_smooth_at(&self, _x: &Vector) -> bool {
        true
    }
}

/// An [`Objective`] backed by a closure.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> (f64, Vector) {
        let (value, grad) = (self.f)(x.as_slice());
        (value, Vector::from_raw(grad))
    }
}

/// A Hölder constant together with its exponent in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holder {
    pub exponent: f64,
    pub constant: f64,
}

impl Holder {
    pub fn new(exponent: f64, constant: f64) -> Result<Self, ProblemError> {
        if !(0.0..=1.0).contains(&exponent) {
            return Err(ProblemError::InvalidConstant(format!(
                "Hölder exponent must lie in [0, 1], got {exponent}"
            )));
        }
        positive("Hölder constant", constant)?;
        Ok(Self { exponent, constant })
    }
}

/// Analytically known regularity constants. `None` means unknown.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// `||g(x) - g(y)|| <= L ||x - y||^nu` for subgradients `g` on the feasible set.
    pub gradient_holder: Option<Holder>,
    /// `|f(x) - f(y)| <= M ||x - y||^nu` on the feasible set.
    pub function_holder: Option<Holder>,
    pub lipschitz: Option<f64>,
    /// `gamma0` with `f(x) >= gamma0 ||x||` on the feasible set.
    pub homogeneity_floor: Option<f64>,
    pub optimal_value: Option<f64>,
}

/// A minimization problem `min f(x)` over a closed convex set.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub objective: Arc<dyn Objective>,
    pub feasible_set: SetSpec,
    pub constants: Constants,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.objective.dim())
            .field("feasible_set", &self.feasible_set.tag())
            .field("constants", &self.constants)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        feasible_set: SetSpec,
        constants: Constants,
    ) -> Result<Self, ProblemError> {
        if objective.dim() != feasible_set.dim() {
            return Err(ProblemError::InvalidConstant(format!(
                "objective dimension {} does not match feasible set dimension {}",
                objective.dim(),
                feasible_set.dim()
            )));
        }
        if let Some(l) = constants.lipschitz {
            positive("Lipschitz constant", l)?;
        }
        if let Some(g) = constants.homogeneity_floor {
            positive("homogeneity floor", g)?;
        }
        if let Some(h) = constants.gradient_holder {
            Holder::new(h.exponent, h.constant)?;
        }
        if let Some(h) = constants.function_holder {
            Holder::new(h.exponent, h.constant)?;
        }
        if let Some(f) = constants.optimal_value {
            if !f.is_finite() {
                return Err(ProblemError::InvalidConstant(format!(
                    "optimal value must be finite, got {f}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            objective,
            feasible_set,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn optimal_value(&self) -> Result<f64, ProblemError> {
        self.constants
            .optimal_value
            .ok_or(ProblemError::Missing("optimal value"))
    }
}

/// Where the minimizers are, for distance certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolutionSet {
    Points { points: Vec<Vector> },
    Region { set: SetSpec },
}

impl SolutionSet {
    pub fn point(x: Vector) -> Self {
        SolutionSet::Points { points: vec![x] }
    }

    /// Squared distance from `x` to the nearest minimizer.
    pub fn dist2(&self, x: &Vector) -> Result<f64, GeometryError> {
        match self {
            SolutionSet::Points { points } => Ok(points.iter().map(|p| p.dist2(x)).fold(f64::INFINITY, f64::min)),
            SolutionSet::Region { set } => {
                let d = geometry::distance(set, x)?;
                Ok(d * d)
            }
        }
    }

    /// The nearest minimizer to `x`.
    pub fn nearest(&self, x: &Vector) -> Result<Vector, GeometryError> {
        match self {
            SolutionSet::Points { points } => Ok(points
                .iter()
                .min_by(|a, b| a.dist2(x).total_cmp(&b.dist2(x)))
                .cloned()
                .expect("solution set has at least one point")),
            SolutionSet::Region { set } => geometry::project(set, x),
        }
    }
}

/// Growth and (weak) quasiconvexity data around the minimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessSpec {
    /// `alpha` in `f(x) - f* >= alpha dist(x, X*)`.
    pub sharp_modulus: Option<f64>,
    /// `beta` in `(0, 1]`; convex functions have `beta = 1`.
    pub weak_quasiconvexity: f64,
    /// `p >= 1` in `f(x) - f* >= mu dist(x, X*)^p`.
    pub growth_order: f64,
    pub growth_modulus: Option<f64>,
    pub solution_set: Option<SolutionSet>,
}

impl SharpnessSpec {
    /// A sharp minimum of modulus `alpha` for a convex function.
    pub fn sharp(alpha: f64, solution_set: Option<SolutionSet>) -> Self {
        Self {
            sharp_modulus: Some(alpha),
            weak_quasiconvexity: 1.0,
            growth_order: 1.0,
            growth_modulus: Some(alpha),
            solution_set,
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if let Some(a) = self.sharp_modulus {
            positive("sharp modulus", a)?;
        }
        let beta = self.weak_quasiconvexity;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(ProblemError::InvalidConstant(format!(
                "weak quasiconvexity parameter must lie in (0, 1], got {beta}"
            )));
        }
        if !(self.growth_order >= 1.0 && self.growth_order.is_finite()) {
            return Err(ProblemError::InvalidConstant(format!(
                "growth order must be at least 1, got {}",
                self.growth_order
            )));
        }
        if let Some(mu) = self.growth_modulus {
            positive("growth modulus", mu)?;
        }
        Ok(())
    }

    pub fn sharp_modulus(&self) -> Result<f64, ProblemError> {
        self.sharp_modulus.ok_or(ProblemError::Missing("sharp modulus"))
    }

    pub fn dist2(&self, x: &Vector) -> Result<Option<f64>, GeometryError> {
        self.solution_set.as_ref().map(|s| s.dist2(x)).transpose()
    }
}

/// Parameters common to all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Target relative accuracy `gamma`.
    pub relative_accuracy: f64,
    /// Overrides the default distance estimate `R`.
    pub radius: Option<f64>,
    /// Initial local constant `L0`.
    pub initial_constant: f64,
    pub max_iterations: usize,
    pub max_backtracks: usize,
    /// Inexactness `Delta` of the sharp-minimum condition.
    pub inexactness: f64,
    /// Target value `f_bar >= f*` used by the inexact normalized method.
    pub target_value: Option<f64>,
    /// Step constant `M` of the normalized method.
    pub step_constant: Option<f64>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            relative_accuracy: 0.1,
            radius: None,
            initial_constant: 1.0,
            max_iterations: 10_000,
            max_backtracks: 60,
            inexactness: 0.0,
            target_value: None,
            step_constant: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ProblemError> {
        positive("relative_accuracy", self.relative_accuracy)?;
        if let Some(r) = self.radius {
            positive("radius", r)?;
        }
        positive("initial_constant", self.initial_constant)?;
        if self.max_iterations == 0 {
            return Err(ProblemError::InvalidConstant("max_iterations must be positive".into()));
        }
        if self.max_backtracks == 0 {
            return Err(ProblemError::InvalidConstant("max_backtracks must be positive".into()));
        }
        if !(self.inexactness >= 0.0 && self.inexactness.is_finite()) {
            return Err(ProblemError::InvalidConstant(format!(
                "inexactness must be nonnegative, got {}",
                self.inexactness
            )));
        }
        if let Some(m) = self.step_constant {
            positive("step_constant", m)?;
        }
        if let Some(t) = self.target_value {
            if !t.is_finite() {
                return Err(ProblemError::InvalidConstant("target_value must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid constant: {0}")]
    InvalidConstant(String),
    #[error("{0} is required but unknown")]
    Missing(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn positive(what: &str, value: f64) -> Result<(), ProblemError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ProblemError::InvalidConstant(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}
