//! Built-in test problems with analytic oracles and constants.

mod certify;
mod generate;
mod transform;

pub use certify::{
    check_homogeneity_floor, check_lower_bound, check_quasiconvexity, check_sharpness, check_weak_quasiconvexity,
    finite_diff_check, finite_diff_suite, sample_feasible, SampleCheck,
};
pub use generate::{generate_linear_residual, generate_linear_residual_diagonal, LinearResidual};
pub use transform::{sharpen_power, sharpen_sqrt, SharpenedObjective};

use std::f64::consts::FRAC_PI_6;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{self, GeometryError, SetSpec};
use crate::problem::{Constants, Holder, Objective, ProblemError, ProblemSpec, SharpnessSpec, SolutionSet};
use crate::vector::{dot, norm2, Vector, VectorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuiltinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Weight of the second coordinate of [`BuiltinProblem::TiltedL1`]. Together
/// with the unit first weight it gives the Lipschitz constant
/// `sqrt(1 + 3) = 2`.
const TILTED_WEIGHT: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone)]
pub enum BuiltinProblem {
    /// `||x||` over the unit ball centred at `2p` for a unit vector `p`.
    NormShiftedBall { direction: Vector },
    /// `||Ax - b||` with `b = A x*`.
    LinearResidual(LinearResidual),
    /// Euclidean distance to a closed convex set.
    DistanceToSet { target: SetSpec },
    /// `|x_1| (1 - exp(-|x_1|))`, ignoring the other coordinates.
    WeaklyQuasiconvexScalar { n: usize },
    /// `||x - c||^p`.
    PowerNorm { center: Vector, power: f64 },
    /// `|<u1, x>| + sqrt(3) |<u2, x>|` over `{x_1 >= 1}` in the plane, with
    /// `(u1, u2)` the standard basis rotated by `angle`.
    ///
    /// Convex, positively homogeneous, 2-Lipschitz, `f(x) >= ||x||`, and for
    /// `angle` in `[0, pi/6]` it has a sharp minimum of modulus 1 at
    /// `(1, tan(angle))`.
    TiltedL1 { angle: f64 },
}

impl BuiltinProblem {
    /// The standard geometry: `p = (1, ..., 1) / sqrt(n)`.
    pub fn norm_shifted_ball(n: usize) -> Result<Self, BuiltinError> {
        if n == 0 {
            return Err(BuiltinError::InvalidParameter("n must be at least 1".into()));
        }
        Ok(BuiltinProblem::NormShiftedBall {
            direction: Vector::filled(n, 1.0 / (n as f64).sqrt()),
        })
    }

    /// Normalizes `direction` to unit length.
    pub fn norm_shifted_ball_along(direction: Vector) -> Result<Self, BuiltinError> {
        let len = norm2(&direction);
        if len == 0.0 {
            return Err(BuiltinError::InvalidParameter("direction must be nonzero".into()));
        }
        Ok(BuiltinProblem::NormShiftedBall {
            direction: direction.scale(1.0 / len),
        })
    }

    pub fn distance_to_set(target: SetSpec) -> Result<Self, BuiltinError> {
        target.validate()?;
        Ok(BuiltinProblem::DistanceToSet { target })
    }

    pub fn weakly_quasiconvex_scalar(n: usize) -> Result<Self, BuiltinError> {
        if n == 0 {
            return Err(BuiltinError::InvalidParameter("n must be at least 1".into()));
        }
        Ok(BuiltinProblem::WeaklyQuasiconvexScalar { n })
    }

    pub fn power_norm(center: Vector, power: f64) -> Result<Self, BuiltinError> {
        if !(power >= 1.0 && power.is_finite()) {
            return Err(BuiltinError::InvalidParameter(format!(
                "power must be at least 1, got {power}"
            )));
        }
        Ok(BuiltinProblem::PowerNorm { center, power })
    }

    pub fn tilted_l1(angle: f64) -> Result<Self, BuiltinError> {
        if !(0.0..=FRAC_PI_6).contains(&angle) {
            return Err(BuiltinError::InvalidParameter(format!(
                "angle must lie in [0, pi/6], got {angle}"
            )));
        }
        Ok(BuiltinProblem::TiltedL1 { angle })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            BuiltinProblem::NormShiftedBall { .. } => "norm-shifted-ball",
            BuiltinProblem::LinearResidual(_) => "linear-residual",
            BuiltinProblem::DistanceToSet { .. } => "distance-to-set",
            BuiltinProblem::WeaklyQuasiconvexScalar { .. } => "weakly-quasiconvex-scalar",
            BuiltinProblem::PowerNorm { .. } => "power-norm",
            BuiltinProblem::TiltedL1 { .. } => "tilted-l1",
        }
    }

    pub fn feasible_set(&self) -> SetSpec {
        match self {
            BuiltinProblem::NormShiftedBall { direction } => SetSpec::Ball {
                center: direction.scale(2.0),
                radius: 1.0,
            },
            BuiltinProblem::TiltedL1 { .. } => SetSpec::Halfspace {
                normal: Vector::from_raw(vec![-1.0, 0.0]),
                offset: -1.0,
            },
            other => SetSpec::WholeSpace { n: other.dim() },
        }
    }

    pub fn constants(&self) -> Constants {
        let holder = |e, c| {
            Some(Holder {
                exponent: e,
                constant: c,
            })
        };
        match self {
            BuiltinProblem::NormShiftedBall { .. } => Constants {
                // x / ||x|| is 1-Lipschitz on {||x|| >= 1}, which contains the ball.
                gradient_holder: holder(1.0, 1.0),
                function_holder: holder(1.0, 1.0),
                lipschitz: Some(1.0),
                homogeneity_floor: Some(1.0),
                optimal_value: Some(1.0),
            },
            BuiltinProblem::LinearResidual(lr) => Constants {
                gradient_holder: holder(0.0, 2.0 * lr.sigma_max()),
                function_holder: holder(1.0, lr.sigma_max()),
                lipschitz: Some(lr.sigma_max()),
                homogeneity_floor: None,
                optimal_value: Some(0.0),
            },
            BuiltinProblem::DistanceToSet { .. } => Constants {
                gradient_holder: holder(0.0, 2.0),
                function_holder: holder(1.0, 1.0),
                lipschitz: Some(1.0),
                homogeneity_floor: None,
                optimal_value: Some(0.0),
            },
            BuiltinProblem::WeaklyQuasiconvexScalar { .. } => {
                // |f'| peaks at t = 2 with value 1 + e^-2; |f''| peaks at t = 0 with value 2.
                let m = 1.0 + (-2.0f64).exp();
                Constants {
                    gradient_holder: holder(1.0, 2.0),
                    function_holder: holder(1.0, m),
                    lipschitz: Some(m),
                    homogeneity_floor: None,
                    optimal_value: Some(0.0),
                }
            }
            BuiltinProblem::PowerNorm { power, .. } => {
                let lipschitz = (*power == 1.0).then_some(1.0);
                Constants {
                    gradient_holder: if *power == 1.0 { holder(0.0, 2.0) } else { None },
                    function_holder: lipschitz.and_then(|m| holder(1.0, m)),
                    lipschitz,
                    homogeneity_floor: None,
                    optimal_value: Some(0.0),
                }
            }
            BuiltinProblem::TiltedL1 { angle } => Constants {
                // Subgradients are (+-1) u1 + (+-sqrt 3) u2: norm 2, spread at most 4.
                gradient_holder: holder(0.0, 4.0),
                function_holder: holder(1.0, 2.0),
                lipschitz: Some(2.0),
                homogeneity_floor: Some(1.0),
                optimal_value: Some(1.0 / angle.cos()),
            },
        }
    }

    pub fn solution_set(&self) -> SolutionSet {
        match self {
            BuiltinProblem::NormShiftedBall { direction } => SolutionSet::point(direction.clone()),
            BuiltinProblem::LinearResidual(lr) => SolutionSet::point(lr.solution().clone()),
            BuiltinProblem::DistanceToSet { target } => SolutionSet::Region { set: target.clone() },
            BuiltinProblem::WeaklyQuasiconvexScalar { n } => {
                if *n == 1 {
                    SolutionSet::point(Vector::zeros(1))
                } else {
                    // The hyperplane x_1 = 0 as the intersection of two halfspaces.
                    let e1 = Vector::basis(*n, 0);
                    SolutionSet::Region {
                        set: SetSpec::Intersection {
                            first: Box::new(SetSpec::Halfspace {
                                normal: e1.clone(),
                                offset: 0.0,
                            }),
                            second: Box::new(SetSpec::Halfspace {
                                normal: e1.scale(-1.0),
                                offset: 0.0,
                            }),
                        },
                    }
                }
            }
            BuiltinProblem::PowerNorm { center, .. } => SolutionSet::point(center.clone()),
            BuiltinProblem::TiltedL1 { angle } => SolutionSet::point(Vector::from_raw(vec![1.0, angle.tan()])),
        }
    }

    pub fn sharpness(&self) -> SharpnessSpec {
        let solution_set = Some(self.solution_set());
        match self {
            BuiltinProblem::LinearResidual(lr) => SharpnessSpec::sharp(lr.sigma_min(), solution_set),
            BuiltinProblem::DistanceToSet { .. } | BuiltinProblem::TiltedL1 { .. } => {
                SharpnessSpec::sharp(1.0, solution_set)
            }
            BuiltinProblem::PowerNorm { power, .. } => SharpnessSpec {
                sharp_modulus: (*power == 1.0).then_some(1.0),
                weak_quasiconvexity: 1.0,
                growth_order: *power,
                growth_modulus: Some(1.0),
                solution_set,
            },
            // Both grow quadratically near the minimizer, so no sharp modulus.
            BuiltinProblem::NormShiftedBall { .. } | BuiltinProblem::WeaklyQuasiconvexScalar { .. } => SharpnessSpec {
                sharp_modulus: None,
                weak_quasiconvexity: 1.0,
                growth_order: 1.0,
                growth_modulus: None,
                solution_set,
            },
        }
    }

    /// Packages the problem with its feasible set and constants.
    pub fn to_problem(&self) -> ProblemSpec {
        ProblemSpec::new(
            self.tag(),
            Arc::new(self.clone()),
            self.feasible_set(),
            self.constants(),
        )
        .expect("built-in constants are valid")
    }

    fn tilted_axes(angle: f64) -> (Vector, Vector) {
        let (s, c) = angle.sin_cos();
        (Vector::from_raw(vec![c, s]), Vector::from_raw(vec![-s, c]))
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(||d||, d / ||d||)`, with the zero vector as the selection at `d = 0`.
fn norm_and_direction(d: Vector) -> (f64, Vector) {
    let len = norm2(&d);
    if len == 0.0 {
        let n = d.dim();
        (0.0, Vector::zeros(n))
    } else {
        (len, d.scale(1.0 / len))
    }
}

impl Objective for BuiltinProblem {
    fn dim(&self) -> usize {
        match self {
            BuiltinProblem::NormShiftedBall { direction } => direction.dim(),
            BuiltinProblem::LinearResidual(lr) => lr.dim(),
            BuiltinProblem::DistanceToSet { target } => target.dim(),
            BuiltinProblem::WeaklyQuasiconvexScalar { n } => *n,
            BuiltinProblem::PowerNorm { center, .. } => center.dim(),
            BuiltinProblem::TiltedL1 { .. } => 2,
        }
    }

    fn eval(&self, x: &Vector) -> (f64, Vector) {
        match self {
            BuiltinProblem::NormShiftedBall { .. } => norm_and_direction(x.clone()),
            BuiltinProblem::LinearResidual(lr) => lr.eval(x),
            BuiltinProblem::DistanceToSet { target } => {
                let nearest = match geometry::project(target, x) {
                    Ok(p) => p,
                    Err(GeometryError::NotConverged { last_iterate, .. }) => last_iterate,
                    Err(e) => panic!("distance oracle called with bad input: {e}"),
                };
                norm_and_direction(x.sub(&nearest))
            }
            BuiltinProblem::WeaklyQuasiconvexScalar { n } => {
                let t = x[0];
                let a = t.abs();
                let one_minus_exp = -(-a).exp_m1();
                let value = a * one_minus_exp;
                let deriv = sign(t) * (one_minus_exp + a * (-a).exp());
                let mut g = vec![0.0; *n];
                g[0] = deriv;
                (value, Vector::from_raw(g))
            }
            BuiltinProblem::PowerNorm { center, power } => {
                let d = x.sub(center);
                let r = norm2(&d);
                if r == 0.0 {
                    return (0.0, Vector::zeros(d.dim()));
                }
                (r.powf(*power), d.scale(power * r.powf(power - 2.0)))
            }
            BuiltinProblem::TiltedL1 { angle } => {
                let (u1, u2) = Self::tilted_axes(*angle);
                let y1 = dot(&u1, x).expect("dimension checked by caller");
                let y2 = dot(&u2, x).expect("dimension checked by caller");
                let value = y1.abs() + TILTED_WEIGHT * y2.abs();
                let g = u1.scale(sign(y1)).add_scaled(TILTED_WEIGHT * sign(y2), &u2);
                (value, g)
            }
        }
    }

    fn is_smooth_at(&self, x: &Vector) -> bool {
        match self {
            BuiltinProblem::NormShiftedBall { .. } => norm2(x) > 0.0,
            BuiltinProblem::LinearResidual(lr) => lr.eval(x).0 > 0.0,
            BuiltinProblem::DistanceToSet { .. } => self.value(x) > 0.0,
            BuiltinProblem::WeaklyQuasiconvexScalar { .. } => true,
            BuiltinProblem::PowerNorm { center, power } => *power > 1.0 || x.dist(center) > 0.0,
            BuiltinProblem::TiltedL1 { angle } => {
                let (u1, u2) = Self::tilted_axes(*angle);
                dot(&u1, x).is_ok_and(|v| v != 0.0) && dot(&u2, x).is_ok_and(|v| v != 0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(data: &[f64]) -> Vector {
        Vector::from_slice(data).unwrap()
    }

    #[test]
    fn norm_shifted_ball_at_p() {
        let prob = BuiltinProblem::norm_shifted_ball(9).unwrap();
        let p = Vector::filled(9, 1.0 / 3.0);
        let (f, g) = prob.eval(&p);
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-15);
        assert!(g.dist(&p) < 1e-15);
        let x0 = geometry::min_norm_point(&prob.feasible_set()).unwrap();
        assert!(x0.dist(&p) < 1e-15);
    }

    #[test]
    fn scalar_values() {
        let prob = BuiltinProblem::weakly_quasiconvex_scalar(1).unwrap();
        let (f, g) = prob.eval(&v(&[0.0]));
        assert_eq!((f, g[0]), (0.0, 0.0));
        let (f, g) = prob.eval(&v(&[1.0]));
        assert_abs_diff_eq!(f, 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(f, 0.632121, epsilon = 1e-6);
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-15);
        let (f2, g2) = prob.eval(&v(&[-1.0]));
        assert_eq!(f2, f);
        assert_eq!(g2[0], -g[0]);
    }

    #[test]
    fn scalar_lipschitz_constant_is_attained_at_two() {
        let prob = BuiltinProblem::weakly_quasiconvex_scalar(1).unwrap();
        let m = prob.constants().lipschitz.unwrap();
        let (_, g) = prob.eval(&v(&[2.0]));
        assert_abs_diff_eq!(g[0], m, epsilon = 1e-15);
        for i in 0..400 {
            let t = -10.0 + 0.05 * i as f64;
            assert!(prob.eval(&v(&[t])).1[0].abs() <= m + 1e-15);
        }
    }

    #[test]
    fn power_norm_gradient() {
        let prob = BuiltinProblem::power_norm(v(&[1.0, 1.0]), 3.0).unwrap();
        let (f, g) = prob.eval(&v(&[4.0, 5.0]));
        assert_abs_diff_eq!(f, 125.0, epsilon = 1e-12);
        // 3 r (x - c) = 15 (3, 4)
        assert!(g.dist(&v(&[45.0, 60.0])) < 1e-12);
        assert_eq!(prob.eval(&v(&[1.0, 1.0])).0, 0.0);
    }

    #[test]
    fn tilted_l1_constants() {
        let angle = 20f64.to_radians();
        let prob = BuiltinProblem::tilted_l1(angle).unwrap();
        let xstar = v(&[1.0, angle.tan()]);
        let (f, g) = prob.eval(&xstar);
        assert_abs_diff_eq!(f, 1.0 / angle.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(norm2(&g), 1.0, epsilon = 1e-14);
        let (_, g) = prob.eval(&v(&[2.0, -3.0]));
        assert_abs_diff_eq!(norm2(&g), 2.0, epsilon = 1e-14);
        let x0 = geometry::min_norm_point(&prob.feasible_set()).unwrap();
        assert_eq!(x0, v(&[1.0, 0.0]));
        assert!(BuiltinProblem::tilted_l1(0.6).is_err());
    }

    #[test]
    fn distance_to_singleton() {
        let target = SetSpec::ball(v(&[1.0, 2.0]), 1e-300).unwrap();
        let prob = BuiltinProblem::distance_to_set(target).unwrap();
        let (f, g) = prob.eval(&v(&[4.0, 6.0]));
        assert_abs_diff_eq!(f, 5.0, epsilon = 1e-12);
        assert!(g.dist(&v(&[0.6, 0.8])) < 1e-12);
    }

    #[test]
    fn scalar_hyperplane_solution_set() {
        let prob = BuiltinProblem::weakly_quasiconvex_scalar(3).unwrap();
        let d2 = prob.solution_set().dist2(&v(&[-2.0, 5.0, 1.0])).unwrap();
        assert_abs_diff_eq!(d2, 4.0, epsilon = 1e-12);
    }
}
