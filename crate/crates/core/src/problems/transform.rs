//! Power transforms `F = (f - f*)^(1/p)` turning a weak sharp minimum of
//! order `p` into a sharp one.

use std::sync::Arc;

use crate::problem::{Constants, Holder, Objective, ProblemError, ProblemSpec, SharpnessSpec};
use crate::vector::Vector;

/// `(f(x) - f*)^(1/p)` with the chain-rule subgradient
/// `(1/p) (f - f*)^(1/p - 1) g`; the zero vector where `f(x) <= f*`.
pub struct SharpenedObjective {
    inner: Arc<dyn Objective>,
    optimal_value: f64,
    power: f64,
}

impl SharpenedObjective {
    pub fn power(&self) -> f64 {
        self.power
    }
}

impl Objective for SharpenedObjective {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &Vector) -> (f64, Vector) {
        let (f, g) = self.inner.eval(x);
        let gap = f - self.optimal_value;
        if gap <= 0.0 {
            return (0.0, Vector::zeros(g.dim()));
        }
        if self.power == 1.0 {
            return (gap, g);
        }
        let value = gap.powf(1.0 / self.power);
        // value / (p gap) == (1/p) gap^(1/p - 1), without a second powf.
        (value, g.scale(value / (self.power * gap)))
    }

    fn is_smooth_at(&self, x: &Vector) -> bool {
        self.inner.is_smooth_at(x) && self.inner.value(x) > self.optimal_value
    }
}

/// Wraps a problem with weak sharp minimum of order `p` and modulus `mu` into
/// one with a sharp minimum of modulus `mu^(1/p)` and optimal value 0.
pub fn sharpen_power(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    p: f64,
) -> Result<(ProblemSpec, SharpnessSpec), ProblemError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(ProblemError::InvalidConstant(format!(
            "transform power must be at least 1, got {p}"
        )));
    }
    let optimal_value = problem.optimal_value()?;
    if (sharpness.growth_order - p).abs() > 1e-12 {
        return Err(ProblemError::InvalidConstant(format!(
            "growth order {} does not match transform power {p}",
            sharpness.growth_order
        )));
    }
    let mu = sharpness
        .growth_modulus
        .ok_or(ProblemError::Missing("growth modulus"))?;

    let inner = &problem.constants;
    // |a^(1/p) - b^(1/p)| <= |a - b|^(1/p), so nu-Hölder f gives (nu/p)-Hölder F.
    let function_holder = inner
        .function_holder
        .or(inner.lipschitz.map(|m| Holder {
            exponent: 1.0,
            constant: m,
        }))
        .map(|h| Holder {
            exponent: h.exponent / p,
            constant: h.constant.powf(1.0 / p),
        });
    let identity = p == 1.0;
    let constants = Constants {
        gradient_holder: if identity { inner.gradient_holder } else { None },
        function_holder,
        lipschitz: if identity { inner.lipschitz } else { None },
        homogeneity_floor: None,
        optimal_value: Some(0.0),
    };
    let objective = Arc::new(SharpenedObjective {
        inner: Arc::clone(&problem.objective),
        optimal_value,
        power: p,
    });
    let name = if identity {
        format!("{}-shifted", problem.name)
    } else {
        format!("{}-root{p}", problem.name)
    };
    let transformed = ProblemSpec::new(name, objective, problem.feasible_set.clone(), constants)?;
    let alpha = mu.powf(1.0 / p);
    let sharp = SharpnessSpec {
        sharp_modulus: Some(alpha),
        // Only quasiconvexity is known to survive the transform; the
        // normalized method does not use this parameter.
        weak_quasiconvexity: sharpness.weak_quasiconvexity,
        growth_order: 1.0,
        growth_modulus: Some(alpha),
        solution_set: sharpness.solution_set.clone(),
    };
    Ok((transformed, sharp))
}

/// [`sharpen_power`] with `p = 2`, for functions with quadratic growth.
pub fn sharpen_sqrt(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
) -> Result<(ProblemSpec, SharpnessSpec), ProblemError> {
    sharpen_power(problem, sharpness, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SetSpec;
    use crate::problem::FnObjective;
    use crate::problems::BuiltinProblem;
    use approx::assert_abs_diff_eq;

    fn quadratic(scale: f64) -> (ProblemSpec, SharpnessSpec) {
        let f = Arc::new(FnObjective::new(1, move |x: &[f64]| {
            (scale * x[0] * x[0], vec![2.0 * scale * x[0]])
        }));
        let problem = ProblemSpec::new(
            "quadratic",
            f,
            SetSpec::whole_space(1).unwrap(),
            Constants {
                optimal_value: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap();
        let sharp = SharpnessSpec {
            sharp_modulus: None,
            weak_quasiconvexity: 1.0,
            growth_order: 2.0,
            growth_modulus: Some(scale),
            solution_set: None,
        };
        (problem, sharp)
    }

    fn x(t: f64) -> Vector {
        Vector::from_slice(&[t]).unwrap()
    }

    #[test]
    fn sqrt_of_square_is_abs() {
        let (p, s) = quadratic(1.0);
        let (fp, fs) = sharpen_sqrt(&p, &s).unwrap();
        assert_eq!(fs.sharp_modulus, Some(1.0));
        for t in [-3.0, -0.5, 0.25, 2.0] {
            let (v, g) = fp.objective.eval(&x(t));
            assert_abs_diff_eq!(v, f64::abs(t), epsilon = 1e-14);
            assert_abs_diff_eq!(g[0], t.signum(), epsilon = 1e-14);
        }
        let (v, g) = fp.objective.eval(&x(0.0));
        assert_eq!((v, g[0]), (0.0, 0.0));
    }

    #[test]
    fn sqrt_of_scaled_square() {
        let (p, s) = quadratic(2.0);
        let (fp, fs) = sharpen_sqrt(&p, &s).unwrap();
        assert_abs_diff_eq!(fs.sharp_modulus.unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(fp.objective.value(&x(-3.0)), 3.0 * 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn power_norm_roots_are_norms() {
        let c = Vector::zeros(3);
        let y = Vector::from_slice(&[1.0, -2.0, 2.0]).unwrap();
        for power in [2.0, 3.0] {
            let b = BuiltinProblem::power_norm(c.clone(), power).unwrap();
            let (fp, fs) = sharpen_power(&b.to_problem(), &b.sharpness(), power).unwrap();
            assert_eq!(fs.sharp_modulus, Some(1.0));
            let (v, g) = fp.objective.eval(&y);
            assert_abs_diff_eq!(v, 3.0, epsilon = 1e-12);
            assert!(g.dist(&y.scale(1.0 / 3.0)) < 1e-12);
        }
    }

    #[test]
    fn power_one_is_identity() {
        let b = BuiltinProblem::power_norm(Vector::zeros(2), 1.0).unwrap();
        let problem = b.to_problem();
        let (fp, fs) = sharpen_power(&problem, &b.sharpness(), 1.0).unwrap();
        let y = Vector::from_slice(&[0.3, -0.4]).unwrap();
        assert_eq!(fp.objective.eval(&y), problem.objective.eval(&y));
        assert_eq!(fs.sharp_modulus, Some(1.0));
        assert_eq!(fp.constants.lipschitz, Some(1.0));
    }

    #[test]
    fn holder_exponent_is_divided() {
        let b = BuiltinProblem::distance_to_set(SetSpec::ball(Vector::zeros(2), 1.0).unwrap()).unwrap();
        let mut s = b.sharpness();
        s.growth_order = 2.0;
        let (fp, _) = sharpen_power(&b.to_problem(), &s, 2.0).unwrap();
        let h = fp.constants.function_holder.unwrap();
        assert_eq!((h.exponent, h.constant), (0.5, 1.0));
    }

    #[test]
    fn refuses_without_optimal_value_or_matching_order() {
        let (mut p, s) = quadratic(1.0);
        assert!(sharpen_power(&p, &s, 3.0).is_err());
        p.constants.optimal_value = None;
        assert!(matches!(
            sharpen_sqrt(&p, &s),
            Err(ProblemError::Missing("optimal value"))
        ));
    }
}
