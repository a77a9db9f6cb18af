//! Sampled checks of the analytic constants a problem declares.
//!
//! Each check evaluates an inequality `lhs <= rhs` on sample points and keeps
//! the worst slack `rhs - lhs`. Violations beyond the default tolerances fail
//! the check; they are reported as results rather than errors.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::geometry::{self, GeometryError};
use crate::problem::{approx_le, Objective, ProblemError, ProblemSpec, SharpnessSpec};
use crate::vector::{dot, norm2, Vector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCheck {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    /// Smallest observed `rhs - lhs`.
    pub worst_slack: f64,
}

impl SampleCheck {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: true,
            samples: 0,
            worst_slack: f64::INFINITY,
        }
    }

    /// Records `lhs <= rhs` under the default tolerances.
    pub fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        self.worst_slack = self.worst_slack.min(rhs - lhs);
        if !approx_le(lhs, rhs) {
            self.passed = false;
        }
    }

    /// Records `lhs <= rhs + tol`.
    pub fn record_tol(&mut self, lhs: f64, rhs: f64, tol: f64) {
        self.samples += 1;
        self.worst_slack = self.worst_slack.min(rhs - lhs);
        if lhs > rhs + tol {
            self.passed = false;
        }
    }
}

/// `count` feasible points: Gaussian perturbations of `center` with standard
/// deviation `scale`, projected onto the feasible set.
pub fn sample_feasible<R: Rng>(
    problem: &ProblemSpec,
    center: &Vector,
    scale: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vector>, GeometryError> {
    (0..count)
        .map(|_| {
            let z: Vec<f64> = center
                .iter()
                .map(|c| c + scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            geometry::project(&problem.feasible_set, &Vector::from_raw(z))
        })
        .collect()
}

/// `f(x) >= f*`.
pub fn check_lower_bound(problem: &ProblemSpec, points: &[Vector]) -> Result<SampleCheck, ProblemError> {
    let f_star = problem.optimal_value()?;
    let mut check = SampleCheck::new("lower-bound");
    for x in points {
        check.record(f_star, problem.objective.value(x));
    }
    Ok(check)
}

/// `f(x) >= gamma0 ||x||`.
pub fn check_homogeneity_floor(problem: &ProblemSpec, points: &[Vector]) -> Result<SampleCheck, ProblemError> {
    let gamma0 = problem
        .constants
        .homogeneity_floor
        .ok_or(ProblemError::Missing("homogeneity floor"))?;
    let mut check = SampleCheck::new("homogeneity-floor");
    for x in points {
        check.record(gamma0 * norm2(x), problem.objective.value(x));
    }
    Ok(check)
}

/// `f(x) - f* >= alpha dist(x, X*)`.
pub fn check_sharpness(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    points: &[Vector],
) -> Result<SampleCheck, ProblemError> {
    let f_star = problem.optimal_value()?;
    let alpha = sharpness.sharp_modulus()?;
    let solutions = sharpness
        .solution_set
        .as_ref()
        .ok_or(ProblemError::Missing("solution set"))?;
    let mut check = SampleCheck::new("sharp-minimum");
    for x in points {
        let dist = solutions.dist2(x)?.sqrt();
        check.record(alpha * dist, problem.objective.value(x) - f_star);
    }
    Ok(check)
}

/// `f* >= f(x) + (1/beta) <g(x), x* - x>` with `x*` the nearest minimizer.
pub fn check_weak_quasiconvexity(
    problem: &ProblemSpec,
    sharpness: &SharpnessSpec,
    points: &[Vector],
) -> Result<SampleCheck, ProblemError> {
    let f_star = problem.optimal_value()?;
    let beta = sharpness.weak_quasiconvexity;
    let solutions = sharpness
        .solution_set
        .as_ref()
        .ok_or(ProblemError::Missing("solution set"))?;
    let mut check = SampleCheck::new("weak-quasiconvexity");
    for x in points {
        let (f, g) = problem.objective.eval(x);
        let xs = solutions.nearest(x)?;
        let inner = dot(&g, &xs.sub(x)).expect("same dimension");
        check.record(f + inner / beta, f_star);
    }
    Ok(check)
}

/// `F(t x + (1 - t) y) <= max(F(x), F(y))` along consecutive pairs of points
/// at the given interpolation weights.
pub fn check_quasiconvexity(objective: &dyn Objective, points: &[Vector], weights: &[f64]) -> SampleCheck {
    let mut check = SampleCheck::new("quasiconvexity");
    for pair in points.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let top = objective.value(x).max(objective.value(y));
        for &t in weights {
            let z = Vector::combine(t, x, 1.0 - t, y, 1.0);
            check.record(objective.value(&z), top);
        }
    }
    check
}

/// Largest coordinatewise gap between the oracle gradient and the central
/// difference `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_check(objective: &dyn Objective, x: &Vector, h: f64) -> f64 {
    let (_, g) = objective.eval(x);
    let mut probe = x.clone().into_vec();
    let mut worst = 0.0_f64;
    for i in 0..probe.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = objective.value(&Vector::from_raw(probe.clone()));
        probe[i] = orig - h;
        let minus = objective.value(&Vector::from_raw(probe.clone()));
        probe[i] = orig;
        worst = worst.max(((plus - minus) / (2.0 * h) - g[i]).abs());
    }
    worst
}

/// [`finite_diff_check`] over every smooth point among `points`, against an
/// absolute bound.
pub fn finite_diff_suite(objective: &dyn Objective, points: &[Vector], h: f64, bound: f64) -> SampleCheck {
    let mut check = SampleCheck::new("finite-difference");
    for x in points.iter().filter(|x| objective.is_smooth_at(x)) {
        check.samples += 1;
        let err = finite_diff_check(objective, x, h);
        check.worst_slack = check.worst_slack.min(bound - err);
        if err > bound {
            check.passed = false;
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SetSpec;
    use crate::problem::{Constants, FnObjective};
    use crate::problems::BuiltinProblem;
    use crate::problems::{generate_linear_residual, generate_linear_residual_diagonal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    fn v(data: &[f64]) -> Vector {
        Vector::from_slice(data).unwrap()
    }

    #[test]
    fn finite_diff_examples() {
        let ball = BuiltinProblem::norm_shifted_ball(4).unwrap();
        let p = Vector::filled(4, 0.5);
        assert!(finite_diff_check(&ball, &p.scale(3.0), 1e-6) <= 1e-6);

        let lr = BuiltinProblem::LinearResidual(
            crate::problems::LinearResidual::diagonal(vec![1.0, 1.0], Vector::zeros(2)).unwrap(),
        );
        assert!(finite_diff_check(&lr, &v(&[3.0, 4.0]), 1e-6) <= 1e-6);

        let quad = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        assert!(finite_diff_check(&quad, &v(&[1.0]), 1e-6) <= 1e-9);
    }

    #[test]
    fn finite_diff_catches_wrong_gradient() {
        let wrong = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![x[0]]));
        assert!(finite_diff_check(&wrong, &v(&[1.0]), 1e-6) > 0.5);
    }

    #[test]
    fn norm_shifted_ball_floor_and_lower_bound() {
        let b = BuiltinProblem::norm_shifted_ball(5).unwrap();
        let problem = b.to_problem();
        let pts = sample_feasible(&problem, &Vector::filled(5, 0.8), 1.0, 1000, &mut rng()).unwrap();
        assert!(check_lower_bound(&problem, &pts).unwrap().passed);
        assert!(check_homogeneity_floor(&problem, &pts).unwrap().passed);
    }

    #[test]
    fn sharpness_holds_and_doubling_breaks_it() {
        let lr = BuiltinProblem::LinearResidual(generate_linear_residual(4, 3.0, 1).unwrap());
        let problem = lr.to_problem();
        let sharp = lr.sharpness();
        let pts = sample_feasible(&problem, &Vector::zeros(4), 2.0, 1000, &mut rng()).unwrap();
        assert!(check_sharpness(&problem, &sharp, &pts).unwrap().passed);

        let mut wrong = sharp.clone();
        wrong.sharp_modulus = wrong.sharp_modulus.map(|a| 2.0 * a);
        assert!(!check_sharpness(&problem, &wrong, &pts).unwrap().passed);
    }

    #[test]
    fn distance_to_box_is_sharp() {
        let target = SetSpec::boxed(v(&[0.0, 0.0]), v(&[1.0, 2.0])).unwrap();
        let b = BuiltinProblem::distance_to_set(target).unwrap();
        let problem = b.to_problem();
        let pts = sample_feasible(&problem, &v(&[0.5, 1.0]), 3.0, 1000, &mut rng()).unwrap();
        assert!(check_sharpness(&problem, &b.sharpness(), &pts).unwrap().passed);
        assert!(
            check_weak_quasiconvexity(&problem, &b.sharpness(), &pts)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn scalar_is_weakly_one_quasiconvex() {
        let b = BuiltinProblem::weakly_quasiconvex_scalar(1).unwrap();
        let problem = b.to_problem();
        let pts = sample_feasible(&problem, &Vector::zeros(1), 4.0, 1000, &mut rng()).unwrap();
        let c = check_weak_quasiconvexity(&problem, &b.sharpness(), &pts).unwrap();
        assert!(c.passed);
        assert!(c.worst_slack >= -1e-12);
    }

    #[test]
    fn nonconvex_counterexample_fails_weak_quasiconvexity() {
        // f(t) = t^2 / (1 + t^2) is quasiconvex but 1/(1+t^2)... check: the
        // inequality t f'(t) >= f(t) fails for |t| > 1.
        let f = Arc::new(FnObjective::new(1, |x: &[f64]| {
            let t = x[0];
            (t * t / (1.0 + t * t), vec![2.0 * t / (1.0 + t * t).powi(2)])
        }));
        let problem = ProblemSpec::new(
            "bump",
            f,
            SetSpec::whole_space(1).unwrap(),
            Constants {
                optimal_value: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap();
        let sharp = crate::problem::SharpnessSpec {
            sharp_modulus: None,
            weak_quasiconvexity: 1.0,
            growth_order: 2.0,
            growth_modulus: None,
            solution_set: Some(crate::problem::SolutionSet::point(Vector::zeros(1))),
        };
        let pts: Vec<Vector> = [0.5, 2.0, 3.0].iter().map(|t| v(&[*t])).collect();
        assert!(!check_weak_quasiconvexity(&problem, &sharp, &pts).unwrap().passed);
    }

    #[test]
    fn quasiconvexity_along_segments() {
        let b = BuiltinProblem::power_norm(Vector::zeros(3), 3.0).unwrap();
        let problem = b.to_problem();
        let pts = sample_feasible(&problem, &Vector::zeros(3), 2.0, 200, &mut rng()).unwrap();
        let c = check_quasiconvexity(problem.objective.as_ref(), &pts, &[0.1, 0.5, 0.9]);
        assert!(c.passed);
        assert_eq!(c.samples, 199 * 3);
    }

    #[test]
    fn diagonal_generator_is_sharp_with_sigma_min() {
        let lr = BuiltinProblem::LinearResidual(generate_linear_residual_diagonal(2, 2.0, 0).unwrap());
        let problem = lr.to_problem();
        let pts = sample_feasible(&problem, &Vector::zeros(2), 1.0, 1000, &mut rng()).unwrap();
        assert!(check_sharpness(&problem, &lr.sharpness(), &pts).unwrap().passed);
    }
}
