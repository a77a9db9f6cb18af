//! Adaptive accelerated method on similar triangles with backtracked local
//! smoothness constants, plus the relative-accuracy driver for positively
//! homogeneous objectives.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::problem::{ProblemError, ProblemSpec, SolverConfig};
use crate::trace::{StepData, Trace, TraceError, TraceRecord};
use crate::vector::{dot, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AstError {
    #[error("local constant must be positive, got {0}")]
    NonPositiveConstant(f64),
    #[error("accumulator must be positive, got {0}")]
    NonPositiveAccumulator(f64),
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("descent test still failing after {backtracks} doublings (last constant {last_constant})")]
    BacktrackLimit {
        backtracks: usize,
        last_constant: f64,
        state: Box<AstState>,
    },
    #[error("stop criterion not met within {iterations} iterations")]
    MaxIterations { iterations: usize, trace: Box<Trace> },
    #[error("the feasible set contains the origin, so relative accuracy is meaningless")]
    OriginFeasible,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Iterate of the method after `k` accepted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AstState {
    pub k: usize,
    pub x: Vector,
    pub u: Vector,
    /// `y_k` of the last accepted step; `x_0` initially.
    pub y: Vector,
    /// `A_k`.
    pub accumulator: f64,
    /// `alpha_k` of the last accepted step.
    pub coupling: f64,
    /// `L_k` of the last accepted step.
    pub local_constant: f64,
    /// Candidate `L_{k+1}` for the next step.
    pub next_constant: f64,
    /// `delta_k` of the last accepted step.
    pub delta: f64,
    /// `sum_{j <= k} delta_j A_j`.
    pub weighted_delta_sum: f64,
    pub f_x: f64,
    pub oracle_calls: u64,
}

impl AstState {
    /// `u_0 = x_0`, `A_0 = 0` and first candidate `L_0 / 2`.
    pub fn start(problem: &ProblemSpec, x0: Vector, initial_constant: f64) -> Result<Self, AstError> {
        if !(initial_constant > 0.0 && initial_constant.is_finite()) {
            return Err(AstError::NonPositiveConstant(initial_constant));
        }
        x0.check_dim(&Vector::zeros(problem.dim()))
            .map_err(GeometryError::from)?;
        let f_x = problem.objective.value(&x0);
        Ok(Self {
            k: 0,
            u: x0.clone(),
            y: x0.clone(),
            x: x0,
            accumulator: 0.0,
            coupling: 0.0,
            local_constant: initial_constant,
            next_constant: initial_constant / 2.0,
            delta: 0.0,
            weighted_delta_sum: 0.0,
            f_x,
            oracle_calls: 1,
        })
    }
}

/// How the slack `delta_{k+1}` of the descent test is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeltaSchedule {
    /// `R eps alpha_{k+1} / (4 A_{k+1})`, the largest slack that keeps the
    /// accuracy guarantee.
    Theorem {
        radius: f64,
        accuracy: f64,
    },
    Constant {
        delta: f64,
    },
    /// Exact descent; only sensible for objectives with Lipschitz gradient.
    Zero,
}

impl DeltaSchedule {
    pub fn delta(&self, coupling: f64, accumulator: f64) -> f64 {
        match *self {
            DeltaSchedule::Theorem { radius, accuracy } => delta_schedule(radius, accuracy, coupling, accumulator),
            DeltaSchedule::Constant { delta } => delta,
            DeltaSchedule::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once `A_N >= R / eps`; running out of iterations is an error.
    Criterion { radius: f64, accuracy: f64 },
    /// Run exactly `N` steps.
    Iterations(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstOptions {
    /// Distance estimate `R` used by the gap bound.
    pub radius: f64,
    pub delta: DeltaSchedule,
    pub stop: StopRule,
    pub initial_constant: f64,
    pub max_iterations: usize,
    pub max_backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AstExit {
    StopCriterion,
    FixedIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AstRun {
    pub x: Vector,
    pub f_x: f64,
    pub state: AstState,
    pub trace: Trace,
    pub exit: AstExit,
    pub radius: f64,
    /// Accuracy `eps` of the stop criterion, if one was used.
    pub accuracy: Option<f64>,
}

/// Largest root of `A + alpha = L alpha^2`.
pub fn alpha_next(accumulator: f64, local_constant: f64) -> Result<f64, AstError> {
    if !(local_constant > 0.0) {
        return Err(AstError::NonPositiveConstant(local_constant));
    }
    Ok((1.0 + (1.0 + 4.0 * local_constant * accumulator).sqrt()) / (2.0 * local_constant))
}

/// `f(x1) <= f(y1) + <g(y1), x1 - y1> + L/2 ||x1 - y1||^2 + delta`.
pub fn descent_test(
    f_x1: f64,
    f_y1: f64,
    g_y1: &Vector,
    x1: &Vector,
    y1: &Vector,
    local_constant: f64,
    delta: f64,
) -> bool {
    let d = x1.sub(y1);
    let linear = dot(g_y1, &d).expect("descent test vectors share a dimension");
    let sq = dot(&d, &d).expect("same dimension");
    f_x1 <= f_y1 + linear + 0.5 * local_constant * sq + delta
}

/// `R eps alpha / (4 A)`.
pub fn delta_schedule(radius: f64, accuracy: f64, coupling: f64, accumulator: f64) -> f64 {
    radius * accuracy * coupling / (4.0 * accumulator)
}

/// `R^2 / A_N + 2 sum(delta_{k+1} A_{k+1}) / A_N`.
pub fn theoretical_bound(radius: f64, accumulator: f64, weighted_delta_sum: f64) -> Result<f64, AstError> {
    if !(accumulator > 0.0) {
        return Err(AstError::NonPositiveAccumulator(accumulator));
    }
    Ok((radius * radius + 2.0 * weighted_delta_sum) / accumulator)
}

/// `A_N >= R / eps`.
pub fn stop_criterion(accumulator: f64, radius: f64, accuracy: f64) -> bool {
    accumulator >= radius / accuracy
}

/// Iterations sufficient for the stop criterion when the gradient is
/// `nu`-Hölder with constant `L`:
/// `eps^(-2/(1+3nu)) (R 2^((2+4nu)/(1+nu)) L^(2/(1+nu)))^((1+nu)/(1+3nu))`,
/// at least 1.
pub fn complexity_estimate(radius: f64, accuracy: f64, nu: f64, holder_constant: f64) -> u64 {
    let outer = (1.0 + nu) / (1.0 + 3.0 * nu);
    let inner = radius * 2f64.powf((2.0 + 4.0 * nu) / (1.0 + nu)) * holder_constant.powf(2.0 / (1.0 + nu));
    let n = accuracy.powf(-2.0 / (1.0 + 3.0 * nu)) * inner.powf(outer);
    // Guard against values like 9.000000000000002 from rounding.
    let n = (n * (1.0 - 1e-12)).ceil();
    (n as u64).max(1)
}

/// Constant `L(delta)` of the inexact quadratic upper model for a
/// `nu`-Hölder gradient. Diagnostic only; the method never uses it.
pub fn l_of_delta(holder_constant: f64, nu: f64, delta: f64) -> Result<f64, AstError> {
    if !(delta > 0.0) {
        return Err(AstError::NonPositiveDelta(delta));
    }
    let exponent = (1.0 - nu) / (1.0 + nu);
    Ok(holder_constant * (holder_constant / (2.0 * delta) * exponent).powf(exponent))
}

/// One accepted step, backtracking on the local constant. Returns the new
/// state and the number of doublings it took.
pub fn ast_step(
    state: &AstState,
    problem: &ProblemSpec,
    schedule: &DeltaSchedule,
    max_backtracks: usize,
) -> Result<(AstState, usize), AstError> {
    let a = state.accumulator;
    let mut candidate = state.next_constant;
    let mut calls = state.oracle_calls;
    for backtracks in 0..=max_backtracks {
        let alpha = alpha_next(a, candidate)?;
        let a_next = a + alpha;
        let y = Vector::combine(alpha, &state.u, a, &state.x, a_next);
        let (f_y, g_y) = problem.objective.eval(&y);
        let u = geometry::project(&problem.feasible_set, &state.u.add_scaled(-alpha, &g_y))?;
        let x = Vector::combine(alpha, &u, a, &state.x, a_next);
        let f_x = problem.objective.value(&x);
        calls += 2;
        let delta = schedule.delta(alpha, a_next);
        if descent_test(f_x, f_y, &g_y, &x, &y, candidate, delta) {
            let next = AstState {
                k: state.k + 1,
                x,
                u,
                y,
                accumulator: a_next,
                coupling: alpha,
                local_constant: candidate,
                next_constant: candidate / 2.0,
                delta,
                weighted_delta_sum: state.weighted_delta_sum + delta * a_next,
                f_x,
                oracle_calls: calls,
            };
            return Ok((next, backtracks));
        }
        if backtracks < max_backtracks {
            candidate *= 2.0;
        }
    }
    let mut stuck = state.clone();
    stuck.oracle_calls = calls;
    Err(AstError::BacktrackLimit {
        backtracks: max_backtracks,
        last_constant: candidate,
        state: Box::new(stuck),
    })
}

fn record(
    state: &AstState,
    radius: f64,
    optimal_value: Option<f64>,
    backtracks: usize,
    started: Instant,
) -> Result<TraceRecord, AstError> {
    let bound = if state.k == 0 {
        None
    } else {
        Some(theoretical_bound(radius, state.accumulator, state.weighted_delta_sum)?)
    };
    let residual = bound.zip(optimal_value).map(|(b, f)| b - (state.f_x - f));
    Ok(TraceRecord {
        k: state.k,
        f_x: state.f_x,
        grad_norm: None,
        dist2: None,
        bound,
        residual,
        oracle_calls: state.oracle_calls,
        elapsed_s: started.elapsed().as_secs_f64(),
        step: StepData::Ast {
            local_constant: state.local_constant,
            coupling: state.coupling,
            accumulator: state.accumulator,
            delta: state.delta,
            weighted_delta_sum: state.weighted_delta_sum,
            backtracks,
        },
    })
}

/// Runs the method from `x0` (which must be feasible) under `options`.
pub fn run_ast(problem: &ProblemSpec, x0: Vector, options: &AstOptions) -> Result<AstRun, AstError> {
    if !(options.radius > 0.0 && options.radius.is_finite()) {
        return Err(AstError::InvalidParameter(format!(
            "radius must be positive, got {}",
            options.radius
        )));
    }
    let started = Instant::now();
    let f_star = problem.constants.optimal_value;
    let mut state = AstState::start(problem, x0, options.initial_constant)?;
    let mut trace = Trace::new();
    trace.push(record(&state, options.radius, f_star, 0, started)?)?;

    let (limit, criterion) = match options.stop {
        StopRule::Criterion { radius, accuracy } => (options.max_iterations, Some((radius, accuracy))),
        StopRule::Iterations(n) => (n, None),
    };
    while state.k < limit {
        let (next, backtracks) = ast_step(&state, problem, &options.delta, options.max_backtracks)?;
        state = next;
        trace.push(record(&state, options.radius, f_star, backtracks, started)?)?;
        if let Some((radius, accuracy)) = criterion {
            if stop_criterion(state.accumulator, radius, accuracy) {
                return Ok(AstRun {
                    x: state.x.clone(),
                    f_x: state.f_x,
                    state,
                    trace,
                    exit: AstExit::StopCriterion,
                    radius: options.radius,
                    accuracy: Some(accuracy),
                });
            }
        }
    }
    match criterion {
        Some(_) => Err(AstError::MaxIterations {
            iterations: limit,
            trace: Box::new(trace),
        }),
        None => Ok(AstRun {
            x: state.x.clone(),
            f_x: state.f_x,
            state,
            trace,
            exit: AstExit::FixedIterations,
            radius: options.radius,
            accuracy: None,
        }),
    }
}

/// Starting point, `R` and `eps` for relative accuracy `gamma` on a positively
/// homogeneous problem: `x_0` is the least-norm feasible point,
/// `R = 2 f(x_0) / gamma0` unless overridden, and `eps = gamma gamma0 / 3`.
pub fn relative_setup(
    problem: &ProblemSpec,
    gamma: f64,
    config: &SolverConfig,
) -> Result<(Vector, f64, f64), AstError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(AstError::InvalidParameter(format!(
            "relative accuracy must be positive, got {gamma}"
        )));
    }
    let gamma0 = problem
        .constants
        .homogeneity_floor
        .ok_or(ProblemError::Missing("homogeneity floor"))?;
    let x0 = geometry::min_norm_point(&problem.feasible_set)?;
    if x0.iter().all(|v| *v == 0.0) {
        return Err(AstError::OriginFeasible);
    }
    let radius = match config.radius {
        Some(r) => r,
        None => 2.0 * problem.objective.value(&x0) / gamma0,
    };
    Ok((x0, radius, gamma * gamma0 / 3.0))
}

/// Runs until `A_N >= R / eps` with the slack schedule that guarantees
/// `f(x_N) <= (1 + gamma) f*`.
pub fn solve_relative(problem: &ProblemSpec, gamma: f64, config: &SolverConfig) -> Result<AstRun, AstError> {
    config.validate()?;
    let (x0, radius, accuracy) = relative_setup(problem, gamma, config)?;
    let options = AstOptions {
        radius,
        delta: DeltaSchedule::Theorem { radius, accuracy },
        stop: StopRule::Criterion { radius, accuracy },
        initial_constant: config.initial_constant,
        max_iterations: config.max_iterations,
        max_backtracks: config.max_backtracks,
    };
    run_ast(problem, x0, &options)
}

/// Additive-accuracy variant: given a feasible `x0` and `R >= ||x0 - x*||`,
/// runs until `f(x_N) - f* <= 3 eps R / 2` is guaranteed.
pub fn solve_absolute(
    problem: &ProblemSpec,
    x0: Vector,
    radius: f64,
    accuracy: f64,
    config: &SolverConfig,
) -> Result<AstRun, AstError> {
    config.validate()?;
    if !(accuracy > 0.0 && accuracy.is_finite()) {
        return Err(AstError::InvalidParameter(format!(
            "accuracy must be positive, got {accuracy}"
        )));
    }
    let options = AstOptions {
        radius,
        delta: DeltaSchedule::Theorem { radius, accuracy },
        stop: StopRule::Criterion { radius, accuracy },
        initial_constant: config.initial_constant,
        max_iterations: config.max_iterations,
        max_backtracks: config.max_backtracks,
    };
    run_ast(problem, x0, &options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SetSpec;
    use crate::problem::{Constants, FnObjective};
    use crate::problems::{generate_linear_residual, BuiltinProblem};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn v(data: &[f64]) -> Vector {
        Vector::from_slice(data).unwrap()
    }

    fn half_square() -> ProblemSpec {
        let f = Arc::new(FnObjective::new(1, |x: &[f64]| (0.5 * x[0] * x[0], vec![x[0]])));
        ProblemSpec::new(
            "half-square",
            f,
            SetSpec::whole_space(1).unwrap(),
            Constants {
                optimal_value: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn state_with_candidate(problem: &ProblemSpec, x0: f64, candidate: f64) -> AstState {
        let mut s = AstState::start(problem, v(&[x0]), 2.0 * candidate).unwrap();
        assert_eq!(s.next_constant, candidate);
        s.k = 0;
        s
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_next(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(alpha_next(0.0, 4.0).unwrap(), 0.25);
        assert_eq!(alpha_next(2.0, 1.0).unwrap(), 2.0);
        assert!(alpha_next(1.0, 0.0).is_err());
        assert!(alpha_next(1.0, -1.0).is_err());
    }

    #[test]
    fn descent_test_examples() {
        let g = v(&[0.0]);
        assert!(descent_test(2.0, 2.0, &g, &v(&[1.0]), &v(&[1.0]), 7.0, 0.0));
        assert!(descent_test(0.5, 0.0, &g, &v(&[1.0]), &v(&[0.0]), 1.0, 0.0));
        assert!(!descent_test(0.5, 0.0, &g, &v(&[1.0]), &v(&[0.0]), 0.5, 0.0));
    }

    #[test]
    fn delta_and_bound_examples() {
        assert_eq!(delta_schedule(1.0, 1.0, 3.0, 3.0), 0.25);
        assert_eq!(delta_schedule(1.0, 0.0, 3.0, 3.0), 0.0);
        assert_abs_diff_eq!(delta_schedule(2.0, 0.3, 1.0, 2.0), 0.075, epsilon = 1e-15);

        assert_eq!(theoretical_bound(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(theoretical_bound(1.0, 100.0, 0.0).unwrap(), 0.01);
        assert_eq!(theoretical_bound(1.0, 2.0, 0.5).unwrap(), 1.0);
        assert!(theoretical_bound(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn stop_criterion_examples() {
        assert!(stop_criterion(4.0, 2.0, 0.5));
        assert!(!stop_criterion(0.0, 1.0, 0.1));
        assert!(stop_criterion(11.0, 1.0, 0.1));
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(complexity_estimate(1.0, 0.1, 1.0, 1.0), 9);
        assert_eq!(complexity_estimate(1.0, 0.1, 0.0, 1.0), 400);
        assert_eq!(complexity_estimate(1e-6, 1e6, 1.0, 1.0), 1);
    }

    #[test]
    fn l_of_delta_examples() {
        assert_eq!(l_of_delta(3.0, 1.0, 1e-9).unwrap(), 3.0);
        assert_eq!(l_of_delta(2.0, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(l_of_delta(1.0, 0.0, 0.5).unwrap(), 1.0);
        assert!(l_of_delta(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn one_step_by_hand() {
        let p = half_square();
        let s = state_with_candidate(&p, 1.0, 1.0);
        let (next, backtracks) = ast_step(&s, &p, &DeltaSchedule::Zero, 60).unwrap();
        assert_eq!(backtracks, 0);
        assert_eq!((next.coupling, next.accumulator), (1.0, 1.0));
        assert_eq!((next.y[0], next.u[0], next.x[0]), (1.0, 0.0, 0.0));
        assert_eq!(next.local_constant, 1.0);
        assert_eq!(next.next_constant, 0.5);
    }

    #[test]
    fn small_candidate_is_rejected_then_doubled() {
        let p = half_square();
        let s = state_with_candidate(&p, 1.0, 0.25);
        // alpha = 4 overshoots to -3: 4.5 <= 0.5 - 4 + 2 fails. L = 0.5
        // overshoots to -1 and fails too; L = 1 lands on the minimizer.
        assert!(ast_step(&s, &p, &DeltaSchedule::Zero, 1).is_err());
        let (next, backtracks) = ast_step(&s, &p, &DeltaSchedule::Zero, 60).unwrap();
        assert_eq!(backtracks, 2);
        assert_eq!(next.local_constant, 1.0);
        assert_eq!(next.x[0], 0.0);
    }

    #[test]
    fn optimal_start_stays_put() {
        let p = half_square();
        let s = state_with_candidate(&p, 0.0, 1.0);
        let (next, backtracks) = ast_step(&s, &p, &DeltaSchedule::Zero, 60).unwrap();
        assert_eq!(backtracks, 0);
        assert_eq!((next.x[0], next.u[0], next.y[0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn backtrack_limit_carries_state() {
        // |x| with exact descent cannot pass once the kink is straddled.
        let f = Arc::new(FnObjective::new(1, |x: &[f64]| (x[0].abs(), vec![x[0].signum()])));
        let p = ProblemSpec::new("abs", f, SetSpec::whole_space(1).unwrap(), Constants::default()).unwrap();
        let s = AstState::start(&p, v(&[1e-3]), 1e-6).unwrap();
        match ast_step(&s, &p, &DeltaSchedule::Zero, 3) {
            Err(AstError::BacktrackLimit { backtracks, state, .. }) => {
                assert_eq!(backtracks, 3);
                assert_eq!(state.x, s.x);
                assert!(state.oracle_calls > s.oracle_calls);
            }
            other => panic!("expected backtrack limit, got {other:?}"),
        }
    }

    #[test]
    fn relative_guarantee_on_norm_shifted_ball() {
        let p = BuiltinProblem::norm_shifted_ball(1000).unwrap().to_problem();
        for gamma in [0.5, 0.1, 0.01, 10.0] {
            let run = solve_relative(&p, gamma, &SolverConfig::default()).unwrap();
            assert_eq!(run.exit, AstExit::StopCriterion);
            assert!(run.f_x <= 1.0 + gamma + 1e-9);
            let eps = run.accuracy.unwrap();
            assert!(run.f_x - 1.0 <= 1.5 * eps * run.radius + 1e-9);
        }
    }

    #[test]
    fn relative_rejects_feasible_origin_and_missing_floor() {
        let p = BuiltinProblem::power_norm(Vector::zeros(2), 1.0).unwrap().to_problem();
        assert!(matches!(
            solve_relative(&p, 0.1, &SolverConfig::default()),
            Err(AstError::Problem(ProblemError::Missing(_)))
        ));
        let mut p = p;
        p.constants.homogeneity_floor = Some(1.0);
        assert_eq!(
            solve_relative(&p, 0.1, &SolverConfig::default()).unwrap_err(),
            AstError::OriginFeasible
        );
    }

    #[test]
    fn max_iterations_carries_trace() {
        let p = BuiltinProblem::tilted_l1(0.3).unwrap().to_problem();
        let config = SolverConfig {
            max_iterations: 3,
            ..Default::default()
        };
        match solve_relative(&p, 1e-4, &config) {
            Err(AstError::MaxIterations { iterations, trace }) => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 4);
            }
            other => panic!("expected max iterations, got {other:?}"),
        }
    }

    fn check_run_invariants(run: &AstRun, f_star: f64) {
        let records = run.trace.records();
        let mut previous_a = 0.0;
        let mut previous_l: Option<f64> = None;
        for r in &records[1..] {
            let StepData::Ast {
                local_constant,
                coupling,
                accumulator,
                backtracks,
                ..
            } = r.step
            else {
                panic!("wrong step kind")
            };
            assert!((accumulator - local_constant * coupling * coupling).abs() <= 1e-9 * accumulator);
            assert!((accumulator - previous_a - coupling).abs() <= 1e-12 * accumulator);
            assert!(accumulator > previous_a);
            if let Some(l) = previous_l {
                assert_eq!(local_constant, l / 2.0 * 2f64.powi(backtracks as i32));
            }
            previous_l = Some(local_constant);
            previous_a = accumulator;
            assert!(r.f_x - f_star <= r.bound.unwrap() + 1e-7);
        }
    }

    #[test]
    fn bound_holds_on_nonsmooth_residual() {
        let lr = generate_linear_residual(5, 4.0, 9).unwrap();
        let dist = lr.solution().norm();
        let p = BuiltinProblem::LinearResidual(lr).to_problem();
        let run = solve_absolute(&p, Vector::zeros(5), dist, 0.05, &SolverConfig::default()).unwrap();
        check_run_invariants(&run, 0.0);
        assert!(run.f_x <= 1.5 * 0.05 * dist + 1e-9);
    }

    #[test]
    fn fixed_iterations_with_small_constant_slack() {
        let p = BuiltinProblem::norm_shifted_ball(50).unwrap().to_problem();
        let (x0, radius, _) = relative_setup(&p, 0.1, &SolverConfig::default()).unwrap();
        let options = AstOptions {
            radius,
            delta: DeltaSchedule::Constant { delta: 1e-12 },
            stop: StopRule::Iterations(100),
            initial_constant: 1.0,
            max_iterations: 10_000,
            max_backtracks: 60,
        };
        let run = run_ast(&p, x0, &options).unwrap();
        assert_eq!(run.exit, AstExit::FixedIterations);
        assert_eq!(run.trace.len(), 101);
        check_run_invariants(&run, 1.0);
        assert!(run.trace.at(100).unwrap().bound.unwrap() < 1e-6);
    }

    proptest! {
        #[test]
        fn alpha_solves_its_quadratic(a in 0.0f64..1e6, l in 1e-6f64..1e6) {
            let alpha = alpha_next(a, l).unwrap();
            prop_assert!(alpha > 0.0);
            let lhs = a + alpha;
            prop_assert!((lhs - l * alpha * alpha).abs() <= 1e-9 * lhs);
        }

        #[test]
        fn bound_holds_on_random_quadratics(scale in 0.1f64..10.0, x0 in -5.0f64..5.0, l0 in 1e-3f64..1e3) {
            let f = Arc::new(FnObjective::new(1, move |x: &[f64]| {
                (0.5 * scale * x[0] * x[0], vec![scale * x[0]])
            }));
            let p = ProblemSpec::new(
                "quadratic",
                f,
                SetSpec::whole_space(1).unwrap(),
                Constants { optimal_value: Some(0.0), ..Default::default() },
            )
            .unwrap();
            let config = SolverConfig { initial_constant: l0, ..Default::default() };
            let radius = x0.abs().max(1e-3);
            let run = solve_absolute(&p, v(&[x0]), radius, 1e-3, &config).unwrap();
            for r in &run.trace.records()[1..] {
                prop_assert!(r.f_x <= r.bound.unwrap() + 1e-7);
            }
        }
    }
}
