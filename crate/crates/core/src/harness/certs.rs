use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Experiment, Method, Outcome};
use crate::geometry::{self, SetSpec};
use crate::problem::ABS_TOL;
use crate::problems::{
    check_homogeneity_floor, check_lower_bound, check_quasiconvexity, check_sharpness, check_weak_quasiconvexity,
    finite_diff_suite, sample_feasible, SampleCheck,
};
use crate::subgrad::{self, product_certificate, CERT_TOL};
use crate::trace::StepData;
use crate::vector::{dot, Vector};

/// Finite differences cost `2n` oracle calls per point; skip them above this
/// dimension.
const FINITE_DIFF_MAX_DIM: usize = 5_000;
const FINITE_DIFF_STEP: f64 = 1e-6;
const FINITE_DIFF_BOUND: f64 = 1e-5;
/// Absolute tolerance of the projection property checks.
const PROJECTION_TOL: f64 = 1e-9;

fn failed(name: &str) -> SampleCheck {
    let mut c = SampleCheck::new(name);
    c.passed = false;
    c
}

/// Sampled checks of the declared constants of the experiment's problem.
pub fn problem_checks(exp: &Experiment, samples: usize, seed: u64) -> Vec<SampleCheck> {
    let problem = &exp.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solutions = exp.sharpness.solution_set.as_ref();
    let center = solutions
        .and_then(|s| s.nearest(&exp.start).ok())
        .unwrap_or_else(|| exp.start.clone());
    let scale = center.dist(&exp.start).max(1.0);
    let points = match sample_feasible(problem, &center, scale, samples, &mut rng) {
        Ok(p) => p,
        Err(_) => return vec![failed("sampling")],
    };

    let mut checks = Vec::new();
    let known = problem.constants.optimal_value.is_some();
    if known {
        checks.push(check_lower_bound(problem, &points).unwrap_or_else(|_| failed("lower-bound")));
    }
    if problem.constants.homogeneity_floor.is_some() {
        checks.push(check_homogeneity_floor(problem, &points).unwrap_or_else(|_| failed("homogeneity-floor")));
    }
    if known && solutions.is_some() {
        if exp.sharpness.sharp_modulus.is_some() {
            checks.push(check_sharpness(problem, &exp.sharpness, &points).unwrap_or_else(|_| failed("sharp-minimum")));
        }
        checks.push(
            check_weak_quasiconvexity(problem, &exp.sharpness, &points)
                .unwrap_or_else(|_| failed("weak-quasiconvexity")),
        );
    }
    checks.push(check_quasiconvexity(
        problem.objective.as_ref(),
        &points,
        &[0.25, 0.5, 0.75],
    ));
    if problem.dim() <= FINITE_DIFF_MAX_DIM {
        checks.push(finite_diff_suite(
            problem.objective.as_ref(),
            &points,
            FINITE_DIFF_STEP,
            FINITE_DIFF_BOUND,
        ));
    }
    if let (Ok(f_star), Some(solutions), Ok(m)) = (
        problem.optimal_value(),
        solutions,
        subgrad::resolve_step_constant(problem, &exp.config.solver.params),
    ) {
        // f(x) - f* <= M v_f(x, x*) with x* the nearest minimizer.
        let mut check = SampleCheck::new("normalized-gap");
        for x in &points {
            let (f, g) = problem.objective.eval(x);
            let Ok(xs) = solutions.nearest(x) else {
                check.passed = false;
                continue;
            };
            match subgrad::v_f(x, &xs, &g) {
                Ok(v) => check.record(f - f_star, m * v),
                Err(_) if f - f_star <= ABS_TOL => check.record(f - f_star, 0.0),
                Err(_) => check.passed = false,
            }
        }
        checks.push(check);
    }
    checks
}

/// Idempotence, nonexpansiveness and the variational inequality
/// `<x - P(x), z - P(x)> <= 0` on `pairs` random pairs around the set.
pub fn projection_checks(set: &SetSpec, pairs: usize, seed: u64) -> Vec<SampleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let center = match geometry::min_norm_point(set) {
        Ok(c) => c,
        Err(_) => return vec![failed("projection")],
    };
    let scale = 3.0 * center.norm().max(1.0);
    let random = |rng: &mut ChaCha8Rng| {
        Vector::new(
            center
                .iter()
                .map(|c| c + scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
        .expect("finite sample")
    };
    let mut idempotent = SampleCheck::new("projection-idempotence");
    let mut nonexpansive = SampleCheck::new("projection-nonexpansive");
    let mut variational = SampleCheck::new("projection-variational-inequality");
    for _ in 0..pairs {
        let x = random(&mut rng);
        let y = random(&mut rng);
        let (Ok(px), Ok(py)) = (geometry::project(set, &x), geometry::project(set, &y)) else {
            idempotent.passed = false;
            continue;
        };
        match geometry::project(set, &px) {
            Ok(ppx) => idempotent.record_tol(ppx.dist(&px), 0.0, PROJECTION_TOL),
            Err(_) => idempotent.passed = false,
        }
        nonexpansive.record_tol(px.dist(&py), x.dist(&y), PROJECTION_TOL);
        let inner = dot(&x.sub(&px), &py.sub(&px)).expect("same dimension");
        variational.record_tol(inner, 0.0, PROJECTION_TOL);
    }
    vec![idempotent, nonexpansive, variational]
}

/// Certificates of a finished run, read off its trace.
pub fn solver_checks(exp: &Experiment, outcome: &Outcome) -> Vec<SampleCheck> {
    let records = outcome.trace.records();
    let c = &outcome.constants;
    let mut checks = Vec::new();
    match exp.config.solver.method {
        Method::Ast => {
            if let Some(f_star) = c.optimal_value {
                let mut bound = SampleCheck::new("gap-bound");
                for r in &records[1..] {
                    if let Some(b) = r.bound {
                        bound.record_tol(r.f_x - f_star, b, 1e-7);
                    }
                }
                checks.push(bound);
            }
            let mut identity = SampleCheck::new("accumulator-identity");
            for r in &records[1..] {
                if let StepData::Ast {
                    local_constant,
                    coupling,
                    accumulator,
                    ..
                } = r.step
                {
                    identity.record_tol(
                        (accumulator - local_constant * coupling * coupling).abs(),
                        0.0,
                        1e-9 * accumulator,
                    );
                }
            }
            checks.push(identity);
            if outcome.stop_criterion {
                if let (Some(f_star), Some(r), Some(eps)) = (c.optimal_value, c.radius, c.accuracy) {
                    let mut exit = SampleCheck::new("exit-guarantee");
                    exit.record_tol(outcome.final_value - f_star, 1.5 * eps * r, 1e-9);
                    checks.push(exit);
                    if let Some(gamma) = c.relative_accuracy {
                        let mut rel = SampleCheck::new("relative-accuracy");
                        rel.record_tol(outcome.final_value, (1.0 + gamma) * f_star, 1e-9);
                        checks.push(rel);
                    }
                }
                if let Some(estimate) = c.complexity_estimate {
                    let mut count = SampleCheck::new("complexity-estimate");
                    count.record(outcome.iterations as f64, estimate as f64);
                    checks.push(count);
                }
            }
        }
        Method::Polyak => {
            if let (Some(alpha), Some(beta)) = (c.sharp_modulus, c.weak_quasiconvexity) {
                let mut contraction = SampleCheck::new("per-step-contraction");
                for pair in records.windows(2) {
                    if let (Some(g), Some(d0), Some(d1)) = (pair[0].grad_norm, pair[0].dist2, pair[1].dist2) {
                        let factor = 1.0 - (alpha * beta / g).powi(2);
                        contraction.record_tol(d1, factor * d0, CERT_TOL);
                    }
                }
                checks.push(contraction);
                let mut product = SampleCheck::new("product-bound");
                match product_certificate(&outcome.trace, alpha, beta) {
                    Ok(cert) => {
                        product.samples = records.len();
                        product.passed = cert.holds;
                        product.worst_slack = records
                            .iter()
                            .filter_map(|r| match r.step {
                                StepData::Subgradient { product_bound, .. } => {
                                    product_bound.zip(r.dist2).map(|(b, d)| b - d)
                                }
                                _ => None,
                            })
                            .fold(f64::INFINITY, f64::min);
                    }
                    Err(_) => product.passed = false,
                }
                checks.push(product);
            }
            checks.push(column_check(outcome, "lipschitz-rate", |s| match s {
                StepData::Subgradient { geom_bound, .. } => geom_bound,
                _ => None,
            }));
        }
        Method::Normalized => checks.push(column_check(outcome, "geometric-rate", |s| match s {
            StepData::Subgradient { geom_bound, .. } => geom_bound,
            _ => None,
        })),
        Method::NormalizedInexact => checks.push(column_check(outcome, "inexact-rate", |s| match s {
            StepData::Subgradient { inexact_bound, .. } => inexact_bound,
            _ => None,
        })),
    }
    if exp.config.solver.method != Method::Ast && exp.starts_at_min_norm {
        if let (Some(budget), Some(f_star), Some(gamma)) = (c.iteration_budget, c.optimal_value, c.relative_accuracy) {
            // The budget assumes the Lipschitz constant as step constant.
            let applies = exp.config.solver.method != Method::Polyak || c.weak_quasiconvexity == Some(1.0);
            if applies && f_star > 0.0 {
                let mut check = SampleCheck::new("relative-iteration-budget");
                match records.iter().find(|r| r.f_x <= (1.0 + gamma) * f_star) {
                    Some(r) => check.record(r.k as f64, budget as f64),
                    None if records.last().is_some_and(|r| r.k < budget as usize) => {}
                    None => check.passed = false,
                }
                checks.push(check);
            }
        }
    }
    checks
}

fn column_check(outcome: &Outcome, name: &str, column: impl Fn(StepData) -> Option<f64>) -> SampleCheck {
    let mut check = SampleCheck::new(name);
    for r in outcome.trace.records() {
        if let (Some(b), Some(d)) = (column(r.step), r.dist2) {
            check.record_tol(d, b, CERT_TOL);
        }
    }
    check
}
