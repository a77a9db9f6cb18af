//! Experiment runner: builds problems from a JSON config, runs a solver,
//! checks the run's certificates and writes traces and reports.

mod certs;
pub mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use certs::{problem_checks, projection_checks, solver_checks};
pub use config::{
    DeltaConfig, ExperimentConfig, Method, ProblemConfig, ReportConfig, SharpnessOverride, SolverSection,
    TransformConfig, DEFAULT_BALL_DIM, LARGE_BALL_DIM,
};
pub use report::{default_checkpoints, emit_table, render_markdown, Report, ResolvedConstants, TableRow};

use crate::ast::{self, AstError, AstExit, AstOptions, DeltaSchedule, StopRule};
use crate::geometry;
use crate::problem::{ProblemSpec, SharpnessSpec};
use crate::problems::{
    generate_linear_residual, generate_linear_residual_diagonal, sharpen_power, BuiltinProblem, SampleCheck,
};
use crate::subgrad::{self, SubgradError};
use crate::trace::{Trace, TraceError};
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("solver failed: {message}")]
    Solver {
        message: String,
        /// The trace up to the failure, when the solver kept one.
        trace: Option<Box<Trace>>,
    },
    #[error("checkpoint {checkpoint} is beyond the last iteration {last}")]
    CheckpointBeyondTrace { checkpoint: usize, last: usize },
    #[error("checkpoints must be strictly increasing")]
    CheckpointOrder,
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

fn config_error(field: &str, message: impl ToString) -> HarnessError {
    HarnessError::Config {
        field: field.to_owned(),
        message: message.to_string(),
    }
}

impl From<AstError> for HarnessError {
    fn from(e: AstError) -> Self {
        let message = e.to_string();
        let trace = match e {
            AstError::MaxIterations { trace, .. } => Some(trace),
            _ => None,
        };
        HarnessError::Solver { message, trace }
    }
}

impl From<SubgradError> for HarnessError {
    fn from(e: SubgradError) -> Self {
        HarnessError::Solver {
            message: e.to_string(),
            trace: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Use the large dimension for the shifted-ball problem unless the
    /// config sets `n` explicitly.
    pub large_n: bool,
}

/// A config resolved into concrete objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub builtin: BuiltinProblem,
    pub problem: ProblemSpec,
    pub sharpness: SharpnessSpec,
    pub start: Vector,
    /// Whether `start` is the least-norm feasible point.
    pub starts_at_min_norm: bool,
    pub config: ExperimentConfig,
}

fn build_builtin(problem: &ProblemConfig, options: RunOptions) -> Result<BuiltinProblem, HarnessError> {
    let field = "problem";
    let built = match problem {
        ProblemConfig::NormShiftedBall { n } => {
            let default = if options.large_n {
                LARGE_BALL_DIM
            } else {
                DEFAULT_BALL_DIM
            };
            BuiltinProblem::norm_shifted_ball(n.unwrap_or(default))
        }
        ProblemConfig::LinearResidual {
            n,
            condition,
            seed,
            rotate,
        } => {
            let generated = if *rotate {
                generate_linear_residual(*n, *condition, *seed)
            } else {
                generate_linear_residual_diagonal(*n, *condition, *seed)
            };
            generated.map(BuiltinProblem::LinearResidual)
        }
        ProblemConfig::DistanceToSet { target } => BuiltinProblem::distance_to_set(target.clone()),
        ProblemConfig::WeaklyQuasiconvexScalar { n } => BuiltinProblem::weakly_quasiconvex_scalar(*n),
        ProblemConfig::PowerNorm { center, power } => {
            let center = Vector::new(center.clone()).map_err(|e| config_error("problem.center", e))?;
            BuiltinProblem::power_norm(center, *power)
        }
        ProblemConfig::TiltedL1 { angle } => BuiltinProblem::tilted_l1(*angle),
    };
    built.map_err(|e| config_error(field, e))
}

/// Resolves and validates a config. Every rejection names the offending
/// field.
pub fn build(config: &ExperimentConfig, options: RunOptions) -> Result<Experiment, HarnessError> {
    let builtin = build_builtin(&config.problem, options)?;
    let mut problem = builtin.to_problem();
    let mut sharpness = builtin.sharpness();
    if let Some(t) = &config.transform {
        let (p, s) = sharpen_power(&problem, &sharpness, t.power).map_err(|e| config_error("transform.power", e))?;
        problem = p;
        sharpness = s;
    }
    if let Some(o) = &config.sharpness {
        if let Some(a) = o.sharp_modulus {
            sharpness.sharp_modulus = Some(a);
        }
        if let Some(b) = o.weak_quasiconvexity {
            sharpness.weak_quasiconvexity = b;
        }
        sharpness.validate().map_err(|e| config_error("sharpness", e))?;
    }

    let min_norm = geometry::min_norm_point(&problem.feasible_set).map_err(|e| config_error("problem", e))?;
    let (start, starts_at_min_norm) = match &config.start {
        None => (min_norm, true),
        Some(s) => {
            let v = Vector::new(s.clone()).map_err(|e| config_error("start", e))?;
            if v.dim() != problem.dim() {
                return Err(config_error(
                    "start",
                    format!(
                        "dimension {} does not match the problem dimension {}",
                        v.dim(),
                        problem.dim()
                    ),
                ));
            }
            let at_min = v == min_norm;
            (v, at_min)
        }
    };

    let solver = &config.solver;
    solver.params.validate().map_err(|e| config_error("solver.params", e))?;
    if solver.method != Method::Ast {
        if solver.iterations.is_some() {
            return Err(config_error(
                "solver.iterations",
                "only the ast method runs a fixed number of steps",
            ));
        }
        if solver.delta != DeltaConfig::Theorem {
            return Err(config_error("solver.delta", "only the ast method has a slack schedule"));
        }
    }
    match solver.method {
        Method::Ast => {
            if problem.constants.homogeneity_floor.is_none() {
                return Err(config_error(
                    "solver.method",
                    format!("ast needs a homogeneity floor, which {} does not declare", problem.name),
                ));
            }
            if !starts_at_min_norm {
                return Err(config_error("start", "ast starts at the least-norm feasible point"));
            }
            if let DeltaConfig::Constant { delta } = solver.delta {
                if !(delta >= 0.0 && delta.is_finite()) {
                    return Err(config_error("solver.delta.delta", "must be nonnegative"));
                }
            }
            if solver.iterations == Some(0) {
                return Err(config_error("solver.iterations", "must be positive"));
            }
        }
        Method::Polyak => {
            problem.optimal_value().map_err(|e| config_error("problem", e))?;
        }
        Method::Normalized => {
            subgrad::resolve_step_constant(&problem, &solver.params)
                .map_err(|e| config_error("solver.params.step_constant", e))?;
        }
        Method::NormalizedInexact => {
            subgrad::resolve_step_constant(&problem, &solver.params)
                .map_err(|e| config_error("solver.params.step_constant", e))?;
            sharpness
                .sharp_modulus()
                .map_err(|e| config_error("sharpness.sharp_modulus", e))?;
        }
    }
    if let Some(c) = &config.report.checkpoints {
        if c.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("report.checkpoints", "must be strictly increasing"));
        }
    }

    Ok(Experiment {
        name: config.name.clone().unwrap_or_else(|| problem.name.clone()),
        builtin,
        problem,
        sharpness,
        start,
        starts_at_min_norm,
        config: config.clone(),
    })
}

/// Result of one solver run, independent of the method.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: Vector,
    pub trace: Trace,
    pub exit: String,
    pub iterations: usize,
    pub final_value: f64,
    pub constants: ResolvedConstants,
    /// Whether the accelerated method stopped on its accumulator criterion.
    pub stop_criterion: bool,
}

pub fn solve(exp: &Experiment) -> Result<Outcome, HarnessError> {
    let section = &exp.config.solver;
    let params = &section.params;
    let problem = &exp.problem;
    let gamma = params.relative_accuracy;
    let mut constants = ResolvedConstants {
        optimal_value: problem.constants.optimal_value,
        homogeneity_floor: problem.constants.homogeneity_floor,
        sharp_modulus: exp.sharpness.sharp_modulus,
        weak_quasiconvexity: Some(exp.sharpness.weak_quasiconvexity),
        relative_accuracy: Some(gamma),
        ..Default::default()
    };
    match section.method {
        Method::Ast => {
            let (x0, radius, accuracy) = ast::relative_setup(problem, gamma, params)?;
            let delta = match section.delta {
                DeltaConfig::Theorem => DeltaSchedule::Theorem { radius, accuracy },
                DeltaConfig::Zero => DeltaSchedule::Zero,
                DeltaConfig::Constant { delta } => DeltaSchedule::Constant { delta },
            };
            let stop = match section.iterations {
                Some(n) => StopRule::Iterations(n),
                None => StopRule::Criterion { radius, accuracy },
            };
            let options = AstOptions {
                radius,
                delta,
                stop,
                initial_constant: params.initial_constant,
                max_iterations: params.max_iterations,
                max_backtracks: params.max_backtracks,
            };
            let run = ast::run_ast(problem, x0, &options)?;
            constants.radius = Some(radius);
            constants.accuracy = Some(accuracy);
            constants.complexity_estimate = problem
                .constants
                .gradient_holder
                .map(|h| ast::complexity_estimate(radius, accuracy, h.exponent, h.constant));
            Ok(Outcome {
                iterations: run.state.k,
                final_value: run.f_x,
                exit: match run.exit {
                    AstExit::StopCriterion => "stop-criterion",
                    AstExit::FixedIterations => "fixed-iterations",
                }
                .to_owned(),
                stop_criterion: run.exit == AstExit::StopCriterion,
                x: run.x,
                trace: run.trace,
                constants,
            })
        }
        method => {
            let run = match method {
                Method::Polyak => {
                    constants.step_constant = problem.constants.lipschitz;
                    subgrad::solve_polyak(problem, &exp.sharpness, exp.start.clone(), params)?
                }
                Method::Normalized => {
                    let m = subgrad::resolve_step_constant(problem, params)?;
                    constants.step_constant = Some(m);
                    subgrad::solve_normalized(problem, &exp.sharpness, m, exp.start.clone(), params)?
                }
                Method::NormalizedInexact => {
                    let m = subgrad::resolve_step_constant(problem, params)?;
                    constants.step_constant = Some(m);
                    constants.inexactness = Some(params.inexactness);
                    constants.target_value = Some(match params.target_value {
                        Some(t) => t,
                        None => problem.optimal_value().map_err(SubgradError::from)? + params.inexactness,
                    });
                    subgrad::solve_normalized_inexact(problem, &exp.sharpness, m, exp.start.clone(), params)?
                }
                Method::Ast => unreachable!(),
            };
            if let (Some(m), Some(a), Some(g0)) = (
                constants.step_constant,
                constants.sharp_modulus,
                constants.homogeneity_floor,
            ) {
                constants.iteration_budget = match subgrad::iterations_for_relative(m, a, gamma, g0) {
                    Ok(k) => Some(k),
                    Err(SubgradError::DegenerateContraction { iterations }) => Some(iterations),
                    Err(_) => None,
                };
            }
            Ok(Outcome {
                x: run.x,
                trace: run.trace,
                exit: match run.exit {
                    subgrad::ExitStatus::Converged => "converged",
                    subgrad::ExitStatus::Stalled => "stalled",
                    subgrad::ExitStatus::MaxIterations => "max-iterations",
                }
                .to_owned(),
                iterations: run.iterations,
                final_value: run.f_x,
                constants,
                stop_criterion: false,
            })
        }
    }
}

/// Trace and report of one experiment.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub trace: Trace,
}

/// Builds, solves and certifies one experiment. With `timing` off in the
/// config, wall-clock columns are zeroed so that reruns are identical.
pub fn run(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutput, HarnessError> {
    let exp = build(config, options)?;
    let mut outcome = solve(&exp)?;
    if !config.report.timing {
        outcome.trace.strip_timing();
    }
    let checks = solver_checks(&exp, &outcome);
    let report = Report::new(&exp, &outcome, checks)?;
    Ok(RunOutput {
        report,
        trace: outcome.trace,
    })
}

/// Full suite: sampled problem checks, projection properties on the feasible
/// set, and the certificates of a solver run. Failures are results.
pub fn run_certificates(config: &ExperimentConfig, options: RunOptions) -> Result<Vec<SampleCheck>, HarnessError> {
    let exp = build(config, options)?;
    let seed = config.solver.params.seed;
    let mut checks = problem_checks(&exp, config.report.samples, seed);
    let pairs = if exp.problem.dim() > 10_000 { 10 } else { 1_000 };
    checks.extend(projection_checks(&exp.problem.feasible_set, pairs, seed));
    match solve(&exp) {
        Ok(outcome) => checks.extend(solver_checks(&exp, &outcome)),
        Err(e) => {
            let mut failed = SampleCheck::new(format!("solver-run: {e}"));
            failed.passed = false;
            checks.push(failed);
        }
    }
    Ok(checks)
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.flush().map_err(io)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

/// Writes `trace.csv`, `report.md` and `report.json` into `dir`.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<(), HarnessError> {
    write_atomic(dir, "trace.csv", output.trace.to_csv_string().as_bytes())?;
    write_atomic(dir, "report.md", render_markdown(&output.report).as_bytes())?;
    let json = serde_json::to_string_pretty(&output.report).expect("report serializes");
    write_atomic(dir, "report.json", json.as_bytes())?;
    Ok(())
}
