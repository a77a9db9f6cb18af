//! Solvers for nonsmooth convex and quasiconvex minimization with sharp
//! minima or relative-accuracy guarantees, plus the problems and
//! certificates used to check them.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ast;
pub mod geometry;
pub mod harness;
pub mod problem;
pub mod problems;
pub mod subgrad;
pub mod trace;
pub mod vector;

pub use geometry::{GeometryError, SetSpec};
pub use problem::{Constants, Holder, Objective, ProblemError, ProblemSpec, SharpnessSpec, SolutionSet, SolverConfig};
pub use problems::BuiltinProblem;
pub use trace::{StepData, Trace, TraceRecord};
pub use vector::{Vector, VectorError};
