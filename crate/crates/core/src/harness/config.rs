use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::SetSpec;
use crate::problem::SolverConfig;

/// Default dimension of the shifted-ball problem, and the one selected by
/// the large-scale flag.
pub const DEFAULT_BALL_DIM: usize = 1_000;
pub const LARGE_BALL_DIM: usize = 1_000_000;

/// One experiment: a problem, an optional transform, a solver and report
/// options. Unknown fields are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub problem: ProblemConfig,
    /// Replace `f` by `(f - f*)^(1/power)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformConfig>,
    /// Overrides of the problem's declared sharpness constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<SharpnessOverride>,
    /// Starting point; defaults to the least-norm feasible point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    pub solver: SolverSection,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `||x||` over the unit ball centred at `2p`, `p = (1, ..., 1)/sqrt(n)`.
    NormShiftedBall {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    /// `||Ax - b||` with a generated `A` of the given condition number.
    LinearResidual {
        n: usize,
        #[serde(default = "one")]
        condition: f64,
        #[serde(default)]
        seed: u64,
        /// Apply random rotations; without them `A` is diagonal.
        #[serde(default = "yes")]
        rotate: bool,
    },
    DistanceToSet {
        target: SetSpec,
    },
    WeaklyQuasiconvexScalar {
        #[serde(default = "one_usize")]
        n: usize,
    },
    /// `||x - c||^p`.
    PowerNorm {
        center: Vec<f64>,
        power: f64,
    },
    /// `|<u1, x>| + sqrt(3) |<u2, x>|` over `{x_1 >= 1}`, axes rotated by
    /// `angle`.
    TiltedL1 {
        #[serde(default = "default_angle")]
        angle: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_angle() -> f64 {
    PI / 9.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub power: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharp_modulus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_quasiconvexity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ast,
    Polyak,
    Normalized,
    NormalizedInexact,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Ast => "ast",
            Method::Polyak => "polyak",
            Method::Normalized => "normalized",
            Method::NormalizedInexact => "normalized-inexact",
        }
    }
}

/// Slack schedule of the accelerated method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeltaConfig {
    /// The schedule that carries the relative-accuracy guarantee.
    #[default]
    Theorem,
    Zero,
    Constant {
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Method,
    #[serde(default)]
    pub params: SolverConfig,
    /// Accelerated method only.
    #[serde(default)]
    pub delta: DeltaConfig,
    /// Accelerated method only: run exactly this many steps instead of
    /// stopping on the accumulator criterion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Iteration counts for the report table; defaults to 10, 15, ..., 100
    /// where the trace reaches them, plus the final iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    /// Keep wall-clock times; without them reruns are byte-identical.
    #[serde(default = "yes")]
    pub timing: bool,
    /// Sample count for the problem certificates.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            checkpoints: None,
            timing: true,
            samples: default_samples(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
