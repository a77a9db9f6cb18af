//! Feasible sets and Euclidean projection onto them.
//!
//! Every set here is nonempty, closed and convex by construction, so the
//! projection is a well defined single point. Balls, boxes and halfspaces use
//! closed forms. Intersections use Dykstra's alternating scheme, which (unlike
//! plain alternating projections) converges to the nearest point of the
//! intersection rather than to an arbitrary point of it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::{check_dims, dot, norm2, Vector, VectorError};

/// Inner-iteration cap for intersection projections.
pub const INTERSECTION_MAX_ITERS: usize = 10_000;
/// Successive-iterate distance at which Dykstra's scheme stops.
pub const INTERSECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("intersection projection did not converge in {iterations} iterations (last step {last_step:e})")]
    NotConverged {
        iterations: usize,
        last_step: f64,
        last_iterate: Vector,
    },
}

/// A closed convex subset of R^n.
///
/// Halfspaces are `{x : <normal, x> <= offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "kebab-case",
    try_from = "RawSetSpec",
    deny_unknown_fields
)]
pub enum SetSpec {
    WholeSpace {
        n: usize,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    Box {
        lower: Vector,
        upper: Vector,
    },
    Halfspace {
        normal: Vector,
        offset: f64,
    },
    Intersection {
        first: std::boxed::Box<SetSpec>,
        second: std::boxed::Box<SetSpec>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum RawSetSpec {
    WholeSpace {
        n: usize,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    Box {
        lower: Vector,
        upper: Vector,
    },
    Halfspace {
        normal: Vector,
        offset: f64,
    },
    Intersection {
        first: std::boxed::Box<SetSpec>,
        second: std::boxed::Box<SetSpec>,
    },
}

impl TryFrom<RawSetSpec> for SetSpec {
    type Error = GeometryError;

    fn try_from(raw: RawSetSpec) -> Result<Self, Self::Error> {
        let set = match raw {
            RawSetSpec::WholeSpace { n } => SetSpec::WholeSpace { n },
            RawSetSpec::Ball { center, radius } => SetSpec::Ball { center, radius },
            RawSetSpec::Box { lower, upper } => SetSpec::Box { lower, upper },
            RawSetSpec::Halfspace { normal, offset } => SetSpec::Halfspace { normal, offset },
            RawSetSpec::Intersection { first, second } => SetSpec::Intersection { first, second },
        };
        set.validate()?;
        Ok(set)
    }
}

impl SetSpec {
    pub fn whole_space(n: usize) -> Result<Self, GeometryError> {
        let set = SetSpec::WholeSpace { n };
        set.validate()?;
        Ok(set)
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        let set = SetSpec::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self, GeometryError> {
        let set = SetSpec::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        let set = SetSpec::Halfspace { normal, offset };
        set.validate()?;
        Ok(set)
    }

    pub fn intersection(first: SetSpec, second: SetSpec) -> Result<Self, GeometryError> {
        let set = SetSpec::Intersection {
            first: Box::new(first),
            second: Box::new(second),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            SetSpec::WholeSpace { n } => *n,
            SetSpec::Ball { center, .. } => center.dim(),
            SetSpec::Box { lower, .. } => lower.dim(),
            SetSpec::Halfspace { normal, .. } => normal.dim(),
            SetSpec::Intersection { first, .. } => first.dim(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SetSpec::WholeSpace { .. } => "whole-space",
            SetSpec::Ball { .. } => "ball",
            SetSpec::Box { .. } => "box",
            SetSpec::Halfspace { .. } => "halfspace",
            SetSpec::Intersection { .. } => "intersection",
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let invalid = |msg: String| Err(GeometryError::InvalidSet(msg));
        match self {
            SetSpec::WholeSpace { n } => {
                if *n == 0 {
                    return invalid("whole-space dimension must be at least 1".into());
                }
            }
            SetSpec::Ball { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return invalid(format!("ball radius must be positive and finite, got {radius}"));
                }
            }
            SetSpec::Box { lower, upper } => {
                check_dims(lower.dim(), upper.dim())?;
                if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
                    return invalid(format!(
                        "box lower bound exceeds upper bound at coordinate {i} ({} > {})",
                        lower[i], upper[i]
                    ));
                }
            }
            SetSpec::Halfspace { normal, offset } => {
                if norm2(normal) == 0.0 {
                    return invalid("halfspace normal must be nonzero".into());
                }
                if !offset.is_finite() {
                    return invalid(format!("halfspace offset must be finite, got {offset}"));
                }
            }
            SetSpec::Intersection { first, second } => {
                first.validate()?;
                second.validate()?;
                check_dims(first.dim(), second.dim())?;
            }
        }
        Ok(())
    }

    /// Wraps the set in an intersection with `Ball(center, radius)`.
    pub fn localize(self, center: Vector, radius: f64) -> Result<SetSpec, GeometryError> {
        let ball = SetSpec::ball(center, radius)?;
        SetSpec::intersection(self, ball)
    }
}

/// Euclidean projection of `x` onto `set`.
pub fn project(set: &SetSpec, x: &Vector) -> Result<Vector, GeometryError> {
    check_dims(set.dim(), x.dim())?;
    match set {
        SetSpec::WholeSpace { .. } => Ok(x.clone()),
        SetSpec::Ball { center, radius } => {
            let offset = x.sub(center);
            let dist = norm2(&offset);
            if dist <= *radius {
                Ok(x.clone())
            } else {
                Ok(center.add_scaled(radius / dist, &offset))
            }
        }
        SetSpec::Box { lower, upper } => Ok(Vector::from_raw(
            x.iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
        )),
        SetSpec::Halfspace { normal, offset } => {
            let violation = dot(normal, x)? - offset;
            if violation <= 0.0 {
                Ok(x.clone())
            } else {
                let nn = dot(normal, normal)?;
                Ok(x.add_scaled(-violation / nn, normal))
            }
        }
        SetSpec::Intersection { first, second } => project_intersection(first, second, x),
    }
}

fn project_intersection(a: &SetSpec, b: &SetSpec, x: &Vector) -> Result<Vector, GeometryError> {
    // If the projection onto one operand already lies in the other, it is the
    // projection onto the intersection.
    let pa = project(a, x)?;
    if exactly_inside(b, &pa)? {
        return Ok(pa);
    }
    let pb = project(b, x)?;
    if exactly_inside(a, &pb)? {
        return Ok(pb);
    }

    let n = x.dim();
    let mut current = x.clone();
    let mut p = Vector::zeros(n);
    let mut q = Vector::zeros(n);
    let mut last_step = f64::INFINITY;
    for _ in 0..INTERSECTION_MAX_ITERS {
        let shifted = current.add(&p);
        let y = project(a, &shifted)?;
        p = shifted.sub(&y);
        let shifted = y.add(&q);
        let next = project(b, &shifted)?;
        q = shifted.sub(&next);
        last_step = next.dist(&current);
        current = next;
        if last_step <= INTERSECTION_TOL {
            return Ok(current);
        }
    }
    Err(GeometryError::NotConverged {
        iterations: INTERSECTION_MAX_ITERS,
        last_step,
        last_iterate: current,
    })
}

fn exactly_inside(set: &SetSpec, x: &Vector) -> Result<bool, GeometryError> {
    let scale = 1.0 + norm2(x);
    Ok(distance(set, x)? <= 1e-15 * scale)
}

/// Euclidean distance from `x` to `set`.
pub fn distance(set: &SetSpec, x: &Vector) -> Result<f64, GeometryError> {
    check_dims(set.dim(), x.dim())?;
    match set {
        SetSpec::WholeSpace { .. } => Ok(0.0),
        SetSpec::Ball { center, radius } => Ok((x.dist(center) - radius).max(0.0)),
        SetSpec::Halfspace { normal, offset } => Ok(((dot(normal, x)? - offset) / norm2(normal)).max(0.0)),
        SetSpec::Box { .. } | SetSpec::Intersection { .. } => Ok(x.dist(&project(set, x)?)),
    }
}

/// Whether `x` lies within distance `tol` of `set`.
pub fn contains(set: &SetSpec, x: &Vector, tol: f64) -> Result<bool, GeometryError> {
    match distance(set, x) {
        Ok(d) => Ok(d <= tol),
        // An unconverged intersection projection still bounds the distance
        // from below by the distance to each operand.
        Err(GeometryError::NotConverged { .. }) => match set {
            SetSpec::Intersection { first, second } => Ok(contains(first, x, tol)? && contains(second, x, tol)?),
            _ => unreachable!("only intersections iterate"),
        },
        Err(e) => Err(e),
    }
}

/// The point of `set` closest to the origin, used as the starting point of
/// the relative-accuracy methods.
pub fn min_norm_point(set: &SetSpec) -> Result<Vector, GeometryError> {
    project(set, &Vector::zeros(set.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(data: &[f64]) -> Vector {
        Vector::from_slice(data).unwrap()
    }

    fn unit_ones(n: usize) -> Vector {
        Vector::filled(n, 1.0 / (n as f64).sqrt())
    }

    #[test]
    fn ball_projection_of_origin() {
        let p = unit_ones(4);
        let ball = SetSpec::ball(p.scale(2.0), 1.0).unwrap();
        let got = project(&ball, &Vector::zeros(4)).unwrap();
        assert!(got.dist(&p) < 1e-15);
        let x0 = min_norm_point(&ball).unwrap();
        assert!((x0.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn feasible_points_are_fixed() {
        let x = v(&[0.3, -0.2]);
        let sets = [
            SetSpec::whole_space(2).unwrap(),
            SetSpec::ball(v(&[0.0, 0.0]), 1.0).unwrap(),
            SetSpec::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap(),
            SetSpec::halfspace(v(&[1.0, 0.0]), 0.3).unwrap(),
        ];
        for set in &sets {
            assert_eq!(project(set, &x).unwrap(), x, "{}", set.tag());
        }
    }

    #[test]
    fn box_clamp() {
        let b = SetSpec::boxed(v(&[1.0, 1.0]), v(&[2.0, 2.0])).unwrap();
        assert_eq!(project(&b, &v(&[0.0, 3.0])).unwrap(), v(&[1.0, 2.0]));
        let b = SetSpec::boxed(Vector::filled(3, 1.0), Vector::filled(3, 2.0)).unwrap();
        assert_eq!(min_norm_point(&b).unwrap(), Vector::filled(3, 1.0));
    }

    #[test]
    fn whole_space_min_norm_is_origin() {
        let s = SetSpec::whole_space(3).unwrap();
        assert_eq!(min_norm_point(&s).unwrap(), Vector::zeros(3));
    }

    #[test]
    fn halfspace_boundary_and_tolerance() {
        let h = SetSpec::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        let on = v(&[0.0, 5.0]);
        assert_eq!(project(&h, &on).unwrap(), on);
        assert!(contains(&h, &v(&[-1e-12, 0.0]), 1e-9).unwrap());
        assert!(contains(&h, &v(&[1e-12, 0.0]), 1e-9).unwrap());
        assert!(!contains(&h, &v(&[1e-3, 0.0]), 1e-9).unwrap());
        assert_eq!(project(&h, &v(&[2.0, 1.0])).unwrap(), v(&[0.0, 1.0]));
    }

    #[test]
    fn ball_contains() {
        let b = SetSpec::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(contains(&b, &v(&[0.3, 0.4]), 0.0).unwrap());
        assert!(!contains(&b, &v(&[1.2, 1.6]), 1e-9).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = SetSpec::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(matches!(
            project(&b, &v(&[1.0])),
            Err(GeometryError::Vector(VectorError::DimensionMismatch { .. }))
        ));
        assert!(SetSpec::intersection(b, SetSpec::whole_space(3).unwrap()).is_err());
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(SetSpec::ball(v(&[0.0]), 0.0).is_err());
        assert!(SetSpec::ball(v(&[0.0]), -1.0).is_err());
        assert!(SetSpec::boxed(v(&[1.0]), v(&[0.0])).is_err());
        assert!(SetSpec::halfspace(v(&[0.0, 0.0]), 1.0).is_err());
        assert!(SetSpec::whole_space(0).is_err());
    }

    #[test]
    fn intersection_uses_closed_form_when_possible() {
        // Box projection of x already lies in the ball.
        let ball = SetSpec::ball(v(&[0.0, 0.0]), 10.0).unwrap();
        let bx = SetSpec::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        let set = SetSpec::intersection(ball, bx).unwrap();
        assert_eq!(project(&set, &v(&[3.0, 0.5])).unwrap(), v(&[1.0, 0.5]));
    }

    #[test]
    fn intersection_dykstra_finds_nearest_point() {
        // Unit ball intersected with {x1 >= 0.5}; project (-1, 2).
        // The nearest point lies on the arc: it is the radial projection of x
        // only if that is in the halfspace, which it is not here.
        let ball = SetSpec::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let half = SetSpec::halfspace(v(&[-1.0, 0.0]), -0.5).unwrap();
        let set = SetSpec::intersection(ball, half).unwrap();
        let got = project(&set, &v(&[-1.0, 2.0])).unwrap();
        // The corner (0.5, sqrt(0.75)) is the closest feasible point.
        let corner = v(&[0.5, 0.75f64.sqrt()]);
        assert!(got.dist(&corner) < 1e-9, "{got:?}");
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let set = SetSpec::intersection(
            SetSpec::ball(v(&[1.0, 2.0]), 0.5).unwrap(),
            SetSpec::halfspace(v(&[0.0, 1.0]), 2.0).unwrap(),
        )
        .unwrap();
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(serde_json::from_str::<SetSpec>(&json).unwrap(), set);

        let bad = r#"{"type":"ball","center":[0.0],"radius":-1.0}"#;
        assert!(serde_json::from_str::<SetSpec>(bad).is_err());
        let unknown = r#"{"type":"ball","center":[0.0],"radius":1.0,"extra":1}"#;
        assert!(serde_json::from_str::<SetSpec>(unknown).is_err());
    }
}
