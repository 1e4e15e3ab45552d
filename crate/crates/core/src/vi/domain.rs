//! Closed convex feasible sets with exact Euclidean projections.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::Point;

/// A closed convex subset of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// The whole space `R^d`.
    Unbounded { dim: usize },
    /// Axis-aligned box `lower <= x <= upper`.
    Box { lower: Point, upper: Point },
    /// Closed Euclidean ball.
    Ball { center: Point, radius: f64 },
    /// One-dimensional interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

impl Domain {
    pub fn unbounded(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dim", "must be at least 1"));
        }
        Ok(Domain::Unbounded { dim })
    }

    pub fn cube(lower: Point, upper: Point) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), actual: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::config("lower", "box must have dimension at least 1"));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::config("upper", "box needs finite bounds with lower <= upper"));
        }
        Ok(Domain::Box { lower, upper })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::config("radius", "must be positive and finite"));
        }
        if center.is_empty() {
            return Err(Error::config("center", "ball must have dimension at least 1"));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config("hi", "interval needs finite bounds with lo <= hi"));
        }
        Ok(Domain::Interval { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Unbounded { dim } => *dim,
            Domain::Box { lower, .. } => lower.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::Interval { .. } => 1,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::Unbounded { .. })
    }

    /// Exact diameter `max ‖Z − Z′‖`, `None` for unbounded sets.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Domain::Unbounded { .. } => None,
            Domain::Box { lower, upper } => Some((upper - lower).norm()),
            Domain::Ball { radius, .. } => Some(2.0 * radius),
            Domain::Interval { lo, hi } => Some(hi - lo),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Unbounded { .. } => true,
            Domain::Box { lower, upper } => {
                p.iter().zip(lower.iter().zip(upper.iter())).all(|(x, (l, u))| l <= x && x <= u)
            }
            Domain::Ball { center, radius } => (p - center).norm() <= *radius * (1.0 + 1e-12),
            Domain::Interval { lo, hi } => *lo <= p[0] && p[0] <= *hi,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &Point) -> Result<Point> {
        let dim = self.dim();
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: p.len() });
        }
        Ok(match self {
            Domain::Unbounded { .. } => p.clone(),
            Domain::Box { lower, upper } => DVector::from_iterator(
                dim,
                p.iter().zip(lower.iter().zip(upper.iter())).map(|(x, (l, u))| x.clamp(*l, *u)),
            ),
            Domain::Ball { center, radius } => {
                let offset = p - center;
                let norm = offset.norm();
                // The center projects to itself, so norm = 0 never divides. The slack keeps
                // already-projected points fixed under rounding.
                if norm <= *radius * (1.0 + 4.0 * f64::EPSILON) {
                    p.clone()
                } else {
                    center + offset * (*radius / norm)
                }
            }
            Domain::Interval { lo, hi } => DVector::from_element(1, p[0].clamp(*lo, *hi)),
        })
    }

    /// Draws a point uniformly from the domain intersected with `[-half_width, half_width]^d`.
    ///
    /// Balls are sampled uniformly in the ball itself (radius times `u^{1/d}` along a
    /// Gaussian direction), ignoring the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, half_width: f64) -> Point {
        match self {
            Domain::Unbounded { dim } => DVector::from_fn(*dim, |_, _| rng.random_range(-half_width..=half_width)),
            Domain::Box { lower, upper } => DVector::from_fn(lower.len(), |i, _| {
                let lo = lower[i].max(-half_width);
                let hi = upper[i].min(half_width);
                if lo < hi {
                    rng.random_range(lo..=hi)
                } else {
                    // Box lies outside the sampling window along this axis.
                    lower[i].clamp(-half_width, half_width).clamp(lower[i], upper[i])
                }
            }),
            Domain::Ball { center, radius } => {
                use rand_distr::{Distribution, StandardNormal};
                let d = center.len();
                let dir = loop {
                    let g: Point = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
                    let n = g.norm();
                    if n > 1e-12 {
                        break g / n;
                    }
                };
                let u: f64 = rng.random();
                center + dir * (*radius * u.powf(1.0 / d as f64))
            }
            Domain::Interval { lo, hi } => {
                let a = lo.max(-half_width);
                let b = hi.min(half_width);
                let x = if a < b { rng.random_range(a..=b) } else { lo.clamp(-half_width, half_width).clamp(*lo, *hi) };
                DVector::from_element(1, x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn box_clamps() {
        let d = Domain::cube(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap();
        assert_eq!(d.project(&dvector![2.0, 0.5]).unwrap(), dvector![1.0, 0.5]);
    }

    #[test]
    fn unbounded_is_identity() {
        let d = Domain::unbounded(2).unwrap();
        assert_eq!(d.project(&dvector![3.0, -7.0]).unwrap(), dvector![3.0, -7.0]);
    }

    #[test]
    fn ball_rescales_radially() {
        let d = Domain::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let p = d.project(&dvector![3.0, 4.0]).unwrap();
        assert!((p - dvector![0.6, 0.8]).norm() < 1e-15);
        assert_eq!(d.project(&dvector![0.0, 0.0]).unwrap(), dvector![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        assert_eq!(d.project(&dvector![0.0, 0.0]), Err(Error::DimensionMismatch { expected: 1, actual: 2 }));
    }

    #[test]
    fn diameters() {
        assert_eq!(Domain::interval(-1.0, 1.0).unwrap().diameter(), Some(2.0));
        assert_eq!(Domain::ball(dvector![1.0], 0.5).unwrap().diameter(), Some(1.0));
        let b = Domain::cube(dvector![0.0, 0.0], dvector![3.0, 4.0]).unwrap();
        assert_eq!(b.diameter(), Some(5.0));
        assert_eq!(Domain::unbounded(3).unwrap().diameter(), None);
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(Domain::cube(dvector![1.0], dvector![0.0]).is_err());
        assert!(Domain::ball(dvector![0.0], 0.0).is_err());
        assert!(Domain::interval(2.0, 1.0).is_err());
        assert!(Domain::unbounded(0).is_err());
    }

    fn domains() -> Vec<Domain> {
        vec![
            Domain::unbounded(2).unwrap(),
            Domain::cube(dvector![-1.0, 0.0], dvector![2.0, 0.5]).unwrap(),
            Domain::ball(dvector![0.5, -0.5], 1.5).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn projection_is_nonexpansive_and_idempotent(
            x in prop::array::uniform2(-20.0f64..20.0),
            y in prop::array::uniform2(-20.0f64..20.0),
        ) {
            let x = dvector![x[0], x[1]];
            let y = dvector![y[0], y[1]];
            for d in domains() {
                let px = d.project(&x).unwrap();
                let py = d.project(&y).unwrap();
                prop_assert!((&px - &py).norm() <= (&x - &y).norm() + 1e-12);
                prop_assert_eq!(d.project(&px).unwrap(), px.clone());
                prop_assert!(d.contains(&px));
            }
            let iv = Domain::interval(-0.3, 0.7).unwrap();
            let a = iv.project(&dvector![x[0]]).unwrap();
            let b = iv.project(&dvector![y[0]]).unwrap();
            prop_assert!((a[0] - b[0]).abs() <= (x[0] - y[0]).abs());
            prop_assert_eq!(iv.project(&a).unwrap(), a);
        }
    }
}
