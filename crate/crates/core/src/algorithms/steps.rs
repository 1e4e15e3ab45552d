use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vi::{Domain, Operator};
use crate::Point;

/// Step-size schedule `(η_s)` indexed by the per-slot update count `s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η_s = 1 / (μ s)`.
    InverseMuT(f64),
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant(eta) if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::config("eta", "step size must be positive"))
            }
            StepSchedule::InverseMuT(mu) if !(mu > 0.0 && mu.is_finite()) => {
                Err(Error::config("mu", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn eta(&self, s: usize) -> f64 {
        debug_assert!(s >= 1);
        match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InverseMuT(mu) => 1.0 / (mu * s as f64),
        }
    }
}

/// Projected forward step `Proj(z − η F(z))`.
pub fn forward_step(op: &Operator, domain: &Domain, z: &Point, eta: f64) -> Result<Point> {
    let g = op.evaluate(z)?;
    domain.project(&(z - g * eta))
}

/// Resolvent `(I + F)^{-1} z` of an affine operator `F(x) = Ax + b`, i.e. the
/// solution of `(I + A) z′ = z − b`.
pub fn resolvent_step(op: &Operator, z: &Point) -> Result<Point> {
    let (a, b) = op.as_affine().ok_or(Error::NotAffine)?;
    if z.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), actual: z.len() });
    }
    let system = DMatrix::identity(b.len(), b.len()) + a;
    system.lu().solve(&(z - b)).ok_or(Error::Singular)
}

/// Affine surrogate `z ↦ g + μ (z − z_t)` built from one evaluation `g = F_t(z_t)`.
pub fn make_surrogate(g: &Point, z_t: &Point, mu: f64) -> Result<Operator> {
    if !(mu > 0.0) {
        return Err(Error::config("mu", "must be positive"));
    }
    let d = g.len();
    let offset = g - z_t * mu;
    Ok(Operator::affine(DMatrix::identity(d, d) * mu, offset)?.with_mu(mu).with_lip(mu))
}
