//! Operators `F: Z -> R^d` together with their regularity constants.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::Point;

/// Logistic function `e^u / (1 + e^u)`, evaluated without overflow.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)`, evaluated without overflow.
pub fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Increasing link function of a generalized linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    Identity,
    /// `u ↦ scale · σ(u)`.
    ScaledLogistic {
        scale: f64,
    },
}

impl Link {
    pub fn apply(&self, u: f64) -> f64 {
        match *self {
            Link::Identity => u,
            Link::ScaledLogistic { scale } => scale * sigmoid(u),
        }
    }

    /// Antiderivative of the link, used as the per-sample potential.
    fn primitive(&self, u: f64) -> f64 {
        match *self {
            Link::Identity => 0.5 * u * u,
            Link::ScaledLogistic { scale } => scale * softplus(u),
        }
    }

    /// Upper bound on the link's derivative.
    pub fn max_slope(&self) -> f64 {
        match *self {
            Link::Identity => 1.0,
            Link::ScaledLogistic { scale } => scale / 4.0,
        }
    }

    /// Lower bound on the link's derivative over the real line.
    pub fn min_slope(&self) -> f64 {
        match *self {
            Link::Identity => 1.0,
            Link::ScaledLogistic { .. } => 0.0,
        }
    }
}

type MapFn = dyn Fn(&Point) -> Point + Send + Sync;
type PotentialFn = dyn Fn(&Point) -> f64 + Send + Sync;

/// The functional form of an operator.
#[derive(Clone)]
pub enum OperatorKind {
    /// `F(x) = A x + b`.
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
    /// Gradient of `log(1 + exp(xᵀAx / 2))`: `F(x) = σ(xᵀAx/2) A x`.
    ExpQuadratic { matrix: DMatrix<f64> },
    /// `F(Z) = (1/n) Σ a_j (φ(⟨Z, a_j⟩) − b_j) + reg · Z` with rows `a_j` of `features`.
    Glm { features: DMatrix<f64>, targets: DVector<f64>, link: Link, reg: f64 },
    /// Arbitrary map, optionally with a scalar potential whose gradient it is.
    Custom { dim: usize, map: Arc<MapFn>, potential: Option<Arc<PotentialFn>> },
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Affine { matrix, offset } => {
                f.debug_struct("Affine").field("matrix", matrix).field("offset", offset).finish()
            }
            OperatorKind::ExpQuadratic { matrix } => f.debug_struct("ExpQuadratic").field("matrix", matrix).finish(),
            OperatorKind::Glm { features, link, reg, .. } => {
                f.debug_struct("Glm").field("samples", &features.nrows()).field("link", link).field("reg", reg).finish()
            }
            OperatorKind::Custom { dim, potential, .. } => {
                f.debug_struct("Custom").field("dim", dim).field("has_potential", &potential.is_some()).finish()
            }
        }
    }
}

/// A continuous operator with optional metadata.
///
/// Clones share one evaluation counter, so counting survives the operator being
/// handed around by a problem sequence.
#[derive(Clone, Debug)]
pub struct Operator {
    kind: OperatorKind,
    /// Strong-monotonicity constant μ.
    pub mu: Option<f64>,
    /// Lipschitz constant L.
    pub lip: Option<f64>,
    /// Bound G on `‖F‖` over the domain.
    pub gbound: Option<f64>,
    /// Solution when analytically known.
    pub solution: Option<Point>,
    evals: Arc<AtomicU64>,
}

impl Operator {
    pub fn new(kind: OperatorKind) -> Self {
        Operator { kind, mu: None, lip: None, gbound: None, solution: None, evals: Arc::default() }
    }

    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: offset.len() });
        }
        Ok(Self::new(OperatorKind::Affine { matrix, offset }))
    }

    pub fn exp_quadratic(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::config("matrix", "must be square"));
        }
        Ok(Self::new(OperatorKind::ExpQuadratic { matrix }))
    }

    pub fn glm(features: DMatrix<f64>, targets: DVector<f64>, link: Link, reg: f64) -> Result<Self> {
        if features.nrows() != targets.len() {
            return Err(Error::LengthMismatch { left: features.nrows(), right: targets.len() });
        }
        if features.nrows() == 0 {
            return Err(Error::config("samples", "need at least one sample"));
        }
        Ok(Self::new(OperatorKind::Glm { features, targets, link, reg }))
    }

    pub fn custom<F>(dim: usize, map: F) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        Self::new(OperatorKind::Custom { dim, map: Arc::new(map), potential: None })
    }

    pub fn gradient_of<F, P>(dim: usize, map: F, potential: P) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
        P: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self::new(OperatorKind::Custom { dim, map: Arc::new(map), potential: Some(Arc::new(potential)) })
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_lip(mut self, lip: f64) -> Self {
        self.lip = Some(lip);
        self
    }

    pub fn with_gbound(mut self, g: f64) -> Self {
        self.gbound = Some(g);
        self
    }

    pub fn with_solution(mut self, z: Point) -> Self {
        self.solution = Some(z);
        self
    }

    /// Detaches the evaluation counter from previous clones.
    pub fn with_fresh_counter(mut self) -> Self {
        self.evals = Arc::default();
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Affine { offset, .. } => offset.len(),
            OperatorKind::ExpQuadratic { matrix } => matrix.nrows(),
            OperatorKind::Glm { features, .. } => features.ncols(),
            OperatorKind::Custom { dim, .. } => *dim,
        }
    }

    /// Number of evaluations performed through any clone of this operator.
    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// `F(p)`; fails on dimension mismatch or a non-finite output.
    pub fn evaluate(&self, p: &Point) -> Result<Point> {
        let dim = self.dim();
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: p.len() });
        }
        self.evals.fetch_add(1, Ordering::Relaxed);
        let value = match &self.kind {
            OperatorKind::Affine { matrix, offset } => matrix * p + offset,
            OperatorKind::ExpQuadratic { matrix } => {
                let ax = matrix * p;
                ax.scale(sigmoid(0.5 * p.dot(&ax)))
            }
            OperatorKind::Glm { features, targets, link, reg } => {
                let n = features.nrows() as f64;
                let inner = features * p;
                let residual = DVector::from_iterator(
                    inner.len(),
                    inner.iter().zip(targets.iter()).map(|(u, b)| link.apply(*u) - b),
                );
                features.tr_mul(&residual) / n + p.scale(*reg)
            }
            OperatorKind::Custom { map, .. } => {
                let v = map(p);
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
                }
                v
            }
        };
        if value.iter().all(|v| v.is_finite()) {
            Ok(value)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// The scalar potential `f` with `F = ∇f`, when one is known.
    pub fn potential(&self, p: &Point) -> Option<f64> {
        match &self.kind {
            OperatorKind::Affine { matrix, offset } => {
                let sym = (matrix - matrix.transpose()).abs().max() <= 1e-12 * (1.0 + matrix.abs().max());
                sym.then(|| 0.5 * p.dot(&(matrix * p)) + offset.dot(p))
            }
            OperatorKind::ExpQuadratic { matrix } => Some(softplus(0.5 * p.dot(&(matrix * p)))),
            OperatorKind::Glm { features, targets, link, reg } => {
                let n = features.nrows() as f64;
                let inner = features * p;
                let data: f64 = inner.iter().zip(targets.iter()).map(|(u, b)| link.primitive(*u) - b * u).sum();
                Some(data / n + 0.5 * reg * p.norm_squared())
            }
            OperatorKind::Custom { potential, .. } => potential.as_ref().map(|f| f(p)),
        }
    }

    /// Returns `(A, b)` when the operator is affine.
    pub fn as_affine(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        match &self.kind {
            OperatorKind::Affine { matrix, offset } => Some((matrix, offset)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn exp_quadratic_vanishes_at_origin() {
        let op = Operator::exp_quadratic(dmatrix![4.0]).unwrap();
        assert_eq!(op.evaluate(&dvector![0.0]).unwrap(), dvector![0.0]);
    }

    #[test]
    fn exp_quadratic_matches_finite_difference() {
        let op = Operator::exp_quadratic(dmatrix![4.0]).unwrap();
        let v = op.evaluate(&dvector![1.0]).unwrap()[0];
        assert!((v - sigmoid(2.0) * 4.0).abs() < 1e-15);
        // independent route: central difference of log(1 + e^{2x^2})
        let f = |x: f64| (1.0 + (2.0 * x * x).exp()).ln();
        let h = 1e-5;
        let fd = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
        assert!((v - fd).abs() < 1e-6, "{v} vs {fd}");
    }

    #[test]
    fn glm_single_identity_sample() {
        let op = Operator::glm(dmatrix![1.0], dvector![0.0], Link::Identity, 0.0).unwrap();
        assert_eq!(op.evaluate(&dvector![2.0]).unwrap(), dvector![2.0]);
    }

    #[test]
    fn counter_is_shared_between_clones() {
        let op = Operator::affine(dmatrix![1.0], dvector![0.0]).unwrap();
        let other = op.clone();
        op.evaluate(&dvector![1.0]).unwrap();
        other.evaluate(&dvector![1.0]).unwrap();
        assert_eq!(op.evaluations(), 2);
        let fresh = other.with_fresh_counter();
        assert_eq!(fresh.evaluations(), 0);
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let op = Operator::custom(1, |x: &Point| x.map(|v| v.ln()));
        assert_eq!(op.evaluate(&dvector![-1.0]), Err(Error::NonFinite));
    }

    #[test]
    fn dimension_checked() {
        let op = Operator::exp_quadratic(dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        assert!(matches!(op.evaluate(&dvector![1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn stable_logistic_helpers() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
