//! Sampled verification of operator regularity and closed-form solutions.
//!
//! Pairs are drawn uniformly from the domain intersected with the sampling box
//! `[-h, h]^d` (default `h = 10`), from a ChaCha8 stream seeded by the caller.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::vi::{Domain, Operator};
use crate::Point;

/// Default half-width of the sampling box.
pub const SAMPLING_HALF_WIDTH: f64 = 10.0;

/// Additive slack on every sampled inequality.
pub const CHECK_SLACK: f64 = 1e-9;

/// Sampling configuration for the pairwise checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub half_width: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Sampler {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Sampler { half_width: SAMPLING_HALF_WIDTH, n_samples, seed }
    }

    pub fn with_half_width(mut self, h: f64) -> Self {
        self.half_width = h;
        self
    }

    fn pairs<'a>(&self, domain: &'a Domain) -> impl Iterator<Item = (Point, Point)> + 'a {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let h = self.half_width;
        (0..self.n_samples).map(move |_| (domain.sample(&mut rng, h), domain.sample(&mut rng, h)))
    }
}

/// Sampled check of `⟨F(Z) − F(Z′), Z − Z′⟩ ≥ μ‖Z − Z′‖²`.
pub fn check_strong_monotone(op: &Operator, mu: f64, domain: &Domain, sampler: Sampler) -> bool {
    sampler.pairs(domain).all(|(z, w)| match (op.evaluate(&z), op.evaluate(&w)) {
        (Ok(fz), Ok(fw)) => {
            let d = &z - &w;
            (fz - fw).dot(&d) >= mu * d.norm_squared() - CHECK_SLACK
        }
        _ => false,
    })
}

/// Sampled check of `‖F(Z) − F(Z′)‖ ≤ L‖Z − Z′‖`.
pub fn check_lipschitz(op: &Operator, lip: f64, domain: &Domain, sampler: Sampler) -> bool {
    sampler.pairs(domain).all(|(z, w)| match (op.evaluate(&z), op.evaluate(&w)) {
        (Ok(fz), Ok(fw)) => (fz - fw).norm() <= lip * (&z - &w).norm() + CHECK_SLACK,
        _ => false,
    })
}

/// Largest sampled ratio `‖F(Z) − F(Z′)‖ / ‖Z − Z′‖`.
pub fn estimate_lipschitz(op: &Operator, domain: &Domain, sampler: Sampler) -> f64 {
    sampler
        .pairs(domain)
        .filter_map(|(z, w)| {
            let d = (&z - &w).norm();
            if d < 1e-12 {
                return None;
            }
            let fz = op.evaluate(&z).ok()?;
            let fw = op.evaluate(&w).ok()?;
            Some((fz - fw).norm() / d)
        })
        .fold(0.0, f64::max)
}

/// Central-difference gradient of a scalar function.
pub fn finite_difference_gradient<F: Fn(&Point) -> f64>(f: F, x: &Point, h: f64) -> Point {
    DVector::from_fn(x.len(), |i, _| {
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

/// Largest absolute deviation between `F` and the central-difference gradient of its
/// potential at sampled points; `None` if the operator has no potential.
pub fn gradient_deviation(op: &Operator, domain: &Domain, sampler: Sampler) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut worst = 0.0f64;
    for _ in 0..sampler.n_samples {
        let x = domain.sample(&mut rng, sampler.half_width);
        op.potential(&x)?;
        let fd = finite_difference_gradient(|p| op.potential(p).unwrap_or(f64::NAN), &x, 1e-5);
        let exact = op.evaluate(&x).ok()?;
        worst = worst.max((exact - fd).amax());
    }
    Some(worst)
}

/// [`gradient_deviation`] divided by `max(1, largest sampled |F|)`.
pub fn relative_gradient_deviation(op: &Operator, domain: &Domain, sampler: Sampler) -> Option<f64> {
    let dev = gradient_deviation(op, domain, sampler)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let scale = (0..sampler.n_samples)
        .filter_map(|_| op.evaluate(&domain.sample(&mut rng, sampler.half_width)).ok())
        .map(|f| f.amax())
        .fold(1.0, f64::max);
    Some(dev / scale)
}

/// Sampled check of `⟨F(Z), Z − Z*⟩ ≥ μ‖Z − Z*‖²`.
pub fn check_restricted_secant(op: &Operator, mu: f64, solution: &Point, domain: &Domain, sampler: Sampler) -> bool {
    sampler.pairs(domain).all(|(z, _)| match op.evaluate(&z) {
        Ok(f) => {
            let d = &z - solution;
            f.dot(&d) >= mu * d.norm_squared() - CHECK_SLACK
        }
        Err(_) => false,
    })
}

/// Stored solution, or `−A⁻¹b` for a positive-definite affine operator on `R^d`.
pub fn analytic_solution(op: &Operator, domain: &Domain) -> Option<Point> {
    if let Some(z) = &op.solution {
        return Some(z.clone());
    }
    if domain.is_bounded() {
        return None;
    }
    let (a, b) = op.as_affine()?;
    let sym = (a + a.transpose()) * 0.5;
    sym.cholesky()?;
    a.clone().lu().solve(&(-b))
}
