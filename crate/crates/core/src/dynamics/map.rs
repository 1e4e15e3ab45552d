use crate::error::{Error, Result};
use crate::scenarios::BuiltScenario;
use crate::vi::{Domain, Operator};
use crate::Point;

/// Divergence threshold for orbits of composed maps.
pub const DEFAULT_ORBIT_THRESHOLD: f64 = 1000.0;

/// One period of fixed-step projected gradient steps, composed in time order.
///
/// `apply` maps `x_{nk+1}` to `x_{(n+1)k+1}`: the step for `F_1` is applied first and
/// the step for `F_k` last.
#[derive(Debug, Clone)]
pub struct GdMap {
    ops: Vec<Operator>,
    domain: Domain,
    eta: f64,
}

impl GdMap {
    pub fn new(ops: Vec<Operator>, domain: Domain, eta: f64) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::config("period", "need at least one operator"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config("eta", "step size must be positive"));
        }
        let dim = domain.dim();
        if let Some(op) = ops.iter().find(|op| op.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: op.dim() });
        }
        let ops = ops.into_iter().map(Operator::with_fresh_counter).collect();
        Ok(GdMap { ops, domain, eta })
    }

    /// Same operators with another step size and private evaluation counters.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        GdMap::new(self.ops.clone(), self.domain.clone(), eta)
    }

    /// The conjugate map that starts at step `r + 1` (zero-based `r`).
    pub fn rotated(&self, r: usize) -> Self {
        let k = self.ops.len();
        let ops = (0..k).map(|i| self.ops[(i + r) % k].clone()).collect();
        GdMap { ops, domain: self.domain.clone(), eta: self.eta }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn period(&self) -> usize {
        self.ops.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn operators(&self) -> &[Operator] {
        &self.ops
    }

    /// `Φ_{η,i}(x) = Proj(x − η F_i(x))` for zero-based `i`.
    pub fn step(&self, i: usize, x: &Point) -> Result<Point> {
        let g = self.ops[i].evaluate(x)?;
        self.domain.project(&(x - g * self.eta))
    }

    /// One full period.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        let mut y = x.clone();
        for i in 0..self.ops.len() {
            y = self.step(i, &y)?;
        }
        Ok(y)
    }

    /// `n` full periods.
    pub fn apply_n(&self, x: &Point, n: usize) -> Result<Point> {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.apply(&y)?;
        }
        Ok(y)
    }

    /// Every per-step iterate over `n_periods` periods, starting with `x`.
    pub fn step_orbit(&self, x: &Point, n_periods: usize) -> Result<Vec<Point>> {
        let k = self.ops.len();
        let mut out = Vec::with_capacity(n_periods * k + 1);
        out.push(x.clone());
        for s in 0..n_periods * k {
            let next = self.step(s % k, &out[s])?;
            out.push(next);
        }
        Ok(out)
    }

    /// Scalar version of [`apply`](Self::apply) for one-dimensional maps; non-finite
    /// results come back as infinities.
    pub fn apply_scalar(&self, x: f64) -> f64 {
        match self.apply(&Point::from_element(1, x)) {
            Ok(y) => y[0],
            Err(_) => f64::INFINITY,
        }
    }

    pub(crate) fn require_1d(&self) -> Result<()> {
        if self.dim() == 1 {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: 1, actual: self.dim() })
        }
    }
}

/// The composed map of one period of a periodic scenario.
pub fn compose_map(scenario: &BuiltScenario, eta: f64) -> Result<GdMap> {
    GdMap::new(scenario.sequence.one_period()?, scenario.domain.clone(), eta)
}

/// How an orbit ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitStatus {
    Bounded,
    /// `points[step]` is the first point with norm above the threshold (or non-finite).
    Diverged {
        step: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub points: Vec<Point>,
    pub status: OrbitStatus,
    pub divergence_threshold: f64,
}

impl Orbit {
    pub fn diverged(&self) -> bool {
        matches!(self.status, OrbitStatus::Diverged { .. })
    }
}

fn escaped(x: &Point, threshold: f64) -> bool {
    !x.iter().all(|v| v.is_finite()) || x.norm() > threshold
}

/// `x0, Φ̄(x0), …, Φ̄^n(x0)`, stopping at the first point beyond `threshold`.
pub fn iterate_orbit(map: &GdMap, x0: &Point, n_steps: usize, threshold: f64) -> Orbit {
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(x0.clone());
    let mut status = OrbitStatus::Bounded;
    if escaped(x0, threshold) {
        status = OrbitStatus::Diverged { step: 0 };
    } else {
        for s in 1..=n_steps {
            let next = map.apply(&points[s - 1]).unwrap_or_else(|_| Point::from_element(map.dim(), f64::INFINITY));
            let out = escaped(&next, threshold);
            points.push(next);
            if out {
                status = OrbitStatus::Diverged { step: s };
                break;
            }
        }
    }
    Orbit { points, status, divergence_threshold: threshold }
}

/// Long-run behaviour of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Converged,
    /// Smallest period `p ≥ 2` of the tail.
    Periodic(usize),
    BoundedAperiodic,
    Diverged,
}

impl Classification {
    pub fn label(&self) -> String {
        match self {
            Classification::Converged => "converged".into(),
            Classification::Periodic(p) => format!("periodic({p})"),
            Classification::BoundedAperiodic => "bounded_aperiodic".into(),
            Classification::Diverged => "diverged".into(),
        }
    }
}

/// Parameters of [`classify_eta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub n_steps: usize,
    pub burn_in: usize,
    pub tol: f64,
    pub max_period: usize,
    pub threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { n_steps: 2000, burn_in: 1000, tol: 1e-8, max_period: 64, threshold: DEFAULT_ORBIT_THRESHOLD }
    }
}

/// Classifies the tail `points[burn_in..]` of a bounded orbit. A tail converges if it
/// stays within `tol` of its last point, or if its increments shrink strictly and the
/// last one is below `tol` (slow monotone approach at small steps).
pub fn classify_orbit(orbit: &Orbit, burn_in: usize, tol: f64, max_period: usize) -> Classification {
    if orbit.diverged() {
        return Classification::Diverged;
    }
    let tail = &orbit.points[burn_in.min(orbit.points.len() - 1)..];
    let last = &tail[tail.len() - 1];
    if tail.iter().all(|x| (x - last).norm() < tol) {
        return Classification::Converged;
    }
    let steps: Vec<f64> = tail.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
    if steps.last().is_some_and(|d| *d < tol) && steps.windows(2).all(|s| s[1] < s[0]) {
        return Classification::Converged;
    }
    for p in 2..=max_period.min(tail.len().saturating_sub(1)) {
        if tail.iter().zip(&tail[p..]).all(|(a, b)| (a - b).norm() < tol) {
            return Classification::Periodic(p);
        }
    }
    Classification::BoundedAperiodic
}

/// Iterates from `x0` and classifies the tail.
pub fn classify_eta(map: &GdMap, x0: &Point, opts: &ClassifyOptions) -> Result<Classification> {
    if opts.burn_in >= opts.n_steps {
        return Err(Error::config("burn_in", "must be smaller than the number of steps"));
    }
    let orbit = iterate_orbit(map, x0, opts.n_steps, opts.threshold);
    Ok(classify_orbit(&orbit, opts.burn_in, opts.tol, opts.max_period))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_scenario, Params, ScenarioId};
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn chaos(eta: f64) -> GdMap {
        let s = build_scenario(ScenarioId::Chaos1d, &Params::new()).unwrap();
        compose_map(&s, eta).unwrap()
    }

    #[test]
    fn single_operator_map_is_the_step() {
        let s = build_scenario(ScenarioId::ExpQuadratic, &Params::new()).unwrap();
        let map = compose_map(&s, 0.7).unwrap();
        let x = dvector![1.3];
        assert_eq!(map.apply(&x).unwrap(), map.step(0, &x).unwrap());
    }

    #[test]
    fn time_order_composition() {
        let map = chaos(1.0);
        let x = dvector![0.8];
        let first = map.step(0, &x).unwrap();
        assert_eq!(map.apply(&x).unwrap(), map.step(1, &first).unwrap());
        let conj = map.rotated(1);
        assert_eq!(conj.apply(&x).unwrap(), map.step(0, &map.step(1, &x).unwrap()).unwrap());
    }

    #[test]
    fn expands_at_eta_two() {
        let map = chaos(2.0);
        for x in [-5.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 5.0] {
            assert!(map.apply_scalar(x).abs() > 2.0 * x.abs());
        }
        assert!(iterate_orbit(&map, &dvector![0.01], 2000, DEFAULT_ORBIT_THRESHOLD).diverged());
    }

    #[test]
    fn small_step_is_near_identity() {
        for eta in [1e-3, 1e-4, 1e-5] {
            let map = chaos(eta);
            for x in [-1.0, 0.3, 2.0] {
                assert!((map.apply_scalar(x) - x).abs() <= 10.0 * eta * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn fixed_point_orbit_is_constant() {
        let orbit = iterate_orbit(&chaos(3.0), &dvector![0.0], 50, DEFAULT_ORBIT_THRESHOLD);
        assert!(orbit.points.iter().all(|p| p[0] == 0.0));
        assert_eq!(orbit.status, OrbitStatus::Bounded);
    }

    #[test]
    fn divergence_marker_ends_the_orbit() {
        let orbit = iterate_orbit(&chaos(2.0), &dvector![0.01], 2000, DEFAULT_ORBIT_THRESHOLD);
        let OrbitStatus::Diverged { step } = orbit.status else { panic!() };
        assert_eq!(orbit.points.len(), step + 1);
        assert!(orbit.points[step].norm() > 1000.0);
        assert!(orbit.points[..step].iter().all(|p| p.norm() <= 1000.0));
    }

    #[test]
    fn classification_examples() {
        let x0 = dvector![-0.1];
        let opts = ClassifyOptions::default();
        assert_eq!(classify_eta(&chaos(0.4), &x0, &opts).unwrap(), Classification::Converged);
        assert_eq!(classify_eta(&chaos(8.0), &x0, &opts).unwrap(), Classification::Converged);
        assert_eq!(classify_eta(&chaos(3.9), &x0, &opts).unwrap(), Classification::Periodic(4));
        assert_eq!(classify_eta(&chaos(6.1), &x0, &opts).unwrap(), Classification::BoundedAperiodic);
        assert_eq!(classify_eta(&chaos(2.0), &x0, &opts).unwrap(), Classification::Diverged);
        // still about 1e-6 away from 0 after 2000 periods, but shrinking geometrically
        assert_eq!(classify_eta(&chaos(8.0 / 3000.0), &x0, &opts).unwrap(), Classification::Converged);
        let bad = ClassifyOptions { burn_in: 2000, ..opts };
        assert!(classify_eta(&chaos(1.0), &x0, &bad).is_err());
    }

    #[test]
    fn approach_to_a_cycle_is_not_convergence() {
        // increments shrink towards the cycle width 1, not towards 0
        let points = (0..=40).map(|n| dvector![(-1f64).powi(n) * (0.5 + 0.5f64.powi(n))]).collect();
        let orbit = Orbit { points, status: OrbitStatus::Bounded, divergence_threshold: 10.0 };
        assert_eq!(classify_orbit(&orbit, 10, 1e-8, 8), Classification::BoundedAperiodic);
        let points = (0..=80).map(|n| dvector![(-1f64).powi(n) * (0.5 + 0.5f64.powi(n))]).collect();
        let orbit = Orbit { points, status: OrbitStatus::Bounded, divergence_threshold: 10.0 };
        assert_eq!(classify_orbit(&orbit, 40, 1e-8, 8), Classification::Periodic(2));
    }

    #[test]
    fn composition_matches_per_step_iteration() {
        let map = chaos(3.9);
        let x = dvector![-0.1];
        let steps = map.step_orbit(&x, 100).unwrap();
        let mut y = x.clone();
        for n in 1..=100 {
            y = map.apply(&y).unwrap();
            assert_eq!(steps[2 * n], y);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn subsequence_boundedness(eta in 0.05f64..8.5, x0 in -3.0f64..3.0) {
            let map = chaos(eta);
            let orbit = iterate_orbit(&map, &dvector![x0], 300, DEFAULT_ORBIT_THRESHOLD);
            let steps = map.step_orbit(&dvector![x0], orbit.points.len() - 1).unwrap_or_default();
            let step_max = steps.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
            if orbit.diverged() {
                prop_assert!(!step_max.is_finite() || step_max > 1000.0);
            } else {
                // odd steps are one gradient step away from bounded points
                let sub_max = orbit.points.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
                prop_assert!(step_max.is_finite());
                prop_assert!(step_max <= sub_max * (1.0 + eta * 0.3275) + 1e-12);
            }
        }
    }
}
