use super::map::GdMap;
use crate::error::{Error, Result};

const DIFF_STEP: f64 = 1e-6;
const FLAT_DERIVATIVE: f64 = 1e-12;
/// Points sampled when checking that a map sends an interval into itself.
pub const INTERVAL_CHECK_POINTS: usize = 10_000;

fn iterate(map: &GdMap, x: f64, n: usize) -> f64 {
    let mut y = x;
    for _ in 0..n {
        y = map.apply_scalar(y);
        if !y.is_finite() {
            break;
        }
    }
    y
}

/// A cycle of the composed map found by Newton's method.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Cycle point nearest the initial guess.
    pub fixed_point: f64,
    /// `|Φ̄^p(x) − x|` at `fixed_point`.
    pub residual: f64,
    /// `x, Φ̄(x), …, Φ̄^{p−1}(x)` starting at `fixed_point`.
    pub orbit: Vec<f64>,
    pub iterations: usize,
}

/// Newton's method on `ψ(x) = Φ̄^p(x) − x` with a central-difference derivative.
/// Returns `None` if the iteration stalls, leaves the reals, or runs out of iterations.
pub fn newton_periodic_orbit(
    map: &GdMap,
    p: usize,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Option<PeriodicOrbit>> {
    map.require_1d()?;
    if p == 0 {
        return Err(Error::config("period", "must be at least 1"));
    }
    let psi = |x: f64| iterate(map, x, p) - x;
    let solve = |start: f64, iters: usize| -> Option<(f64, f64, usize)> {
        let mut x = start;
        for it in 0..=iters {
            let r = psi(x);
            if !r.is_finite() {
                return None;
            }
            if r.abs() <= tol {
                return Some((x, r.abs(), it));
            }
            if it == iters {
                break;
            }
            let d = (psi(x + DIFF_STEP) - psi(x - DIFF_STEP)) / (2.0 * DIFF_STEP);
            if !d.is_finite() || d.abs() < FLAT_DERIVATIVE {
                return None;
            }
            x -= r / d;
        }
        None
    };
    let Some((root, residual, iterations)) = solve(x0, max_iter) else {
        return Ok(None);
    };
    let cycle: Vec<f64> = std::iter::successors(Some(root), |y| Some(map.apply_scalar(*y))).take(p).collect();
    let start = (0..p)
        .min_by(|&a, &b| {
            let (da, db) = ((cycle[a] - x0).abs(), (cycle[b] - x0).abs());
            da.total_cmp(&db).then(cycle[a].total_cmp(&cycle[b]))
        })
        .unwrap_or(0);
    // the rotated start is only as accurate as the map's contraction allows; polish it
    let (fixed_point, residual) = match solve(cycle[start], 8) {
        Some((x, r, _)) if start != 0 && (x - cycle[start]).abs() < 1e-6 => (x, r),
        _ => {
            return Ok(Some(PeriodicOrbit { fixed_point: root, residual, orbit: cycle, iterations }));
        }
    };
    let orbit = std::iter::successors(Some(fixed_point), |y| Some(map.apply_scalar(*y))).take(p).collect();
    Ok(Some(PeriodicOrbit { fixed_point, residual, orbit, iterations }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    /// `∏ Φ̄′(x_i)` over the cycle.
    pub multiplier: f64,
    pub stable: bool,
}

/// Multiplier of a cycle of a one-dimensional map from central differences.
pub fn orbit_stability(map: &GdMap, orbit: &[f64]) -> Result<Stability> {
    map.require_1d()?;
    let multiplier = orbit
        .iter()
        .map(|&x| (map.apply_scalar(x + DIFF_STEP) - map.apply_scalar(x - DIFF_STEP)) / (2.0 * DIFF_STEP))
        .product::<f64>();
    Ok(Stability { multiplier, stable: multiplier.abs() < 1.0 })
}

/// A point of least period three together with its trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Period3Point {
    pub x: f64,
    /// `x, Φ̄(x), Φ̄²(x)`.
    pub orbit: Vec<f64>,
    /// Every per-step iterate over three periods, starting at `x`.
    pub step_orbit: Vec<f64>,
}

/// Checks `Φ̄([lo, hi]) ⊆ [lo, hi]` on a uniform sample of the interval.
pub fn check_interval_map(map: &GdMap, lo: f64, hi: f64) -> Result<()> {
    map.require_1d()?;
    for i in 0..INTERVAL_CHECK_POINTS {
        let at = lo + (hi - lo) * i as f64 / (INTERVAL_CHECK_POINTS - 1) as f64;
        let image = map.apply_scalar(at);
        if !(lo..=hi).contains(&image) {
            return Err(Error::NotIntervalMap { lo, hi, at, image });
        }
    }
    Ok(())
}

/// Roots of `x − Φ̄³(x)` on `[lo, hi]` that are not fixed points of `Φ̄`.
///
/// Sign changes on a grid of `n_grid` points are refined by bisection; roots closer than
/// `tol` are merged.
pub fn period3_search(map: &GdMap, lo: f64, hi: f64, n_grid: usize, tol: f64) -> Result<Vec<Period3Point>> {
    if !(lo < hi) {
        return Err(Error::config("interval", "need lo < hi"));
    }
    check_interval_map(map, lo, hi)?;
    if n_grid < 2 {
        return Ok(Vec::new());
    }
    let g = |x: f64| x - iterate(map, x, 3);
    let grid: Vec<f64> = (0..n_grid).map(|i| lo + (hi - lo) * i as f64 / (n_grid - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..n_grid - 1 {
        let (mut a, mut b, mut fa) = (grid[i], grid[i + 1], vals[i]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * vals[i + 1] >= 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = g(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if vals[n_grid - 1] == 0.0 {
        roots.push(grid[n_grid - 1]);
    }
    roots.dedup_by(|b, a| (*b - *a).abs() < tol);
    roots.retain(|&x| (x - map.apply_scalar(x)).abs() >= tol);
    roots
        .into_iter()
        .map(|x| {
            let orbit = vec![x, iterate(map, x, 1), iterate(map, x, 2)];
            let step_orbit = map.step_orbit(&crate::Point::from_element(1, x), 3)?.into_iter().map(|p| p[0]).collect();
            Ok(Period3Point { x, orbit, step_orbit })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::compose_map;
    use crate::scenarios::{build_scenario, Params, ScenarioId};
    use proptest::prelude::*;

    fn chaos(eta: f64) -> GdMap {
        compose_map(&build_scenario(ScenarioId::Chaos1d, &Params::new()).unwrap(), eta).unwrap()
    }

    #[test]
    fn four_cycle_at_3_9() {
        let map = chaos(3.9);
        let cyc = newton_periodic_orbit(&map, 4, -0.1, 1e-10, 100).unwrap().unwrap();
        assert!((cyc.fixed_point + 1.345).abs() < 0.01, "{cyc:?}");
        assert!(cyc.residual <= 1e-10);
        let mut sorted = cyc.orbit.clone();
        sorted.sort_by(f64::total_cmp);
        for (got, want) in sorted.iter().zip([-1.572, -1.345, 5.924, 7.047]) {
            assert!((got - want).abs() < 0.01, "{sorted:?}");
        }
        let s = orbit_stability(&map, &cyc.orbit).unwrap();
        assert!(s.stable && (s.multiplier + 0.263).abs() < 0.01, "{s:?}");
    }

    #[test]
    fn three_cycle_of_the_conjugate_map() {
        let map = chaos(6.1).rotated(1);
        let cyc = newton_periodic_orbit(&map, 3, 0.2, 1e-10, 100).unwrap().unwrap();
        assert!((cyc.fixed_point - 0.2015).abs() < 1e-3, "{cyc:?}");
        let mut sorted = cyc.orbit.clone();
        sorted.sort_by(f64::total_cmp);
        for (got, want) in sorted.iter().zip([-0.1029, 0.0402, 0.2015]) {
            assert!((got - want).abs() < 1e-3);
        }
    }

    #[test]
    fn newton_gives_up_on_a_flat_start() {
        // Φ̄ is the identity to first order for tiny steps, so ψ′ ≈ 0
        let map = chaos(1e-14);
        assert_eq!(newton_periodic_orbit(&map, 1, 0.5, 1e-20, 10).unwrap(), None);
    }

    #[test]
    fn period_three_points_at_6_1() {
        let map = chaos(6.1);
        let pts = period3_search(&map, -2.5, 2.5, 2001, 1e-8).unwrap();
        assert!(!pts.is_empty());
        for p in &pts {
            let back = map.apply_scalar(map.apply_scalar(map.apply_scalar(p.x)));
            assert!((back - p.x).abs() < 1e-8);
            assert!((map.apply_scalar(p.x) - p.x).abs() >= 1e-8);
            assert_eq!(p.step_orbit.len(), 7);
            assert!((p.step_orbit[6] - back).abs() < 1e-12);
        }
        assert!(pts.iter().any(|p| (p.x + 2.357).abs() < 0.01));
    }

    #[test]
    fn interval_check_reports_the_escape() {
        let err = period3_search(&chaos(6.1).rotated(1), -2.5, 2.5, 100, 1e-8).unwrap_err();
        assert!(matches!(err, Error::NotIntervalMap { .. }));
    }

    #[test]
    fn perturbed_starts_return_to_the_cycle() {
        let map = chaos(3.9);
        let cyc = newton_periodic_orbit(&map, 4, -0.1, 1e-12, 100).unwrap().unwrap();
        for i in 0..20 {
            let delta = -0.05 + 0.1 * i as f64 / 19.0;
            let y = iterate(&map, cyc.fixed_point + delta, 500);
            let gap = cyc.orbit.iter().map(|c| (c - y).abs()).fold(f64::INFINITY, f64::min);
            assert!(gap < 1e-8, "delta {delta}: gap {gap}");
        }
    }

    #[test]
    fn stability_of_the_origin() {
        let zero = [0.0];
        assert!(orbit_stability(&chaos(8.0), &zero).unwrap().stable);
        let s = orbit_stability(&chaos(2.0), &zero).unwrap();
        assert!(!s.stable && s.multiplier.abs() > 1.0);
    }

    #[test]
    fn contraction_has_only_the_origin() {
        let map = chaos(0.4);
        let cyc = newton_periodic_orbit(&map, 1, 0.7, 1e-12, 100).unwrap().unwrap();
        assert!(cyc.fixed_point.abs() < 1e-10);
        assert!(period3_search(&map, -2.5, 2.5, 2001, 1e-10).unwrap().is_empty());
        assert!(period3_search(&chaos(6.1), -2.5, 2.5, 1, 1e-10).unwrap().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn newton_roots_satisfy_the_residual(eta in 0.5f64..8.5, x0 in -3.0f64..3.0, p in 1usize..5) {
            let map = chaos(eta);
            if let Some(cyc) = newton_periodic_orbit(&map, p, x0, 1e-9, 60).unwrap() {
                let r = iterate(&map, cyc.fixed_point, p) - cyc.fixed_point;
                prop_assert!(r.abs() <= 1e-9);
                prop_assert!(cyc.residual <= 1e-9);
                prop_assert_eq!(cyc.orbit.len(), p);
            }
        }
    }
}
