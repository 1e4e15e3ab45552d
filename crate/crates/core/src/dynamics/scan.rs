use rayon::prelude::*;

use super::map::{classify_orbit, iterate_orbit, Classification, ClassifyOptions, GdMap};
use crate::error::{Error, Result};
use crate::Point;

/// Step sizes to scan.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaGrid {
    /// `lo + (hi − lo)·i/n` for `i = 1..=n`.
    Uniform {
        lo: f64,
        hi: f64,
        n: usize,
    },
    Explicit(Vec<f64>),
}

impl EtaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EtaGrid::Uniform { lo, hi, n } => (1..=*n).map(|i| lo + (hi - lo) * i as f64 / *n as f64).collect(),
            EtaGrid::Explicit(v) => v.clone(),
        }
    }
}

/// Uniform histogram cells on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    pub lo: f64,
    pub hi: f64,
    pub n_cells: usize,
}

impl CellGrid {
    /// Cell index of `x`, or `None` outside `[lo, hi]`.
    pub fn cell(&self, x: f64) -> Option<usize> {
        if !(self.lo..=self.hi).contains(&x) {
            return None;
        }
        let i = ((x - self.lo) / (self.hi - self.lo) * self.n_cells as f64).floor() as usize;
        Some(i.min(self.n_cells - 1))
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * (i as f64 + 0.5) / self.n_cells as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub eta: f64,
    pub classification: Classification,
    /// Sorted cells hit by the tail; the single limit cell for converged rows and empty
    /// for diverged ones.
    pub occupied_cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub etas: EtaGrid,
    pub cells: CellGrid,
    pub classify: ClassifyOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            etas: EtaGrid::Uniform { lo: 0.0, hi: 8.0, n: 3000 },
            cells: CellGrid { lo: -10.0, hi: 10.0, n_cells: 1000 },
            classify: ClassifyOptions::default(),
        }
    }
}

/// Classifies every step size of the grid for a one-dimensional map. Rows come back in
/// grid order whatever the thread count.
pub fn bifurcation_scan(base: &GdMap, x0: f64, config: &ScanConfig) -> Result<Vec<ScanRow>> {
    base.require_1d()?;
    let c = &config.classify;
    if c.burn_in >= c.n_steps {
        return Err(Error::config("burn_in", "must be smaller than the number of steps"));
    }
    if config.cells.n_cells == 0 || config.cells.hi <= config.cells.lo {
        return Err(Error::config("cells", "need a nonempty cell range"));
    }
    let etas = config.etas.values();
    if etas.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::config("eta", "grid must contain positive step sizes"));
    }
    etas.into_par_iter()
        .map(|eta| {
            let map = base.with_eta(eta)?;
            let orbit = iterate_orbit(&map, &Point::from_element(1, x0), c.n_steps, c.threshold);
            let classification = classify_orbit(&orbit, c.burn_in, c.tol, c.max_period);
            let occupied_cells = match classification {
                Classification::Diverged => Vec::new(),
                Classification::Converged => {
                    config.cells.cell(orbit.points[orbit.points.len() - 1][0]).into_iter().collect()
                }
                _ => {
                    let mut cells: Vec<usize> =
                        orbit.points[c.burn_in..].iter().filter_map(|p| config.cells.cell(p[0])).collect();
                    cells.sort_unstable();
                    cells.dedup();
                    cells
                }
            };
            Ok(ScanRow { eta, classification, occupied_cells })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::compose_map;
    use crate::scenarios::{build_scenario, Params, ScenarioId};

    fn chaos_map() -> GdMap {
        compose_map(&build_scenario(ScenarioId::Chaos1d, &Params::new()).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn grid_and_cells() {
        let g = EtaGrid::Uniform { lo: 0.0, hi: 8.0, n: 4 };
        assert_eq!(g.values(), vec![2.0, 4.0, 6.0, 8.0]);
        let c = CellGrid { lo: -10.0, hi: 10.0, n_cells: 1000 };
        assert_eq!(c.cell(-10.0), Some(0));
        assert_eq!(c.cell(10.0), Some(999));
        assert_eq!(c.cell(0.0), Some(500));
        assert_eq!(c.cell(10.5), None);
        assert!((c.center(500) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rows_are_ordered_and_consistent() {
        let config = ScanConfig { etas: EtaGrid::Uniform { lo: 0.0, hi: 8.0, n: 40 }, ..ScanConfig::default() };
        let rows = bifurcation_scan(&chaos_map(), -0.1, &config).unwrap();
        assert_eq!(rows.len(), 40);
        for w in rows.windows(2) {
            assert!(w[0].eta < w[1].eta);
        }
        assert_eq!(rows[39].eta, 8.0);
        for r in &rows {
            match r.classification {
                Classification::Diverged => assert!(r.occupied_cells.is_empty()),
                Classification::Converged => assert_eq!(r.occupied_cells.len(), 1),
                Classification::Periodic(p) => assert!(r.occupied_cells.len() <= p),
                Classification::BoundedAperiodic => assert!(!r.occupied_cells.is_empty()),
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_rows() {
        let config = ScanConfig {
            etas: EtaGrid::Explicit((1..=24).map(|i| 3.0 + i as f64 / 6.0).collect()),
            ..ScanConfig::default()
        };
        let map = chaos_map();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bifurcation_scan(&map, -0.1, &config).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn rejects_bad_config() {
        let mut config = ScanConfig::default();
        config.classify.burn_in = config.classify.n_steps;
        assert!(bifurcation_scan(&chaos_map(), 0.0, &config).is_err());
        let star = compose_map(&build_scenario(ScenarioId::Star2d, &Params::new()).unwrap(), 1.0).unwrap();
        assert!(bifurcation_scan(&star, 0.0, &ScanConfig::default()).is_err());
    }
}
