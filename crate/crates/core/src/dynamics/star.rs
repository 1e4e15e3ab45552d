use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::map::{iterate_orbit, GdMap};
use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct StarScanConfig {
    pub n_samples: usize,
    /// Starts are uniform on `[-half_width, half_width]^d`.
    pub half_width: f64,
    pub n_steps: usize,
    /// Share of each orbit kept as tail.
    pub tail_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
    /// Radius of the neighbourhood test, relative to the probed point's norm.
    pub radial_eps: f64,
    pub segment_points: usize,
    /// Share of segment points that must have a tail point nearby.
    pub segment_coverage: f64,
    /// Only every `probe_stride`-th tail point is probed.
    pub probe_stride: usize,
}

impl Default for StarScanConfig {
    fn default() -> Self {
        StarScanConfig {
            n_samples: 100,
            half_width: 500.0,
            n_steps: 500,
            tail_fraction: 0.5,
            seed: 0,
            threshold: 1e6,
            radial_eps: 0.05,
            segment_points: 50,
            segment_coverage: 0.9,
            probe_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarScan {
    pub eta: f64,
    /// Tail points of the bounded orbits, orbit by orbit.
    pub tail_points: Vec<Point>,
    /// Mean norm of the bounded orbits at each step.
    pub avg_norm_series: Vec<f64>,
    pub radial_score: f64,
    pub diverged_count: usize,
    pub n_samples: usize,
}

impl StarScan {
    pub fn all_bounded(&self) -> bool {
        self.diverged_count == 0
    }
}

/// Orbits of the composed map from random starts, with a star-shapedness score of
/// their tails. Fails with [`Error::AllDiverged`] if no orbit stays bounded.
pub fn star_scan(map: &GdMap, config: &StarScanConfig) -> Result<StarScan> {
    if config.n_samples == 0 || config.n_steps == 0 {
        return Err(Error::config("n_samples", "need at least one sample and one step"));
    }
    if !(0.0..=1.0).contains(&config.tail_fraction) {
        return Err(Error::config("tail_fraction", "must lie in [0, 1]"));
    }
    let dim = map.dim();
    let orbits: Vec<_> = (0..config.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let x0 = Point::from_fn(dim, |_, _| rng.random_range(-config.half_width..=config.half_width));
            iterate_orbit(map, &x0, config.n_steps, config.threshold)
        })
        .collect();
    let bounded: Vec<_> = orbits.iter().filter(|o| !o.diverged()).collect();
    if bounded.is_empty() {
        return Err(Error::AllDiverged);
    }
    let avg_norm_series = (0..=config.n_steps)
        .map(|t| bounded.iter().map(|o| o.points[t].norm()).sum::<f64>() / bounded.len() as f64)
        .collect();
    let first = ((config.n_steps as f64) * (1.0 - config.tail_fraction)).ceil() as usize;
    let tail_points: Vec<Point> =
        bounded.iter().flat_map(|o| o.points[first.min(config.n_steps)..].iter().cloned()).collect();
    let radial_score = radial_score(&tail_points, config);
    Ok(StarScan {
        eta: map.eta(),
        tail_points,
        avg_norm_series,
        radial_score,
        diverged_count: orbits.len() - bounded.len(),
        n_samples: config.n_samples,
    })
}

/// Bucketed point set for fixed-radius neighbour queries.
struct Buckets<'a> {
    points: &'a [Point],
    cell: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> Buckets<'a> {
    fn new(points: &'a [Point], cell: f64) -> Self {
        let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        Buckets { points, cell, map }
    }

    fn key(p: &Point, cell: f64) -> Vec<i64> {
        p.iter().map(|v| (v / cell).floor() as i64).collect()
    }

    fn any_within(&self, q: &Point, r: f64) -> bool {
        let span = (2.0 * r / self.cell + 2.0).powi(q.len() as i32);
        if !(span <= self.map.len() as f64) {
            return self.points.iter().any(|p| (p - q).norm() <= r);
        }
        let lo: Vec<i64> = q.iter().map(|v| ((v - r) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = q.iter().map(|v| ((v + r) / self.cell).floor() as i64).collect();
        let mut key = lo.clone();
        loop {
            if let Some(ids) = self.map.get(&key) {
                if ids.iter().any(|&i| (&self.points[i] - q).norm() <= r) {
                    return true;
                }
            }
            let mut d = 0;
            loop {
                if d == key.len() {
                    return false;
                }
                if key[d] < hi[d] {
                    key[d] += 1;
                    break;
                }
                key[d] = lo[d];
                d += 1;
            }
        }
    }
}

/// Share of probed tail points `x` for which most points of the segment `[0, x]` have a
/// tail point within `radial_eps·‖x‖`.
fn radial_score(tail: &[Point], config: &StarScanConfig) -> f64 {
    let probes: Vec<&Point> = tail.iter().step_by(config.probe_stride.max(1)).filter(|p| p.norm() > 0.0).collect();
    if probes.is_empty() {
        return 1.0;
    }
    let mut norms: Vec<f64> = probes.iter().map(|p| p.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let cell = (config.radial_eps * norms[norms.len() / 2]).max(f64::MIN_POSITIVE);
    let buckets = Buckets::new(tail, cell);
    let m = config.segment_points.max(1);
    let hits = probes
        .par_iter()
        .filter(|x| {
            let r = config.radial_eps * x.norm();
            let covered = (0..m)
                .filter(|&j| {
                    let s = if m == 1 { 1.0 } else { j as f64 / (m - 1) as f64 };
                    buckets.any_within(&(**x * s), r)
                })
                .count();
            covered as f64 >= config.segment_coverage * m as f64
        })
        .count();
    hits as f64 / probes.len() as f64
}
