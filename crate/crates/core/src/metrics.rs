//! Tracking error, path length, dynamic regret and closed-form guarantees.

use crate::algorithms::Trajectory;
use crate::error::{Error, Result};
use crate::Point;

/// Additive slack used by [`bound_check`].
pub const BOUND_SLACK: f64 = 1e-9;

fn solutions(traj: &Trajectory) -> Result<&[Point]> {
    let sol = traj.solutions.as_deref().ok_or(Error::MissingSolutions)?;
    if sol.len() != traj.plays.len() {
        return Err(Error::LengthMismatch { left: traj.plays.len(), right: sol.len() });
    }
    Ok(sol)
}

/// Running sums `Σ_{s ≤ t} ‖Z_s − Z*_s‖²` for `t = 1..=T`.
pub fn tracking_partial_sums(traj: &Trajectory) -> Result<Vec<f64>> {
    let sol = solutions(traj)?;
    let mut acc = 0.0;
    Ok(traj
        .plays
        .iter()
        .zip(sol)
        .map(|(z, s)| {
            acc += (z - s).norm_squared();
            acc
        })
        .collect())
}

/// `Σ_t ‖Z_t − Z*_t‖²`.
pub fn tracking_error(traj: &Trajectory) -> Result<f64> {
    Ok(tracking_partial_sums(traj)?.last().copied().unwrap_or(0.0))
}

/// `Σ_{t ≥ 2} ‖Z*_t − Z*_{t−1}‖²`; zero for fewer than two points.
pub fn quadratic_path_length(solutions: &[Point]) -> f64 {
    solutions.windows(2).map(|w| (&w[1] - &w[0]).norm_squared()).sum()
}

/// Running sums of `⟨F_t(Z_t), Z_t − C_t⟩ − (μ/2)‖Z_t − C_t‖²`.
pub fn regret_partial_sums(traj: &Trajectory, comparators: &[Point], mu: f64) -> Result<Vec<f64>> {
    if comparators.len() != traj.plays.len() {
        return Err(Error::LengthMismatch { left: traj.plays.len(), right: comparators.len() });
    }
    let mut acc = 0.0;
    Ok(traj
        .plays
        .iter()
        .zip(&traj.op_values)
        .zip(comparators)
        .map(|((z, g), c)| {
            let d = z - c;
            acc += g.dot(&d) - 0.5 * mu * d.norm_squared();
            acc
        })
        .collect())
}

/// Dynamic regret against `comparators`, using the recorded `F_t(Z_t)`.
pub fn dynamic_regret(traj: &Trajectory, comparators: &[Point], mu: f64) -> Result<f64> {
    Ok(regret_partial_sums(traj, comparators, mu)?.last().copied().unwrap_or(0.0))
}

/// A closed-form guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundSpec {
    /// Contractive algorithm with factor `c`: `P*/(1−C)² + init²/(1−C)`.
    Contractive { c: f64, path: f64, init_dist: f64 },
    /// Cyclic learner tuned with the period: `kG²/(2μ)(log(T/k) + 1)`.
    Cyclic { k: f64, g: f64, mu: f64, t: f64 },
    /// Fixed-rate aggregation regret: `(G+μD)²/(2μ)(k log(T/k) + k + 8 log K)`.
    FixedRegret { g: f64, mu: f64, d: f64, k: f64, big_k: f64, t: f64 },
    /// Fixed-rate aggregation tracking: `(G+μD)²/μ²(k log(T/k) + k + 8 log K)`.
    FixedTracking { g: f64, mu: f64, d: f64, k: f64, big_k: f64, t: f64 },
    /// Adaptive aggregation tracking:
    /// `4D₀²(2+κ)(2(2κ²+1)(2+κ) log K + (2κ+1)κk + 1)`.
    Adaptive { d0: f64, kappa: f64, k: f64, big_k: f64 },
    /// Adversarial lower bound `D²T/16`.
    AdversaryLower { d: f64, t: f64 },
}

impl BoundSpec {
    /// Lower bounds hold when the measurement is at least the bound.
    pub fn is_lower(&self) -> bool {
        matches!(self, BoundSpec::AdversaryLower { .. })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::BoundDomain(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::BoundDomain(format!("{name} must be nonnegative, got {v}")))
    }
}

fn ordered(k: f64, big_k: f64, t: f64) -> Result<()> {
    if k <= big_k && big_k <= t {
        Ok(())
    } else {
        Err(Error::BoundDomain(format!("need k <= K <= T, got {k}, {big_k}, {t}")))
    }
}

/// Evaluates the bound.
pub fn theoretical_bound(spec: &BoundSpec) -> Result<f64> {
    match *spec {
        BoundSpec::Contractive { c, path, init_dist } => {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::BoundDomain(format!("C must lie in (0, 1), got {c}")));
            }
            nonnegative("P*", path)?;
            nonnegative("init distance", init_dist)?;
            Ok(path / (1.0 - c).powi(2) + init_dist.powi(2) / (1.0 - c))
        }
        BoundSpec::Cyclic { k, g, mu, t } => {
            positive("k", k)?;
            positive("G", g)?;
            positive("mu", mu)?;
            ordered(k, k, t)?;
            Ok(k * g * g / (2.0 * mu) * ((t / k).ln() + 1.0))
        }
        BoundSpec::FixedRegret { g, mu, d, k, big_k, t } | BoundSpec::FixedTracking { g, mu, d, k, big_k, t } => {
            positive("k", k)?;
            positive("mu", mu)?;
            positive("D", d)?;
            nonnegative("G", g)?;
            ordered(k, big_k, t)?;
            let inner = k * (t / k).ln() + k + 8.0 * big_k.ln();
            let scale = (g + mu * d).powi(2);
            Ok(match spec {
                BoundSpec::FixedRegret { .. } => scale / (2.0 * mu) * inner,
                _ => scale / (mu * mu) * inner,
            })
        }
        BoundSpec::Adaptive { d0, kappa, k, big_k } => {
            nonnegative("D0", d0)?;
            positive("k", k)?;
            if !(kappa >= 1.0 && kappa.is_finite()) {
                return Err(Error::BoundDomain(format!("kappa must be at least 1, got {kappa}")));
            }
            ordered(k, big_k, big_k)?;
            let log_k = big_k.ln();
            let inner =
                2.0 * (2.0 * kappa * kappa + 1.0) * (2.0 + kappa) * log_k + (2.0 * kappa + 1.0) * kappa * k + 1.0;
            Ok(4.0 * d0 * d0 * (2.0 + kappa) * inner)
        }
        BoundSpec::AdversaryLower { d, t } => {
            positive("D", d)?;
            positive("T", t)?;
            Ok(d * d * t / 16.0)
        }
    }
}

/// Quantity compared against a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Tracking,
    /// Dynamic regret against the recorded solutions.
    Regret {
        mu: f64,
    },
}

/// Outcome of comparing a run against a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    pub measured: f64,
    pub bound: f64,
}

/// `measured ≤ bound + slack` for upper bounds, `measured ≥ bound − slack` for lower bounds.
pub fn bound_check(traj: &Trajectory, spec: &BoundSpec, which: Measure) -> Result<BoundCheck> {
    let measured = match which {
        Measure::Tracking => tracking_error(traj)?,
        Measure::Regret { mu } => dynamic_regret(traj, solutions(traj)?, mu)?,
    };
    let bound = theoretical_bound(spec)?;
    let holds = if spec.is_lower() { measured >= bound - BOUND_SLACK } else { measured <= bound + BOUND_SLACK };
    Ok(BoundCheck { holds, measured, bound })
}
