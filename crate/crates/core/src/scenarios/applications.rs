//! Auction, regression, GLM and non-monotone game instances.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scenarios::params::{Params, Reader};
use crate::scenarios::{BuiltScenario, ScenarioMeta};
use crate::vi::{Domain, Link, Operator, ProblemSequence};
use crate::Point;

fn seasonal(t: usize, period: f64, amplitude: f64, phase: f64) -> f64 {
    1.0 + amplitude * (2.0 * PI * t as f64 / period + phase).sin()
}

/// Kelly auction parameters at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct KellyRound {
    pub values: Vec<f64>,
    pub reserve: f64,
    pub reg: f64,
}

impl KellyRound {
    /// Regularized loss of player `i`: `−v_i x_i / (R + Σx) + x_i + (λ/2) x_i²`.
    pub fn loss(&self, i: usize, x: &Point) -> f64 {
        let total = self.reserve + x.sum();
        -self.values[i] * x[i] / total + x[i] + 0.5 * self.reg * x[i] * x[i]
    }

    /// Pseudo-gradient `F_i = ∂ loss_i / ∂ x_i`.
    pub fn pseudo_gradient(&self, x: &Point) -> Point {
        let total = self.reserve + x.sum();
        DVector::from_fn(x.len(), |i, _| -self.values[i] * (total - x[i]) / (total * total) + 1.0 + self.reg * x[i])
    }
}

/// Seasonal schedule of a Kelly auction.
#[derive(Debug, Clone, PartialEq)]
pub struct KellySchedule {
    pub values: Vec<f64>,
    pub budgets: Vec<f64>,
    pub reserve: f64,
    pub value_amplitude: f64,
    pub reserve_amplitude: f64,
    pub period: usize,
    pub reg: f64,
}

impl KellySchedule {
    fn read(r: &mut Reader) -> Result<Self> {
        let n = r.usize("n", 3)?;
        if n == 0 {
            return Err(Error::config("n", "need at least one bidder"));
        }
        let values = r.list("values", &[2.0, 3.0, 4.0])?;
        let budgets = r.list("budgets", &[2.0])?;
        let reserve = r.positive("reserve", 1.0)?;
        let value_amplitude = r.fraction("value_amplitude", 0.3)?;
        let reserve_amplitude = r.fraction("reserve_amplitude", 0.3)?;
        let period = r.usize("period", 24)?;
        let reg = r.positive("reg", 0.1)?;
        if values.len() != n || values.iter().any(|v| *v < 0.0) {
            return Err(Error::config("values", format!("need {n} nonnegative values")));
        }
        let budgets = match budgets.len() {
            1 => vec![budgets[0]; n],
            len if len == n => budgets,
            _ => return Err(Error::config("budgets", format!("need 1 or {n} budgets"))),
        };
        if budgets.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::config("budgets", "must be positive"));
        }
        if period == 0 {
            return Err(Error::config("period", "must be at least 1"));
        }
        Ok(KellySchedule { values, budgets, reserve, value_amplitude, reserve_amplitude, period, reg })
    }

    /// Parses the `kelly_auction` parameters alone.
    pub fn from_params(params: &Params) -> Result<Self> {
        let mut r = Reader::new(params);
        let schedule = Self::read(&mut r)?;
        r.opt_f64("gbound")?;
        r.finish()?;
        Ok(schedule)
    }

    pub fn players(&self) -> usize {
        self.values.len()
    }

    /// Values and reserve at round `t`; player `i` is phase-shifted by `2πi/n`.
    pub fn round(&self, t: usize) -> KellyRound {
        let n = self.players() as f64;
        let p = self.period as f64;
        KellyRound {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| v * seasonal(t, p, self.value_amplitude, 2.0 * PI * i as f64 / n))
                .collect(),
            reserve: self.reserve * seasonal(t, p, self.reserve_amplitude, 0.0),
            reg: self.reg,
        }
    }
}

pub(crate) fn kelly(r: &mut Reader) -> Result<BuiltScenario> {
    let schedule = KellySchedule::read(r)?;
    let gbound = r.opt_f64("gbound")?;
    let n = schedule.players();
    let v_max = schedule.values.iter().copied().fold(0.0, f64::max) * (1.0 + schedule.value_amplitude);
    let r_min = schedule.reserve * (1.0 - schedule.reserve_amplitude);
    let b_max = schedule.budgets.iter().copied().fold(0.0, f64::max);
    let reg = schedule.reg;
    // Jacobian entries are bounded by 2 v / R² on the diagonal and v / R² elsewhere.
    let lip = reg + 2.0 * n as f64 * v_max / (r_min * r_min);
    let g = gbound.unwrap_or((n as f64).sqrt() * (v_max / r_min + 1.0 + reg * b_max));
    let domain = Domain::cube(DVector::zeros(n), DVector::from_vec(schedule.budgets.clone()))?;
    let period = schedule.period;
    let ops = move |t: usize| {
        let round = schedule.round(t);
        Operator::custom(n, move |x: &Point| round.pseudo_gradient(x)).with_mu(reg).with_lip(lip).with_gbound(g)
    };
    Ok(BuiltScenario {
        sequence: ProblemSequence::scheduled(n, Some(period), ops),
        meta: ScenarioMeta {
            mu: Some(reg),
            lip: Some(lip),
            gbound: Some(g),
            diameter: domain.diameter(),
            period: Some(period),
            ..ScenarioMeta::default()
        },
        domain,
    })
}

/// Prefix sums of `aᵀa` and `a b` over a seeded Gaussian sample stream.
struct RegressionStream {
    grams: Vec<DMatrix<f64>>,
    moments: Vec<DVector<f64>>,
}

impl RegressionStream {
    fn generate(dim: usize, n_max: usize, noise: f64, seed: u64) -> (Self, Point) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let truth = DVector::from_fn(dim, |_, _| normal());
        let mut grams = Vec::with_capacity(n_max + 1);
        let mut moments = Vec::with_capacity(n_max + 1);
        grams.push(DMatrix::zeros(dim, dim));
        moments.push(DVector::zeros(dim));
        for j in 0..n_max {
            let a = DVector::from_fn(dim, |_, _| normal());
            let b = a.dot(&truth) + noise * normal();
            grams.push(&grams[j] + &a * a.transpose());
            moments.push(&moments[j] + a * b);
        }
        (RegressionStream { grams, moments }, truth)
    }
}

pub(crate) fn streaming_regression(r: &mut Reader) -> Result<BuiltScenario> {
    let dim = r.usize("dim", 3)?;
    let n0 = r.usize("n0", 5)?;
    let growth = r.usize("growth", 1)?;
    let horizon = r.usize("horizon", 10_000)?;
    let reg = r.positive("reg", 0.1)?;
    let noise = r.f64("noise", 0.1)?;
    let seed = r.u64("seed", 7)?;
    let gbound = r.opt_f64("gbound")?;
    if dim == 0 {
        return Err(Error::config("dim", "must be at least 1"));
    }
    if noise < 0.0 {
        return Err(Error::config("noise", "must be nonnegative"));
    }
    if horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    let n_max = n0 + growth * (horizon - 1);
    let (stream, truth) = RegressionStream::generate(dim, n_max, noise, seed);
    let stream = Arc::new(stream);
    let last = &stream.grams[n_max];
    let lip = 2.0 * (last.clone().symmetric_eigenvalues().max() + reg);
    let schedule = move |t: usize| {
        // rounds past the horizon reuse the full sample
        let n = (n0 + growth * (t - 1)).min(n_max);
        let h = (&stream.grams[n] + DMatrix::identity(dim, dim) * reg) * 2.0;
        let eig = h.clone().symmetric_eigenvalues();
        let offset = &stream.moments[n] * -2.0;
        let solution = h.clone().cholesky().expect("regularized Gram is positive definite").solve(&-&offset);
        let mut op = Operator::affine(h, offset)
            .expect("square system")
            .with_mu(eig.min())
            .with_lip(eig.max())
            .with_solution(solution);
        if let Some(g) = gbound {
            op = op.with_gbound(g);
        }
        op
    };
    Ok(BuiltScenario {
        sequence: ProblemSequence::scheduled(dim, None, schedule),
        domain: Domain::unbounded(dim)?,
        meta: ScenarioMeta {
            mu: Some(2.0 * reg),
            lip: Some(lip),
            gbound,
            truth: Some(truth),
            ..ScenarioMeta::default()
        },
    })
}

pub(crate) fn glm(r: &mut Reader) -> Result<BuiltScenario> {
    let dim = r.usize("dim", 2)?;
    let samples = r.usize("samples", 50)?;
    let link_name = r.text("link", "identity");
    let scale = r.positive("link_scale", 1.0)?;
    let reg = r.f64("reg", 0.0)?;
    let noise = r.f64("noise", 0.1)?;
    let seed = r.u64("seed", 11)?;
    let gbound = r.opt_f64("gbound")?;
    if dim == 0 || samples == 0 {
        return Err(Error::config(if dim == 0 { "dim" } else { "samples" }, "must be at least 1"));
    }
    if reg < 0.0 {
        return Err(Error::config("reg", "must be nonnegative"));
    }
    let link = match link_name.as_str() {
        "identity" => Link::Identity,
        "logistic" => Link::ScaledLogistic { scale },
        other => return Err(Error::config("link", format!("unknown link `{other}`"))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let truth = DVector::from_fn(dim, |_, _| normal());
    let features = DMatrix::from_fn(samples, dim, |_, _| normal());
    let targets =
        DVector::from_fn(samples, |j, _| link.apply(features.row(j).transpose().dot(&truth)) + noise * normal());
    let n = samples as f64;
    let cov = features.tr_mul(&features) / n;
    let eig = cov.clone().symmetric_eigenvalues();
    let mu = reg + link.min_slope() * eig.min();
    let lip = reg + link.max_slope() * eig.max();

    let mut op = match link {
        Link::Identity => {
            let matrix = &cov + DMatrix::identity(dim, dim) * reg;
            let offset = -features.tr_mul(&targets) / n;
            let solution = matrix.clone().lu().solve(&-&offset);
            let mut op = Operator::affine(matrix, offset)?;
            op.solution = solution;
            op
        }
        Link::ScaledLogistic { .. } => Operator::glm(features, targets, link, reg)?,
    };
    op = op.with_lip(lip);
    if mu > 0.0 {
        op = op.with_mu(mu);
    }
    if let Some(g) = gbound {
        op = op.with_gbound(g);
    }
    Ok(BuiltScenario {
        sequence: ProblemSequence::periodic(vec![op])?,
        domain: Domain::unbounded(dim)?,
        meta: ScenarioMeta {
            mu: (mu > 0.0).then_some(mu),
            lip: Some(lip),
            gbound,
            period: Some(1),
            truth: Some(truth),
            ..ScenarioMeta::default()
        },
    })
}

/// `ℓ(x, y) = x² + 3 sin²x + a sin²x sin²y − y² − 3 sin²y`.
pub fn rsi_game_value(a: f64, x: f64, y: f64) -> f64 {
    let (sx, sy) = (x.sin().powi(2), y.sin().powi(2));
    x * x + 3.0 * sx + a * sx * sy - y * y - 3.0 * sy
}

/// Gradient descent-ascent field `(∂ℓ/∂x, −∂ℓ/∂y)`.
pub fn rsi_game_field(a: f64, z: &Point) -> Point {
    let (x, y) = (z[0], z[1]);
    DVector::from_vec(vec![
        2.0 * x + (2.0 * x).sin() * (3.0 + a * y.sin().powi(2)),
        2.0 * y + (2.0 * y).sin() * (3.0 - a * x.sin().powi(2)),
    ])
}

/// Spectral norm of the Jacobian of [`rsi_game_field`].
fn rsi_jacobian_norm(a: f64, x: f64, y: f64) -> f64 {
    let j = DMatrix::from_row_slice(
        2,
        2,
        &[
            2.0 + 2.0 * (2.0 * x).cos() * (3.0 + a * y.sin().powi(2)),
            a * (2.0 * x).sin() * (2.0 * y).sin(),
            -a * (2.0 * x).sin() * (2.0 * y).sin(),
            2.0 + 2.0 * (2.0 * y).cos() * (3.0 - a * x.sin().powi(2)),
        ],
    );
    j.singular_values().max()
}

/// Lipschitz constant of the game field, uniform over `a ∈ [0, 1]`.
///
/// The Jacobian is `π`-periodic in each coordinate, so a grid over `[0, π)²` for a few
/// values of `a` covers it; the supremum is inflated by 1%. The diagonal entries lie in
/// `[−6, 10]` and the off-diagonal ones in `[−1, 1]`, so 11 is a crude analytic bound.
pub fn rsi_game_lipschitz() -> f64 {
    let n = 200;
    let mut sup = 0.0f64;
    for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for i in 0..n {
            for j in 0..n {
                let x = PI * i as f64 / n as f64;
                let y = PI * j as f64 / n as f64;
                sup = sup.max(rsi_jacobian_norm(a, x, y));
            }
        }
    }
    1.01 * sup
}

/// RSI constant of the game in each player.
pub const RSI_MU: f64 = 0.25;

pub(crate) fn rsi_game(r: &mut Reader) -> Result<BuiltScenario> {
    let period = r.usize("period", 20)?;
    if period == 0 {
        return Err(Error::config("period", "must be at least 1"));
    }
    let lip = rsi_game_lipschitz();
    let schedule = move |t: usize| {
        let a = rsi_game_a(t, period);
        Operator::custom(2, move |z: &Point| rsi_game_field(a, z)).with_lip(lip).with_solution(DVector::zeros(2))
    };
    Ok(BuiltScenario {
        sequence: ProblemSequence::scheduled(2, Some(period), schedule),
        domain: Domain::unbounded(2)?,
        meta: ScenarioMeta { lip: Some(lip), period: Some(period), mu_rsi: Some(RSI_MU), ..ScenarioMeta::default() },
    })
}

/// `a_t` used by the game scenario at round `t`.
pub fn rsi_game_a(t: usize, period: usize) -> f64 {
    0.5 * (1.0 + (2.0 * PI * t as f64 / period as f64).sin())
}
