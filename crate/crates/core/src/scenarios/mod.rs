//! Concrete problem instances.
//!
//! Every scenario is built from a name and a set of textual parameters; unknown
//! parameters are rejected. Time starts at `t = 1`, so for two-periodic sequences
//! `F_1` is the odd-time operator.

mod adversary;
mod applications;
mod params;

use std::fmt;
use std::str::FromStr;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vi::{Domain, Operator, ProblemSequence};
use crate::Point;

pub use adversary::{adversary_step, LowerBoundAdversary};
pub use applications::{
    rsi_game_a, rsi_game_field, rsi_game_lipschitz, rsi_game_value, KellyRound, KellySchedule, RSI_MU,
};
pub use params::Params;
use params::Reader;

/// Smoothness factor of `u ↦ log(1 + e^{u²/2})` relative to its curvature at 0:
/// `σ(v) + 2vσ(v)(1 − σ(v)) ≤ 1.301` for all `v ≥ 0`, rounded up.
pub const EXP_QUADRATIC_SMOOTHNESS: f64 = 1.31;

/// Names of the available scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    QuadraticDrift,
    Periodic1d,
    ExpQuadratic,
    Chaos1d,
    Star2d,
    KellyAuction,
    StreamingRegression,
    Glm,
    RsiGame,
    LowerBoundAdversary,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 10] = [
        ScenarioId::QuadraticDrift,
        ScenarioId::Periodic1d,
        ScenarioId::ExpQuadratic,
        ScenarioId::Chaos1d,
        ScenarioId::Star2d,
        ScenarioId::KellyAuction,
        ScenarioId::StreamingRegression,
        ScenarioId::Glm,
        ScenarioId::RsiGame,
        ScenarioId::LowerBoundAdversary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::QuadraticDrift => "quadratic_drift",
            ScenarioId::Periodic1d => "periodic_1d",
            ScenarioId::ExpQuadratic => "exp_quadratic",
            ScenarioId::Chaos1d => "chaos_1d",
            ScenarioId::Star2d => "star_2d",
            ScenarioId::KellyAuction => "kelly_auction",
            ScenarioId::StreamingRegression => "streaming_regression",
            ScenarioId::Glm => "glm",
            ScenarioId::RsiGame => "rsi_game",
            ScenarioId::LowerBoundAdversary => "lower_bound_adversary",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::config("scenario.name", format!("unknown scenario `{s}`")))
    }
}

/// Regularity constants and structure of a built scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioMeta {
    /// Uniform strong-monotonicity constant.
    pub mu: Option<f64>,
    /// Uniform Lipschitz constant.
    pub lip: Option<f64>,
    pub gbound: Option<f64>,
    pub diameter: Option<f64>,
    pub period: Option<usize>,
    /// Restricted-secant constant, for fields that are not monotone.
    pub mu_rsi: Option<f64>,
    /// Parameter that generated synthetic data, when there is one.
    pub truth: Option<Point>,
}

/// A ready-to-run problem.
#[derive(Debug)]
pub struct BuiltScenario {
    pub sequence: ProblemSequence,
    pub domain: Domain,
    pub meta: ScenarioMeta,
}

/// Builds a scenario; parameter errors name the offending key.
pub fn build_scenario(id: ScenarioId, params: &Params) -> Result<BuiltScenario> {
    let mut r = Reader::new(params);
    let built = match id {
        ScenarioId::QuadraticDrift => quadratic_drift(&mut r)?,
        ScenarioId::Periodic1d => periodic_1d(r.opt_f64("radius")?)?,
        ScenarioId::ExpQuadratic => {
            let a = r.list("a", &[1.0])?;
            if a.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::config("a", "curvatures must be positive"));
            }
            exp_quadratic_1d(&a)?
        }
        ScenarioId::Chaos1d => exp_quadratic_1d(&[0.25, 4.0])?,
        ScenarioId::Star2d => star_2d()?,
        ScenarioId::KellyAuction => applications::kelly(&mut r)?,
        ScenarioId::StreamingRegression => applications::streaming_regression(&mut r)?,
        ScenarioId::Glm => applications::glm(&mut r)?,
        ScenarioId::RsiGame => applications::rsi_game(&mut r)?,
        ScenarioId::LowerBoundAdversary => BuiltScenario {
            sequence: ProblemSequence::adaptive(1, Box::new(LowerBoundAdversary::new())),
            domain: Domain::interval(-1.0, 1.0)?,
            meta: ScenarioMeta {
                mu: Some(1.0),
                lip: Some(1.0),
                gbound: Some(2.0),
                diameter: Some(2.0),
                ..ScenarioMeta::default()
            },
        },
    };
    r.finish()?;
    Ok(built)
}

/// `F_t(x) = x − c_t` with `c_t = c1 − b (t − 1)`.
fn quadratic_drift(r: &mut Reader) -> Result<BuiltScenario> {
    let c1 = r.f64("c1", 0.0)?;
    let b = r.f64("b", 0.1)?;
    let schedule = move |t: usize| adversary::quadratic_at(c1 - b * (t as f64 - 1.0));
    Ok(BuiltScenario {
        sequence: ProblemSequence::scheduled(1, None, schedule),
        domain: Domain::unbounded(1)?,
        meta: ScenarioMeta { mu: Some(1.0), lip: Some(1.0), ..ScenarioMeta::default() },
    })
}

fn scalar_linear(a: f64) -> Operator {
    Operator::affine(dmatrix![a], dvector![0.0])
        .expect("1x1 affine")
        .with_mu(a)
        .with_lip(a)
        .with_solution(dvector![0.0])
}

/// `F_odd(x) = 8x`, `F_even(x) = x`, on the line or on `[-radius, radius]`.
fn periodic_1d(radius: Option<f64>) -> Result<BuiltScenario> {
    let sequence = ProblemSequence::periodic(vec![scalar_linear(8.0), scalar_linear(1.0)])?;
    let meta = ScenarioMeta { mu: Some(1.0), lip: Some(8.0), period: Some(2), ..ScenarioMeta::default() };
    Ok(match radius {
        None => BuiltScenario { sequence, domain: Domain::unbounded(1)?, meta },
        Some(r) if r > 0.0 && r.is_finite() => BuiltScenario {
            sequence,
            domain: Domain::interval(-r, r)?,
            meta: ScenarioMeta { gbound: Some(8.0 * r), diameter: Some(2.0 * r), ..meta },
        },
        Some(_) => return Err(Error::config("radius", "must be positive")),
    })
}

/// Gradient of `log(1 + exp(xᵀAx/2))` with `μ = λ_min(A)/2` and `L = 1.31 λ_max(A)`.
pub fn exp_quadratic_operator(matrix: DMatrix<f64>) -> Result<Operator> {
    let eig = matrix.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) {
        return Err(Error::config("a", "matrix must be positive definite"));
    }
    let dim = matrix.nrows();
    Ok(Operator::exp_quadratic(matrix)?
        .with_mu(lo / 2.0)
        .with_lip(EXP_QUADRATIC_SMOOTHNESS * hi)
        .with_solution(DVector::zeros(dim)))
}

fn periodic_family(ops: Vec<Operator>) -> Result<BuiltScenario> {
    let mu = ops.iter().filter_map(|op| op.mu).fold(f64::INFINITY, f64::min);
    let lip = ops.iter().filter_map(|op| op.lip).fold(0.0, f64::max);
    let dim = ops[0].dim();
    let period = ops.len();
    Ok(BuiltScenario {
        sequence: ProblemSequence::periodic(ops)?,
        domain: Domain::unbounded(dim)?,
        meta: ScenarioMeta { mu: Some(mu), lip: Some(lip), period: Some(period), ..ScenarioMeta::default() },
    })
}

fn exp_quadratic_1d(curvatures: &[f64]) -> Result<BuiltScenario> {
    let ops = curvatures.iter().map(|a| exp_quadratic_operator(dmatrix![*a])).collect::<Result<Vec<_>>>()?;
    periodic_family(ops)
}

/// The two matrices of the star-shaped example, in time order.
pub fn star_matrices() -> [DMatrix<f64>; 2] {
    [dmatrix![0.75, 0.0; 0.0, 5.0], dmatrix![5.0, 1.0; 1.0, 0.75]]
}

fn star_2d() -> Result<BuiltScenario> {
    let ops = star_matrices().into_iter().map(exp_quadratic_operator).collect::<Result<Vec<_>>>()?;
    periodic_family(ops)
}
