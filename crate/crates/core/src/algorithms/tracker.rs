//! The online protocol: at each round the learner plays `Z_t`, then observes `F_t`.

use log::debug;

use crate::algorithms::{resolvent_step, CyclicFbState, MetaState, SlotIndexing, StepSchedule};
use crate::error::{Error, Result};
use crate::vi::{Domain, Operator, ProblemSequence};
use crate::Point;

/// Default bound on `‖Z_t‖` above which a run is declared diverged.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Tracking algorithm selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// `Z_{t+1} = Proj(Z_t − η F_t(Z_t))`.
    ContractiveForward {
        eta: f64,
    },
    /// `Z_{t+1} = (I + F_t)⁻¹ Z_t`; affine operators on `R^d` only.
    Resolvent,
    CyclicFb {
        period: usize,
        schedule: StepSchedule,
        indexing: SlotIndexing,
    },
    /// Fixed-rate aggregation. `diameter` defaults to the domain diameter.
    MetaFixed {
        k: usize,
        mu: f64,
        diameter: Option<f64>,
        gbound: f64,
    },
    MetaAdaptive {
        k: usize,
        mu: f64,
        lip: f64,
    },
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    /// The play at round `step` was non-finite or exceeded the threshold; it is not recorded.
    Diverged {
        step: usize,
    },
}

/// Record of one run. All per-round lists have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub plays: Vec<Point>,
    pub op_values: Vec<Point>,
    pub solutions: Option<Vec<Point>>,
    /// `per_base_plays[i][t − 1] = Z_t^(i)` for meta runs.
    pub per_base_plays: Option<Vec<Vec<Point>>>,
    /// Weights `p_t` used at each round of a meta run.
    pub weights: Option<Vec<Vec<f64>>>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.plays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plays.is_empty()
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

enum Learner {
    Forward { z: Point, eta: f64 },
    Resolvent { z: Point },
    Cyclic(CyclicFbState),
    Meta(MetaState),
}

impl Learner {
    fn new(algo: &Algorithm, domain: &Domain, z1: Point) -> Result<Self> {
        Ok(match algo {
            Algorithm::ContractiveForward { eta } => {
                StepSchedule::Constant(*eta).validate()?;
                Learner::Forward { z: z1, eta: *eta }
            }
            Algorithm::Resolvent => {
                if domain.is_bounded() {
                    return Err(Error::config("algorithm", "resolvent needs an unbounded domain"));
                }
                Learner::Resolvent { z: z1 }
            }
            Algorithm::CyclicFb { period, schedule, indexing } => {
                Learner::Cyclic(CyclicFbState::new(*period, z1, *schedule)?.with_indexing(*indexing))
            }
            Algorithm::MetaFixed { k, mu, diameter, gbound } => {
                let d = diameter
                    .or_else(|| domain.diameter())
                    .ok_or_else(|| Error::config("D", "fixed-rate aggregation needs a bounded domain"))?;
                Learner::Meta(MetaState::fixed(*k, z1, *mu, d, *gbound)?)
            }
            Algorithm::MetaAdaptive { k, mu, lip } => Learner::Meta(MetaState::adaptive(*k, z1, *mu, *lip)?),
        })
    }

    fn play(&mut self, t: usize) -> Point {
        match self {
            Learner::Forward { z, .. } | Learner::Resolvent { z } => z.clone(),
            Learner::Cyclic(st) => st.current(t).clone(),
            Learner::Meta(st) => st.play(t),
        }
    }

    fn observe(&mut self, t: usize, domain: &Domain, op: &Operator) -> Result<Point> {
        match self {
            Learner::Forward { z, eta } => {
                let g = op.evaluate(z)?;
                *z = domain.project(&(&*z - &g * *eta))?;
                Ok(g)
            }
            Learner::Resolvent { z } => {
                let g = op.evaluate(z)?;
                *z = resolvent_step(op, z)?;
                Ok(g)
            }
            Learner::Cyclic(st) => {
                let g = op.evaluate(st.current(t))?;
                st.apply(t, domain, &g)?;
                Ok(g)
            }
            Learner::Meta(st) => st.observe(t, domain, op),
        }
    }
}

/// Runs `horizon` rounds with [`DEFAULT_DIVERGENCE_THRESHOLD`].
pub fn run_tracker(
    seq: &mut ProblemSequence,
    algo: &Algorithm,
    domain: &Domain,
    z1: Point,
    horizon: usize,
) -> Result<Trajectory> {
    run_tracker_with_threshold(seq, algo, domain, z1, horizon, DEFAULT_DIVERGENCE_THRESHOLD)
}

/// Runs `horizon` rounds, stopping early once a play is non-finite or has norm above `threshold`.
pub fn run_tracker_with_threshold(
    seq: &mut ProblemSequence,
    algo: &Algorithm,
    domain: &Domain,
    z1: Point,
    horizon: usize,
    threshold: f64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    if !(threshold > 0.0) {
        return Err(Error::config("divergence_threshold", "must be positive"));
    }
    for (expected, actual) in [(seq.dim(), z1.len()), (seq.dim(), domain.dim())] {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
    }
    let mut learner = Learner::new(algo, domain, z1)?;
    let is_meta = matches!(learner, Learner::Meta(_));
    let k = match &learner {
        Learner::Meta(st) => st.k(),
        _ => 0,
    };

    let mut plays = Vec::with_capacity(horizon);
    let mut op_values = Vec::with_capacity(horizon);
    let mut solutions = Some(Vec::with_capacity(horizon));
    let mut per_base = vec![Vec::with_capacity(horizon); k];
    let mut weights = Vec::new();
    let mut status = RunStatus::Complete;

    for t in 1..=horizon {
        if let Learner::Meta(st) = &learner {
            for (i, z) in st.base_plays(t).into_iter().enumerate() {
                per_base[i].push(z);
            }
            weights.push(st.weights().to_vec());
        }
        let play = learner.play(t);
        if !play.iter().all(|v| v.is_finite()) || play.norm() > threshold {
            debug!("diverged at round {t}");
            status = RunStatus::Diverged { step: t };
            if is_meta {
                per_base.iter_mut().for_each(|b| {
                    b.pop();
                });
                weights.pop();
            }
            break;
        }
        let op = seq.reveal(t, &play)?;
        let g = match learner.observe(t, domain, &op) {
            Ok(g) => g,
            Err(Error::NonFinite) => {
                status = RunStatus::Diverged { step: t };
                if is_meta {
                    per_base.iter_mut().for_each(|b| {
                        b.pop();
                    });
                    weights.pop();
                }
                break;
            }
            Err(e) => return Err(e),
        };
        match (&mut solutions, op.solution) {
            (Some(list), Some(z)) => list.push(z),
            _ => solutions = None,
        }
        plays.push(play);
        op_values.push(g);
    }

    Ok(Trajectory {
        plays,
        op_values,
        solutions,
        per_base_plays: is_meta.then_some(per_base),
        weights: is_meta.then_some(weights),
        status,
    })
}
