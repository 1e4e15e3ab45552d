//! Aggregation of cyclic base learners with periods `1..=K`.
//!
//! Each round the meta-learner plays the `p_t`-weighted average of the base plays,
//! observes `g = F_t(Z_t)` and scores base `i` with
//! `ℓ_{t,i} = ⟨g, Z_t^(i)⟩ + (μ/2)‖Z_t^(i) − Z_t‖²`.
//!
//! Two learning-rate regimes are supported. [`MetaState::fixed`] uses a constant `λ`
//! and updates the bases with affine surrogates built from `g`, so `F_t` is evaluated
//! once per round. [`MetaState::adaptive`] tunes `λ_t` from the gap between the
//! average-play loss and the mix loss and updates the bases with the true `F_t`.

use crate::algorithms::aggregate::{exp_weights, mix_loss, uniform_over_argmin};
use crate::algorithms::{make_surrogate, CyclicFbState, SlotIndexing, StepSchedule};
use crate::error::{Error, Result};
use crate::vi::{Domain, Operator};
use crate::Point;

/// Tolerance used for argmin ties and for detecting the first strict mix-loss gap.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Rate {
    Fixed { lambda: f64 },
    Adaptive { lambda: f64, cum_gap: f64, t0: Option<usize> },
}

/// Quantities computed in the most recent round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub t: usize,
    pub losses: Vec<f64>,
    /// `ℓ̄_t = ⟨F_t(Z_t), Z_t⟩`.
    pub avg_loss: f64,
    /// Mix loss at the learning rate used this round.
    pub mix_loss: f64,
    /// Learning rate used this round (infinite before the first gap).
    pub lambda: f64,
}

#[derive(Debug, Clone)]
struct Pending {
    t: usize,
    play: Point,
    base_plays: Vec<Point>,
}

/// State of the aggregation meta-learner.
#[derive(Debug, Clone)]
pub struct MetaState {
    bases: Vec<CyclicFbState>,
    weights: Vec<f64>,
    cum_loss: Vec<f64>,
    mu: f64,
    rate: Rate,
    pending: Option<Pending>,
    last: Option<RoundSummary>,
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, "must be positive and finite"))
    }
}

impl MetaState {
    fn with_bases(k: usize, z1: Point, mu: f64, schedule: StepSchedule, rate: Rate) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("K", "must be at least 1"));
        }
        let bases = (1..=k).map(|i| CyclicFbState::new(i, z1.clone(), schedule)).collect::<Result<Vec<_>>>()?;
        Ok(MetaState {
            bases,
            weights: vec![1.0 / k as f64; k],
            cum_loss: vec![0.0; k],
            mu,
            rate,
            pending: None,
            last: None,
        })
    }

    /// Fixed learning rate `λ = 1 / (4μ(D + G/μ)²)` with bases stepping `1/(μs)` on surrogates.
    pub fn fixed(k: usize, z1: Point, mu: f64, diameter: f64, gbound: f64) -> Result<Self> {
        check_positive("mu", mu)?;
        check_positive("D", diameter)?;
        if !(gbound >= 0.0 && gbound.is_finite()) {
            return Err(Error::config("G", "must be nonnegative and finite"));
        }
        let lambda = 1.0 / (4.0 * mu * (diameter + gbound / mu).powi(2));
        Self::with_bases(k, z1, mu, StepSchedule::InverseMuT(mu), Rate::Fixed { lambda })
    }

    /// Adaptive learning rate with bases stepping `1/L` on the true operators.
    pub fn adaptive(k: usize, z1: Point, mu: f64, lip: f64) -> Result<Self> {
        check_positive("mu", mu)?;
        check_positive("L", lip)?;
        let rate = Rate::Adaptive { lambda: f64::INFINITY, cum_gap: 0.0, t0: None };
        Self::with_bases(k, z1, mu, StepSchedule::Constant(1.0 / lip), rate)
    }

    pub fn with_indexing(mut self, indexing: SlotIndexing) -> Self {
        self.bases = self.bases.into_iter().map(|b| b.with_indexing(indexing)).collect();
        self
    }

    pub fn k(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[CyclicFbState] {
        &self.bases
    }

    /// Current weights `p_t`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cum_loss(&self) -> &[f64] {
        &self.cum_loss
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self.rate, Rate::Adaptive { .. })
    }

    /// Learning rate for the next round; infinite during the adaptive warm-up.
    pub fn lambda(&self) -> f64 {
        match self.rate {
            Rate::Fixed { lambda } | Rate::Adaptive { lambda, .. } => lambda,
        }
    }

    /// `Σ_{s ≥ T₀} (ℓ̄_s − m_s)_+`; zero in fixed mode.
    pub fn cum_gap(&self) -> f64 {
        match self.rate {
            Rate::Adaptive { cum_gap, .. } => cum_gap,
            Rate::Fixed { .. } => 0.0,
        }
    }

    /// The round `T₀` at which the mix loss first fell strictly below `ℓ̄_t`.
    pub fn t0(&self) -> Option<usize> {
        match self.rate {
            Rate::Adaptive { t0, .. } => t0,
            Rate::Fixed { .. } => None,
        }
    }

    pub fn last_round(&self) -> Option<&RoundSummary> {
        self.last.as_ref()
    }

    /// Base plays `Z_t^(i)` for round `t`, without updating.
    pub fn base_plays(&self, t: usize) -> Vec<Point> {
        self.bases.iter().map(|b| b.current(t).clone()).collect()
    }

    /// Plays `Z_t = Σ_i p_{t,i} Z_t^(i)`. Must be followed by [`observe`](Self::observe).
    pub fn play(&mut self, t: usize) -> Point {
        let base_plays = self.base_plays(t);
        let mut play = base_plays[0].scale(self.weights[0]);
        for (w, z) in self.weights.iter().zip(&base_plays).skip(1) {
            play.axpy(*w, z, 1.0);
        }
        self.pending = Some(Pending { t, play: play.clone(), base_plays });
        play
    }

    /// Observes `F_t`, updates weights and bases, and returns `F_t(Z_t)`.
    pub fn observe(&mut self, t: usize, domain: &Domain, op: &Operator) -> Result<Point> {
        let pending = match self.pending.take() {
            Some(p) if p.t == t => p,
            _ => {
                self.play(t);
                self.pending.take().expect("play sets pending")
            }
        };
        let Pending { play, base_plays, .. } = pending;
        let g = op.evaluate(&play)?;
        let losses: Vec<f64> =
            base_plays.iter().map(|z| g.dot(z) + 0.5 * self.mu * (z - &play).norm_squared()).collect();
        let avg_loss = g.dot(&play);
        for (c, l) in self.cum_loss.iter_mut().zip(&losses) {
            *c += l;
        }

        let lambda_used = self.lambda();
        let mix = mix_loss(&self.weights, &losses, lambda_used);
        let k = self.k() as f64;
        match &mut self.rate {
            Rate::Fixed { lambda } => {
                self.weights = exp_weights(&self.cum_loss, *lambda);
                let surrogate = make_surrogate(&g, &play, self.mu)?;
                for base in &mut self.bases {
                    base.update(t, domain, &surrogate)?;
                }
            }
            Rate::Adaptive { lambda, cum_gap, t0 } => {
                if t0.is_none() && mix < avg_loss - TIE_TOLERANCE {
                    *t0 = Some(t);
                }
                if t0.is_some() {
                    *cum_gap += (avg_loss - mix).max(0.0);
                    *lambda = k.ln() / *cum_gap;
                    self.weights = exp_weights(&self.cum_loss, *lambda);
                } else {
                    self.weights = uniform_over_argmin(&self.cum_loss, TIE_TOLERANCE);
                }
                for base in &mut self.bases {
                    base.update(t, domain, op)?;
                }
            }
        }
        self.last = Some(RoundSummary { t, losses, avg_loss, mix_loss: mix, lambda: lambda_used });
        Ok(g)
    }

    /// One full round: play, then observe. Returns `(Z_t, F_t(Z_t))`.
    pub fn step(&mut self, t: usize, domain: &Domain, op: &Operator) -> Result<(Point, Point)> {
        let play = self.play(t);
        let g = self.observe(t, domain, op)?;
        Ok((play, g))
    }
}
