use log::warn;
use nalgebra::{dmatrix, dvector};

use crate::error::Result;
use crate::vi::{AdaptiveSource, Operator};
use crate::Point;

/// Next minimizer chosen against `play ∈ [−1, 1]` given the previous minimizer.
///
/// For `play ≥ 0`: from `{0, 1}` jump to `−1`; from `−1` move to `0` if
/// `play ≥ 1/2`, otherwise to `1`. Negative plays are handled by sign flip.
pub fn adversary_step(prev: f64, play: f64) -> f64 {
    if play < 0.0 {
        return -adversary_step(-prev, -play);
    }
    if prev == -1.0 {
        if play >= 0.5 {
            0.0
        } else {
            1.0
        }
    } else {
        -1.0
    }
}

/// `F_t(x) = x − Z*_t` on `[−1, 1]`, with `Z*_t` picked after seeing the play.
#[derive(Debug, Clone)]
pub struct LowerBoundAdversary {
    prev: f64,
}

impl LowerBoundAdversary {
    /// Starts from `Z*_0 = 0`.
    pub fn new() -> Self {
        LowerBoundAdversary { prev: 0.0 }
    }

    pub fn previous(&self) -> f64 {
        self.prev
    }
}

impl Default for LowerBoundAdversary {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn quadratic_at(target: f64) -> Operator {
    Operator::affine(dmatrix![1.0], dvector![-target])
        .expect("1x1 affine")
        .with_mu(1.0)
        .with_lip(1.0)
        .with_gbound(2.0)
        .with_solution(dvector![target])
}

impl AdaptiveSource for LowerBoundAdversary {
    fn reveal(&mut self, _t: usize, play: &Point) -> Result<Operator> {
        let mut x = play[0];
        if !(-1.0..=1.0).contains(&x) {
            warn!("adversary received play {x} outside [-1, 1]; clamping");
            x = x.clamp(-1.0, 1.0);
        }
        self.prev = adversary_step(self.prev, x);
        Ok(quadratic_at(self.prev))
    }
}
