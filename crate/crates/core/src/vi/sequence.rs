//! Time-indexed sequences of operators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vi::Operator;
use crate::Point;

type ScheduleFn = dyn Fn(usize) -> Operator + Send + Sync;

/// A sequence whose operator at time `t` depends on the learner's play `Z_t`.
pub trait AdaptiveSource: Send {
    /// Emits the operator for round `t` after seeing the play.
    fn reveal(&mut self, t: usize, play: &Point) -> Result<Operator>;
}

enum Source {
    /// Operators `F_1, …, F_k` repeated with period `k`.
    Cycle(Vec<Operator>),
    /// Pure schedule `t ↦ F_t`.
    Schedule(Arc<ScheduleFn>),
    Adaptive(Box<dyn AdaptiveSource>),
}

/// The sequence `(F_t)_{t ≥ 1}` of a time-varying problem. Time starts at 1.
pub struct ProblemSequence {
    dim: usize,
    period: Option<usize>,
    source: Source,
}

impl fmt::Debug for ProblemSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.source {
            Source::Cycle(_) => "cycle",
            Source::Schedule(_) => "schedule",
            Source::Adaptive(_) => "adaptive",
        };
        f.debug_struct("ProblemSequence")
            .field("dim", &self.dim)
            .field("period", &self.period)
            .field("source", &kind)
            .finish()
    }
}

impl ProblemSequence {
    /// `k`-periodic sequence with `ops[0] = F_1`, …, `ops[k-1] = F_k`.
    pub fn periodic(ops: Vec<Operator>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::config("period", "need at least one operator"))?;
        let dim = first.dim();
        if let Some(bad) = ops.iter().find(|op| op.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
        }
        Ok(ProblemSequence { dim, period: Some(ops.len()), source: Source::Cycle(ops) })
    }

    /// Sequence given by a pure schedule; `period` is metadata only.
    pub fn scheduled<F>(dim: usize, period: Option<usize>, schedule: F) -> Self
    where
        F: Fn(usize) -> Operator + Send + Sync + 'static,
    {
        ProblemSequence { dim, period, source: Source::Schedule(Arc::new(schedule)) }
    }

    pub fn adaptive(dim: usize, source: Box<dyn AdaptiveSource>) -> Self {
        ProblemSequence { dim, period: None, source: Source::Adaptive(source) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self.source, Source::Adaptive(_))
    }

    /// `F_t` for pure sequences.
    pub fn at(&self, t: usize) -> Result<Operator> {
        assert!(t >= 1, "time starts at 1");
        match &self.source {
            Source::Cycle(ops) => Ok(ops[(t - 1) % ops.len()].clone()),
            Source::Schedule(f) => Ok(f(t)),
            Source::Adaptive(_) => Err(Error::AdaptiveSequence),
        }
    }

    /// `F_t` given the play `Z_t`; the play is ignored by pure sequences.
    pub fn reveal(&mut self, t: usize, play: &Point) -> Result<Operator> {
        match &mut self.source {
            Source::Adaptive(src) => src.reveal(t, play),
            _ => self.at(t),
        }
    }

    /// `Z*_t` when known analytically (pure sequences only).
    pub fn solution(&self, t: usize) -> Option<Point> {
        self.at(t).ok().and_then(|op| op.solution)
    }

    /// The `k` operators of one period.
    pub fn one_period(&self) -> Result<Vec<Operator>> {
        let k = self.period.ok_or(Error::NotPeriodic)?;
        (1..=k).map(|t| self.at(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn scalar(a: f64) -> Operator {
        Operator::affine(dmatrix![a], dvector![0.0]).unwrap().with_solution(dvector![0.0])
    }

    #[test]
    fn periodic_repeats() {
        let seq = ProblemSequence::periodic(vec![scalar(8.0), scalar(1.0)]).unwrap();
        let p = dvector![1.0];
        for t in 1..10 {
            let a = seq.at(t).unwrap().evaluate(&p).unwrap();
            let b = seq.at(t + 2).unwrap().evaluate(&p).unwrap();
            assert_eq!(a, b);
            assert_eq!(seq.solution(t), seq.solution(t + 2));
        }
        assert_eq!(seq.at(1).unwrap().evaluate(&p).unwrap(), dvector![8.0]);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let two = Operator::affine(dmatrix![1.0, 0.0; 0.0, 1.0], dvector![0.0, 0.0]).unwrap();
        assert!(ProblemSequence::periodic(vec![scalar(1.0), two]).is_err());
    }

    #[test]
    fn adaptive_needs_play() {
        struct Echo;
        impl AdaptiveSource for Echo {
            fn reveal(&mut self, _t: usize, play: &Point) -> Result<Operator> {
                Ok(Operator::affine(dmatrix![1.0], -play.clone()).unwrap())
            }
        }
        let mut seq = ProblemSequence::adaptive(1, Box::new(Echo));
        assert_eq!(seq.at(1).unwrap_err(), Error::AdaptiveSequence);
        let op = seq.reveal(1, &dvector![3.0]).unwrap();
        assert_eq!(op.evaluate(&dvector![3.0]).unwrap(), dvector![0.0]);
    }
}
