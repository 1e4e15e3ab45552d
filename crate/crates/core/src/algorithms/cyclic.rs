use crate::algorithms::StepSchedule;
use crate::error::{Error, Result};
use crate::vi::{Domain, Operator};
use crate::Point;

/// How round `t` is mapped to a slot of a period-`i` learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotIndexing {
    /// Slot `((t − 1) mod i) + 1`: round 1 touches slot 1.
    #[default]
    Shifted,
    /// Slot `(t mod i) + 1`, as literally written in the algorithm listing.
    Literal,
}

impl SlotIndexing {
    /// Zero-based slot for round `t ≥ 1`.
    pub fn slot(self, t: usize, period: usize) -> usize {
        match self {
            SlotIndexing::Shifted => (t - 1) % period,
            SlotIndexing::Literal => t % period,
        }
    }
}

/// Cyclic forward-backward learner with assumed period `i`: `i` independent
/// iterates, updated round-robin with a projected forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicFbState {
    slots: Vec<Point>,
    slot_steps: Vec<usize>,
    schedule: StepSchedule,
    indexing: SlotIndexing,
}

impl CyclicFbState {
    pub fn new(period: usize, z1: Point, schedule: StepSchedule) -> Result<Self> {
        if period == 0 {
            return Err(Error::config("period", "must be at least 1"));
        }
        schedule.validate()?;
        Ok(CyclicFbState {
            slots: vec![z1; period],
            slot_steps: vec![0; period],
            schedule,
            indexing: SlotIndexing::Shifted,
        })
    }

    pub fn with_indexing(mut self, indexing: SlotIndexing) -> Self {
        self.indexing = indexing;
        self
    }

    pub fn period(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Point] {
        &self.slots
    }

    pub fn slot_steps(&self) -> &[usize] {
        &self.slot_steps
    }

    /// Zero-based slot index and per-slot time `s` used at round `t`.
    pub fn select(&self, t: usize) -> (usize, usize) {
        let n = self.indexing.slot(t, self.period());
        (n, self.slot_steps[n] + 1)
    }

    /// The play `Z_t`, without updating.
    pub fn current(&self, t: usize) -> &Point {
        &self.slots[self.select(t).0]
    }

    /// Applies `Z ← Proj(Z − η_s F̃(Z))` to the slot of round `t`.
    pub fn update(&mut self, t: usize, domain: &Domain, op: &Operator) -> Result<()> {
        let g = op.evaluate(self.current(t))?;
        self.apply(t, domain, &g)
    }

    /// Same as [`update`](Self::update) with `F̃(Z)` already evaluated at the current slot.
    pub fn apply(&mut self, t: usize, domain: &Domain, g: &Point) -> Result<()> {
        let (n, s) = self.select(t);
        self.slots[n] = domain.project(&(&self.slots[n] - g * self.schedule.eta(s)))?;
        self.slot_steps[n] += 1;
        Ok(())
    }

    /// Plays then updates; returns the play.
    pub fn step(&mut self, t: usize, domain: &Domain, op: &Operator) -> Result<Point> {
        let play = self.current(t).clone();
        self.update(t, domain, op)?;
        Ok(play)
    }
}
