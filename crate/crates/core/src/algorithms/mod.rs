//! Tracking algorithms: single-iterate contractive steps, the cyclic forward-backward
//! base learner and the aggregation meta-learners, plus the online protocol driver.

pub mod aggregate;
mod cyclic;
mod meta;
mod steps;
mod tracker;

pub use cyclic::{CyclicFbState, SlotIndexing};
pub use meta::{MetaState, RoundSummary, TIE_TOLERANCE};
pub use steps::{forward_step, make_surrogate, resolvent_step, StepSchedule};
pub use tracker::{
    run_tracker, run_tracker_with_threshold, Algorithm, RunStatus, Trajectory, DEFAULT_DIVERGENCE_THRESHOLD,
};
