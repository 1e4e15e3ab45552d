//! Tracking solutions of time-varying variational inequalities.
//!
//! The crate is organised around five modules:
//!
//! * [`vi`]: domains with exact projections, operators with their μ / L / G
//!   metadata, and problem sequences `(F_t)`.
//! * [`algorithms`]: projected forward and resolvent steps, the cyclic
//!   forward-backward learner and the two expert-aggregation meta-algorithms,
//!   driven by [`algorithms::run_tracker`].
//! * [`metrics`]: tracking error, path length, dynamic regret and closed-form
//!   bound evaluators.
//! * [`scenarios`]: concrete problem instances, including the adaptive
//!   lower-bound adversary.
//! * [`dynamics`]: fixed-step gradient descent on periodic problems viewed as a
//!   discrete dynamical system (orbits, bifurcation scans, periodic orbits,
//!   period-three search, star-shaped limit sets).

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod dynamics;
mod error;
pub mod metrics;
pub mod scenarios;
pub mod vi;

pub use error::{Error, Result};

/// A point of `R^d`.
pub type Point = nalgebra::DVector<f64>;
