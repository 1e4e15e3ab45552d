//! Domains, operators and problem sequences of time-varying variational
//! inequalities, with sampled verification of their regularity constants.
//!
//! All geometry uses the Euclidean norm.

mod check;
mod domain;
mod operator;
mod sequence;

pub use check::{
    analytic_solution, check_lipschitz, check_restricted_secant, check_strong_monotone, estimate_lipschitz,
    finite_difference_gradient, gradient_deviation, relative_gradient_deviation, Sampler, CHECK_SLACK,
    SAMPLING_HALF_WIDTH,
};
pub use domain::Domain;
pub use operator::{sigmoid, softplus, Link, Operator, OperatorKind};
pub use sequence::{AdaptiveSource, ProblemSequence};
