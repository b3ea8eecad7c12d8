//! Discrete martingale optimal transport on the real line.
//!
//! The crate solves one-step martingale transport problems between finitely
//! supported marginals, measures distances between marginals and couplings
//! (W1, W⊕, adapted W1), and runs perturbation sweeps that track how the
//! optimal value and the martingale coupling sets react when the marginals
//! are perturbed.

pub mod adapted;
pub mod cli;
pub mod costexpr;
pub mod error;
pub mod io;
pub mod lp;
pub mod measures;
pub mod mot;
pub mod scalar;
pub mod stability;

pub use error::{Error, Result};
pub use lp::Sense;
pub use scalar::Scalar;
pub use num_rational::BigRational;

/// Double-precision measure.
pub type Measure = measures::DiscreteMeasure<f64>;
/// Measure with exact rational atoms and weights.
pub type ExactMeasure = measures::DiscreteMeasure<BigRational>;
pub type Pair = measures::MeasurePair<f64>;
pub type ExactPair = measures::MeasurePair<BigRational>;
pub type Plan = mot::Coupling<f64>;
pub type ExactPlan = mot::Coupling<BigRational>;
pub type Problem = mot::MotProblem<f64>;
pub type ExactProblem = mot::MotProblem<BigRational>;
