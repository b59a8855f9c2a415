//! Experiment kit for distribution-tested learning of polynomial threshold
//! functions under the standard Gaussian.
//!
//! The crate is organised around a handful of pipelines:
//!
//! * [`tester`]: absolute moment-matching acceptance tests for sample sets,
//!   plus the sample-size bookkeeping that goes with them.
//! * [`learner`]: degree-bounded L1 polynomial regression with threshold
//!   rounding, gated behind the tester.
//! * [`fooling`]: sign-expectation gaps between finite distributions and the
//!   Gaussian, and the block lift that turns moment matching in low dimension
//!   into multilinear structure in high dimension.
//! * [`signapprox`]: one-dimensional best-L1 approximation of the sign
//!   function under Gaussian push-forward weights, where the interesting
//!   obstructions live.
//!
//! Shared vocabulary types ([`MultiIndex`], [`Polynomial`],
//! [`DiscreteDistribution`], ...) are re-exported from the crate root.

pub mod algebra;
pub mod distributions;
pub mod fooling;
pub mod io;
pub mod learner;
pub mod lp;
pub mod quadrature;
pub mod signapprox;
pub mod tester;

mod error;
mod sums;

pub use algebra::{MultiIndex, Polynomial};
pub use distributions::{BlockSpec, DiscreteDistribution, UnivariateWeight};
pub use error::{Error, Result};
pub use fooling::{FoolingReport, LiftResult, LiftSlackReport};
pub use io::SampleTable;
pub use learner::{LabelModel, LabeledSet, LearnOutcome, PtfClassifier};
pub use signapprox::{SignApproxProblem, SignApproxResult, SuiteRow};
pub use tester::{MomentTable, TesterVerdict};

/// Sign convention used everywhere in this crate: `sign(0) = +1`.
#[inline]
pub fn sign(value: f64) -> f64 {
    if value >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::sign;

    #[test]
    fn sign_of_zero_is_plus_one() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
        assert_eq!(sign(3.5), 1.0);
        assert_eq!(sign(-1e-300), -1.0);
    }
}
