//! Valuation of expected discounted rewards for piecewise deterministic Markov
//! processes (PDMPs).
//!
//! The cost functional is rewritten as a truncated sum of fixed-dimension
//! iterated integrals, one per jump, and evaluated with deterministic cubature
//! (Sobol', scrambled Halton, Gauss–Legendre products) or plain Monte Carlo.
//! Non-smooth model ingredients (the drift kink at zero surplus, the dividend
//! barrier, branch indicators of mixture kernels) are replaced by C² blends
//! built from a quintic Heaviside function so that the integrands are regular
//! enough for cubature.
//!
//! Module map:
//!
//! * [`model`]: state spaces, local characteristics, analytic bounds.
//! * [`smoothing`]: Heaviside, smooth joins, smoothed drift/reward/kernels.
//! * [`flow`]: ODE master trajectory with cached discounted reward.
//! * [`loan`]: the Cramér–Lundberg model with loan, smoothed.
//! * [`operators`]: iterated integrand and truncated-sum estimators.
//! * [`cubature`]: point sets, weights and discrepancy oracles.
//! * [`mc`]: event-driven path simulation of the unsmoothed model.
//! * [`harness`]: experiments, config files, CSV output, validation suite.

// `!(x > 0.0)`-style guards are used on purpose so NaN is rejected.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod cubature;
pub mod error;
pub mod flow;
pub mod harness;
pub mod loan;
pub mod mc;
pub mod model;
pub mod operators;
pub mod parallel;
pub mod smoothing;

pub use error::{Error, Result};
pub use loan::{ClaimDistribution, LoanParams, SmoothedLoanModel, Substitution};
pub use operators::{estimate_value, Estimate};
