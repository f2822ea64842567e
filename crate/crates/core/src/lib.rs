//! Optimum strategies for exponential moments `E exp{α ℓ(X,s)}` over finite
//! probability spaces.
//!
//! The crate is organized bottom-up:
//!
//! - [`probability`]: finite distributions, entropies, divergences and the
//!   exponentially tilted measure.
//! - [`strategy`]: exponential moments over a finite strategy table, the
//!   Gibbs variational identity, the tilted-measure optimality certificate,
//!   the min-max/max-min gap and Monte Carlo cross-checks.
//! - [`altmin`]: alternating minimization for the negative-moment criterion.
//! - [`estimators`]: closed forms and fixed points for coding and estimation
//!   instances, and a Cramér–Rao based lower bound.
//! - [`exponents`]: asymptotic exponents `max_Q[αλ(Q) − D(Q‖P)]`, guessing
//!   and rate-distortion exponents, exact finite-n type enumeration.
//! - [`curie_weiss`]: the Curie–Weiss phase diagram of the squared-error
//!   moment of the binary sample mean.
//!
//! All information quantities are in nats.

pub mod altmin;
pub mod curie_weiss;
pub mod error;
pub mod estimators;
pub mod exponents;
pub mod numfmt;
pub mod probability;
pub mod simplex;
pub mod strategy;

pub use error::{Error, Result};
pub use probability::{FiniteDistribution, TiltResult};
pub use strategy::{CertificateReport, FiniteCostTable, MCEstimate};
