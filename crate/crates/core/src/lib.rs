//! Birkhoff averages, maximal functions and the maximal ergodic inequality,
//! checked exactly on finite measure-preserving systems and by sampling on
//! classical maps of the unit interval.
//!
//! - [`dynamics`]: finite and interval systems, observables, sample plans.
//! - [`averages`]: `A_k f`, `f*_N`, `f*`, level sets, limits, truncation, integrals.
//! - [`covering`]: the greedy zero-run / positive-block certificate.
//! - [`verify`]: executable checks producing [`verify::VerificationReport`]s.
//! - [`io`]: system-description files and certificate export.

pub mod averages;
pub mod covering;
pub mod dynamics;
pub mod io;
pub mod rational;
pub mod verify;

pub use averages::Horizon;
pub use dynamics::{FiniteSystem, IntervalObservable, IntervalPoint, IntervalSystem, Observable, SamplePlan};
pub use rational::Rational;
