//! Differentially private continual counting with gradual privacy expiration.
//!
//! The crate provides streaming counters whose privacy loss for an input
//! grows slowly with the time elapsed since it was seen, together with the
//! tooling to check that behaviour:
//!
//! - [`dyadic`]: dyadic intervals, decompositions and the intervals
//!   containing a position.
//! - [`noise`]: Laplace sampling, keyed deterministic draws and tail bounds.
//! - [`mechanisms`]: the simple counter, the level-budgeted tree mechanism
//!   with optional delay, and a windowed binary-mechanism baseline.
//! - [`audit`]: exact worst-case privacy-loss curves, closed-form bounds and
//!   an executable check of the shift coupling.
//! - [`calibration`]: analytic MSE, calibration to a target MSE and error bounds.

pub mod audit;
pub mod calibration;
pub mod dyadic;
pub mod fixed;
pub mod mechanisms;
pub mod noise;
