//! Streaming release mechanisms over unbounded streams with values in `[0, 1]`.
//!
//! Every mechanism is a single-owner state machine: feed one value per step
//! with [`ContinualCounter::step`] and get that step's release back. Noise
//! comes from a [`NoiseSource`](crate::noise::NoiseSource), so the same code
//! runs with keyed noise, with no noise, or against a replayed ledger.

mod baseline;
mod expiration;
mod simple;

pub use baseline::{BaselineMechanism, BaselineParams};
pub use expiration::{ExpirationMechanism, LogMechanism};
pub use simple::SimpleMechanism;

use thiserror::Error;

use crate::fixed::Fixed;
use crate::noise::{LaplaceScale, MAX_SCALE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("input at step {step} must lie in [0, 1], got {value}")]
    InputOutOfRange { step: u64, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

pub trait ContinualCounter {
    /// Consumes the next stream value and returns the release for this step.
    fn step(&mut self, x: f64) -> Result<f64, MechanismError>;

    /// Number of steps consumed so far.
    fn time(&self) -> u64;
}

/// Validated input converted to the exact accumulator type.
pub(crate) fn check_input(step: u64, x: f64) -> Result<Fixed, MechanismError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(MechanismError::InputOutOfRange { step, value: x });
    }
    Ok(Fixed::from_f64(x).expect("value in [0, 1]"))
}

/// Parameters of the level-budgeted mechanism: privacy parameter `epsilon`,
/// level-budget exponent `lambda` and output `delay`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismParams {
    epsilon: f64,
    lambda: f64,
    delay: u64,
}

impl MechanismParams {
    pub fn new(epsilon: f64, lambda: f64, delay: u64) -> Result<Self, MechanismError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(MechanismError::InvalidParams(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(MechanismError::InvalidParams(format!(
                "lambda must be non-negative and finite, got {lambda}"
            )));
        }
        let params = Self {
            epsilon,
            lambda,
            delay,
        };
        // The extreme scales sit at level 0 and at the top level.
        for level in [0, crate::dyadic::MAX_LEVEL] {
            let b = params.level_scale_value(level);
            if !(b.is_finite() && b > 0.0 && b <= MAX_SCALE) {
                return Err(MechanismError::InvalidParams(format!(
                    "epsilon {epsilon} with lambda {lambda} gives level-{level} noise scale {b}"
                )));
            }
        }
        Ok(params)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delay(&self) -> u64 {
        self.delay
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self, MechanismError> {
        Self::new(epsilon, self.lambda, self.delay)
    }

    /// `(1 + ℓ)^(λ − 1)`: the share of the budget spent on one level-`ℓ` interval.
    pub fn level_weight(&self, level: u32) -> f64 {
        (1.0 + level as f64).powf(self.lambda - 1.0)
    }

    fn level_scale_value(&self, level: u32) -> f64 {
        (1.0 + level as f64).powf(1.0 - self.lambda) / self.epsilon
    }

    /// Noise scale `(1 + ℓ)^(1 − λ) / ε` of level-`ℓ` intervals.
    pub fn level_scale(&self, level: u32) -> LaplaceScale {
        LaplaceScale::new(self.level_scale_value(level)).expect("validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(MechanismParams::new(1.0, 0.0, 0).is_ok());
        assert!(MechanismParams::new(0.0, 1.0, 0).is_err());
        assert!(MechanismParams::new(-1.0, 1.0, 0).is_err());
        assert!(MechanismParams::new(1.0, -0.5, 0).is_err());
        assert!(MechanismParams::new(f64::NAN, 1.0, 0).is_err());
        assert!(MechanismParams::new(1e-30, 1.0, 0).is_err());
    }

    #[test]
    fn level_scales() {
        let p = MechanismParams::new(1.0, 2.0, 0).unwrap();
        assert_eq!(p.level_scale(0).value(), 1.0);
        assert_eq!(p.level_scale(1).value(), 0.5);
        assert!((p.level_scale(2).value() - 1.0 / 3.0).abs() < 1e-15);
        let p = MechanismParams::new(0.5, 1.0, 0).unwrap();
        for level in 0..20 {
            assert_eq!(p.level_scale(level).value(), 2.0);
            assert_eq!(p.level_weight(level), 1.0);
        }
    }

    #[test]
    fn input_check() {
        assert!(check_input(1, 0.0).is_ok());
        assert!(check_input(1, 1.0).is_ok());
        assert_eq!(
            check_input(4, 1.5),
            Err(MechanismError::InputOutOfRange {
                step: 4,
                value: 1.5
            })
        );
        assert!(check_input(1, -0.0).is_ok());
        assert!(check_input(1, f64::NAN).is_err());
    }
}
