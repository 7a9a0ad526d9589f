use crate::fixed::Fixed;
use crate::noise::{LaplaceScale, NoiseSlot, NoiseSource};

use super::{check_input, ContinualCounter, MechanismError};

/// Linear-expiration mechanism: at step `t` releases `Σ_{i<t} x_i + Z_{t−1}`
/// with a fresh `Lap(1/ε)` per step. The first release is 0, so releases lag
/// the tree mechanisms by one step.
#[derive(Debug, Clone)]
pub struct SimpleMechanism<N> {
    scale: LaplaceScale,
    noise: N,
    t: u64,
    sum: Fixed,
}

impl<N: NoiseSource> SimpleMechanism<N> {
    pub fn new(epsilon: f64, noise: N) -> Result<Self, MechanismError> {
        let scale = LaplaceScale::new(1.0 / epsilon)
            .ok()
            .filter(|_| epsilon.is_finite() && epsilon > 0.0)
            .ok_or_else(|| MechanismError::InvalidParams(format!("unusable epsilon {epsilon}")))?;
        Ok(Self {
            scale,
            noise,
            t: 0,
            sum: Fixed::ZERO,
        })
    }

    pub fn noise_source(&self) -> &N {
        &self.noise
    }

    pub fn into_noise_source(self) -> N {
        self.noise
    }
}

impl<N: NoiseSource> ContinualCounter for SimpleMechanism<N> {
    fn step(&mut self, x: f64) -> Result<f64, MechanismError> {
        let x = check_input(self.t + 1, x)?;
        self.t += 1;
        let out = if self.t == 1 {
            Fixed::ZERO
        } else {
            self.sum + self.noise.noise(NoiseSlot::Step(self.t - 1), self.scale)
        };
        self.sum += x;
        Ok(out.to_f64())
    }

    fn time(&self) -> u64 {
        self.t
    }
}
