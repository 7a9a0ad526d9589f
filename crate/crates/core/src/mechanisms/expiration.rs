use std::collections::VecDeque;

use crate::dyadic::DyadicInterval;
use crate::fixed::Fixed;
use crate::noise::{NoiseSlot, NoiseSource};

use super::{check_input, ContinualCounter, MechanismError, MechanismParams};

/// Delayed, level-budgeted tree mechanism.
///
/// For `t ≤ B` releases 0. Afterwards releases
/// `Σ_{i ≤ t−B} x_i + Σ_{I ∋ t−B} z_I` with `z_I ~ Lap((1+ℓ)^(1−λ)/ε)` for a
/// level-`ℓ` interval `I`.
///
/// The noise total is maintained incrementally: moving to position `p`
/// replaces the intervals of levels `0..=tz(p)` (`tz` = trailing zeros), which
/// are exactly the levels whose containing interval starts at `p`. Over `T`
/// steps this is fewer than `2T` draws.
#[derive(Debug, Clone)]
pub struct ExpirationMechanism<N> {
    params: MechanismParams,
    noise: N,
    t: u64,
    delayed_sum: Fixed,
    buffer: VecDeque<Fixed>,
    /// Indexed by level.
    active: Vec<(DyadicInterval, Fixed)>,
    noise_total: Fixed,
    redraws: u64,
}

impl<N: NoiseSource> ExpirationMechanism<N> {
    pub fn new(params: MechanismParams, noise: N) -> Self {
        Self {
            params,
            noise,
            t: 0,
            delayed_sum: Fixed::ZERO,
            buffer: VecDeque::with_capacity(params.delay().min(1 << 16) as usize),
            active: Vec::with_capacity(64),
            noise_total: Fixed::ZERO,
            redraws: 0,
        }
    }

    pub fn params(&self) -> &MechanismParams {
        &self.params
    }

    /// Noise values currently folded into the release, lowest level first.
    pub fn active_noises(&self) -> &[(DyadicInterval, Fixed)] {
        &self.active
    }

    pub fn noise_total(&self) -> Fixed {
        self.noise_total
    }

    /// Exact sum of the first `t − B` inputs.
    pub fn delayed_sum(&self) -> Fixed {
        self.delayed_sum
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Total noise draws so far.
    pub fn redraws(&self) -> u64 {
        self.redraws
    }

    pub fn noise_source(&self) -> &N {
        &self.noise
    }

    pub fn into_noise_source(self) -> N {
        self.noise
    }

    fn advance_noise(&mut self, position: u64) {
        let top = position.trailing_zeros();
        for level in 0..=top {
            let interval = DyadicInterval::new(level, position >> level)
                .expect("position >= 1 has a containing interval at each level up to its top bit");
            let z = self.noise.noise(
                NoiseSlot::Interval(interval),
                self.params.level_scale(level),
            );
            self.redraws += 1;
            self.noise_total += z;
            match self.active.get_mut(level as usize) {
                Some(slot) => {
                    self.noise_total -= slot.1;
                    *slot = (interval, z);
                }
                None => self.active.push((interval, z)),
            }
        }
    }
}

impl<N: NoiseSource> ContinualCounter for ExpirationMechanism<N> {
    fn step(&mut self, x: f64) -> Result<f64, MechanismError> {
        let x = check_input(self.t + 1, x)?;
        self.t += 1;
        self.buffer.push_back(x);
        if self.t <= self.params.delay() {
            return Ok(0.0);
        }
        let oldest = self.buffer.pop_front().expect("buffer holds B + 1 values");
        self.delayed_sum += oldest;
        self.advance_noise(self.t - self.params.delay());
        Ok((self.delayed_sum + self.noise_total).to_f64())
    }

    fn time(&self) -> u64 {
        self.t
    }
}

/// Tree mechanism with logarithmic expiration: the level-budgeted mechanism
/// with `λ = 1` and no delay, so every interval gets `Lap(1/ε)`.
#[derive(Debug, Clone)]
pub struct LogMechanism<N>(ExpirationMechanism<N>);

impl<N: NoiseSource> LogMechanism<N> {
    pub fn new(epsilon: f64, noise: N) -> Result<Self, MechanismError> {
        let params = MechanismParams::new(epsilon, 1.0, 0)?;
        Ok(Self(ExpirationMechanism::new(params, noise)))
    }

    pub fn inner(&self) -> &ExpirationMechanism<N> {
        &self.0
    }
}

impl<N: NoiseSource> ContinualCounter for LogMechanism<N> {
    fn step(&mut self, x: f64) -> Result<f64, MechanismError> {
        self.0.step(x)
    }

    fn time(&self) -> u64 {
        self.0.time()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::intersect;
    use crate::noise::{keyed_noise, KeyedNoise, NoiseKey, ZeroNoise};

    fn params(eps: f64, lambda: f64, delay: u64) -> MechanismParams {
        MechanismParams::new(eps, lambda, delay).unwrap()
    }

    #[test]
    fn zero_noise_with_delay() {
        let mut m = ExpirationMechanism::new(params(1.0, 2.0, 2), ZeroNoise);
        let out: Vec<f64> = [1.0; 4].iter().map(|&x| m.step(x).unwrap()).collect();
        assert_eq!(out, vec![0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn log_mechanism_zero_noise() {
        let mut m = LogMechanism::new(1.0, ZeroNoise).unwrap();
        let out: Vec<f64> = [1.0, 0.0, 1.0]
            .iter()
            .map(|&x| m.step(x).unwrap())
            .collect();
        assert_eq!(out, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn noise_at_seven_sums_three_keyed_draws() {
        let p = params(1.0, 2.0, 0);
        let mut m = ExpirationMechanism::new(p, KeyedNoise::new(9));
        let mut last = 0.0;
        for _ in 0..7 {
            last = m.step(0.0).unwrap();
        }
        let active: Vec<DyadicInterval> = m.active_noises().iter().map(|a| a.0).collect();
        assert_eq!(active, intersect(7));
        let expected: Fixed = intersect(7)
            .into_iter()
            .map(|i| {
                let z = keyed_noise(
                    NoiseKey::new(9, NoiseSlot::Interval(i)),
                    p.level_scale(i.level()),
                );
                Fixed::from_f64(z).unwrap()
            })
            .sum();
        assert_eq!(last, expected.to_f64());
        assert_eq!(
            m.active_noises()
                .iter()
                .map(|a| p.level_scale(a.0.level()).value())
                .collect::<Vec<_>>()[..2],
            [1.0, 0.5]
        );
    }

    #[test]
    fn lambda_one_matches_log_mechanism() {
        let mut a = LogMechanism::new(0.3, KeyedNoise::new(4)).unwrap();
        let mut b = ExpirationMechanism::new(params(0.3, 1.0, 0), KeyedNoise::new(4));
        for t in 0..300u64 {
            let x = (t % 3) as f64 / 2.0;
            assert_eq!(a.step(x).unwrap(), b.step(x).unwrap());
        }
    }

    #[test]
    fn state_bounds_hold() {
        let delay = 5;
        let mut m = ExpirationMechanism::new(params(1.0, 1.5, delay), KeyedNoise::new(1));
        for t in 1..=5000u64 {
            m.step(1.0).unwrap();
            assert!(m.buffer_len() as u64 <= delay);
            if t > delay {
                let p = t - delay;
                assert_eq!(m.active_noises().len() as u32, 63 - p.leading_zeros() + 1);
            } else {
                assert!(m.active_noises().is_empty());
            }
            assert!(m.redraws() <= 2 * t);
        }
    }

    #[test]
    fn bad_input_leaves_state_untouched() {
        let mut m = ExpirationMechanism::new(params(1.0, 1.0, 1), ZeroNoise);
        m.step(1.0).unwrap();
        assert!(m.step(-0.5).is_err());
        assert_eq!(m.time(), 1);
        assert_eq!(m.step(1.0).unwrap(), 1.0);
    }
}
