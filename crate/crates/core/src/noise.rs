//! Laplace noise: inverse-CDF sampling, keyed deterministic draws, and the
//! tail and concentration bounds used for error predictions.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::dyadic::DyadicInterval;
use crate::fixed::Fixed;

/// Largest accepted Laplace scale. Keeps every draw inside the fixed-point range.
pub const MAX_SCALE: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("Laplace scale must be finite and in (0, {MAX_SCALE}], got {0}")]
    InvalidScale(f64),
    #[error("uniform input must lie strictly inside (0, 1), got {0}")]
    UniformOutOfRange(f64),
    #[error("tail parameter must be non-negative, got {0}")]
    NegativeTail(f64),
    #[error("beta must lie strictly inside (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("at least one Laplace scale is required")]
    NoScales,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(b: f64) -> Result<Self, NoiseError> {
        if b.is_finite() && b > 0.0 && b <= MAX_SCALE {
            Ok(Self(b))
        } else {
            Err(NoiseError::InvalidScale(b))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.0 * self.0
    }
}

/// Inverse CDF of `Lap(b)` at `uniform`.
pub fn laplace_sample(scale: LaplaceScale, uniform: f64) -> Result<f64, NoiseError> {
    if !(uniform > 0.0 && uniform < 1.0) {
        return Err(NoiseError::UniformOutOfRange(uniform));
    }
    Ok(inverse_cdf(scale.0, uniform))
}

#[inline]
fn inverse_cdf(b: f64, u: f64) -> f64 {
    let centered = u - 0.5;
    if centered == 0.0 {
        return 0.0;
    }
    -b * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// Identifies one noise variable of a mechanism run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseSlot {
    /// Per-interval noise of the tree-based mechanisms.
    Interval(DyadicInterval),
    /// Per-step noise of the simple mechanism.
    Step(u64),
    /// Node of the binary tree inside one round of the windowed baseline.
    /// `index` counts 0-based blocks of length `2^level` within the round.
    RoundNode { round: u64, level: u32, index: u64 },
    /// Noise on the released past prefix at the start of a round.
    RoundPast(u64),
}

impl NoiseSlot {
    fn words(&self) -> [u64; 3] {
        match *self {
            NoiseSlot::Interval(i) => [1 | (i.level() as u64) << 8, i.index(), 0],
            NoiseSlot::Step(t) => [2, t, 0],
            NoiseSlot::RoundNode {
                round,
                level,
                index,
            } => [3 | (level as u64) << 8, round, index],
            NoiseSlot::RoundPast(r) => [4, r, 0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoiseKey {
    pub seed: u64,
    pub slot: NoiseSlot,
}

impl NoiseKey {
    pub fn new(seed: u64, slot: NoiseSlot) -> Self {
        Self { seed, slot }
    }

    /// Pseudorandom uniform in `(0, 1)`: ChaCha8 keyed by the whole key.
    pub fn uniform(&self) -> f64 {
        let mut material = [0u8; 32];
        let words = self.slot.words();
        material[..8].copy_from_slice(&self.seed.to_le_bytes());
        for (chunk, w) in material[8..].chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let bits = ChaCha8Rng::from_seed(material).next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Deterministic `Lap(scale)` draw for `key`.
pub fn keyed_noise(key: NoiseKey, scale: LaplaceScale) -> f64 {
    inverse_cdf(scale.0, key.uniform())
}

/// `e^{-t}`, an upper bound on `Pr[|X| > t·b]` for `X ~ Lap(b)`.
pub fn laplace_tail(_scale: LaplaceScale, t: f64) -> Result<f64, NoiseError> {
    if t.is_nan() || t < 0.0 {
        return Err(NoiseError::NegativeTail(t));
    }
    Ok((-t).exp())
}

/// Threshold `ν·√(8 ln(2/β))` exceeded by `|Σ Y_i|` with probability at most
/// `β`, for independent `Y_i ~ Lap(b_i)`.
///
/// Uses `ν = max(√(Σ b_i²), b_max·√(ln(2/β)))`; the bound is continuous in
/// `ν`, so the boundary value is taken rather than something strictly larger.
pub fn concentration_threshold(scales: &[LaplaceScale], beta: f64) -> Result<f64, NoiseError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(NoiseError::InvalidBeta(beta));
    }
    if scales.is_empty() {
        return Err(NoiseError::NoScales);
    }
    let log_term = (2.0 / beta).ln();
    let l2 = scales.iter().map(|s| s.0 * s.0).sum::<f64>().sqrt();
    let b_max = scales.iter().map(|s| s.0).fold(0.0, f64::max);
    let nu = l2.max(b_max * log_term.sqrt());
    Ok(nu * (8.0 * log_term).sqrt())
}

/// Where a mechanism gets its noise values from.
pub trait NoiseSource {
    fn noise(&mut self, slot: NoiseSlot, scale: LaplaceScale) -> Fixed;
}

fn to_fixed(z: f64) -> Fixed {
    // |z| <= 38·MAX_SCALE, far inside the fixed-point range.
    Fixed::from_f64(z).expect("Laplace draw exceeds fixed-point range")
}

/// Fresh keyed noise, nothing stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyedNoise {
    pub seed: u64,
}

impl KeyedNoise {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl NoiseSource for KeyedNoise {
    fn noise(&mut self, slot: NoiseSlot, scale: LaplaceScale) -> Fixed {
        to_fixed(keyed_noise(NoiseKey::new(self.seed, slot), scale))
    }
}

/// Every draw is zero; releases equal the exact (delayed) prefix sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn noise(&mut self, _slot: NoiseSlot, _scale: LaplaceScale) -> Fixed {
        Fixed::ZERO
    }
}

/// Record of every noise value referenced by a run.
///
/// Slots not yet recorded are filled from keyed noise on first use, so a
/// fresh ledger behaves exactly like [`KeyedNoise`] with the same seed.
/// Stored values take precedence, which is how shifted values are replayed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseLedger {
    seed: u64,
    entries: BTreeMap<NoiseSlot, Fixed>,
}

impl NoiseLedger {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            entries: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, slot: &NoiseSlot) -> Option<Fixed> {
        self.entries.get(slot).copied()
    }

    pub fn insert(&mut self, slot: NoiseSlot, value: Fixed) -> Option<Fixed> {
        self.entries.insert(slot, value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NoiseSlot, &Fixed)> {
        self.entries.iter()
    }
}

impl NoiseSource for NoiseLedger {
    fn noise(&mut self, slot: NoiseSlot, scale: LaplaceScale) -> Fixed {
        let seed = self.seed;
        *self
            .entries
            .entry(slot)
            .or_insert_with(|| to_fixed(keyed_noise(NoiseKey::new(seed, slot), scale)))
    }
}

impl<N: NoiseSource + ?Sized> NoiseSource for &mut N {
    fn noise(&mut self, slot: NoiseSlot, scale: LaplaceScale) -> Fixed {
        (**self).noise(slot, scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale(b: f64) -> LaplaceScale {
        LaplaceScale::new(b).unwrap()
    }

    #[test]
    fn inverse_cdf_examples() {
        assert_eq!(laplace_sample(scale(1.0), 0.5).unwrap(), 0.0);
        let v = laplace_sample(scale(1.0), 0.75).unwrap();
        assert!((v - 0.5f64.ln().abs()).abs() < 1e-15);
        let v = laplace_sample(scale(2.0), 0.25).unwrap();
        assert!((v + 1.386294).abs() < 1e-6);
    }

    #[test]
    fn uniform_outside_open_interval_is_rejected() {
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                laplace_sample(scale(1.0), u),
                Err(NoiseError::UniformOutOfRange(_))
            ));
        }
    }

    #[test]
    fn scale_must_be_positive_and_finite() {
        for b in [0.0, -1.0, f64::INFINITY, f64::NAN, 2e15] {
            assert!(LaplaceScale::new(b).is_err());
        }
    }

    #[test]
    fn keyed_noise_is_deterministic_and_key_separated() {
        let a = NoiseKey::new(7, NoiseSlot::Interval(DyadicInterval::new(0, 3).unwrap()));
        let b = NoiseKey::new(7, NoiseSlot::Interval(DyadicInterval::new(1, 3).unwrap()));
        assert_eq!(keyed_noise(a, scale(1.0)), keyed_noise(a, scale(1.0)));
        assert_ne!(a.uniform(), b.uniform());
        let other_seed = NoiseKey::new(8, a.slot);
        assert_ne!(a.uniform(), other_seed.uniform());
        let step = NoiseKey::new(7, NoiseSlot::Step(3));
        assert_ne!(a.uniform(), step.uniform());
    }

    #[test]
    fn halving_scale_halves_noise_exactly() {
        let key = NoiseKey::new(11, NoiseSlot::Step(5));
        assert_eq!(
            keyed_noise(key, scale(0.5)),
            0.5 * keyed_noise(key, scale(1.0))
        );
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(laplace_tail(scale(1.0), 0.0).unwrap(), 1.0);
        assert!((laplace_tail(scale(3.0), 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!(laplace_tail(scale(1.0), -1.0).is_err());
    }

    #[test]
    fn concentration_threshold_single_term() {
        let beta = 2.0 / std::f64::consts::E.powi(2);
        let bound = concentration_threshold(&[scale(1.0)], beta).unwrap();
        assert!((bound - 4.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn concentration_threshold_equal_scales_matches_closed_form() {
        for (k, b, beta) in [
            (1usize, 1.0, 0.01),
            (10, 0.5, 0.05),
            (40, 2.0, 1e-6),
            (3, 1.0, 0.5),
        ] {
            let scales = vec![scale(b); k];
            let got = concentration_threshold(&scales, beta).unwrap();
            let l = (2.0 / beta).ln();
            let want = 2.0 * b * (2.0 * l).sqrt() * (k as f64).sqrt().max(l.sqrt());
            assert!((got - want).abs() <= 1e-12 * want, "{k} {b} {beta}");
        }
    }

    #[test]
    fn concentration_threshold_rejects_bad_input() {
        assert!(concentration_threshold(&[scale(1.0)], 0.0).is_err());
        assert!(concentration_threshold(&[scale(1.0)], 1.0).is_err());
        assert!(concentration_threshold(&[], 0.1).is_err());
    }

    #[test]
    fn ledger_fills_from_keyed_noise_and_replays() {
        let slot = NoiseSlot::RoundPast(2);
        let mut keyed = KeyedNoise::new(3);
        let mut ledger = NoiseLedger::new(3);
        let v = ledger.noise(slot, scale(2.0));
        assert_eq!(v, keyed.noise(slot, scale(2.0)));
        ledger.insert(slot, Fixed::from_int(5));
        assert_eq!(ledger.noise(slot, scale(2.0)), Fixed::from_int(5));
        assert_eq!(ledger.len(), 1);
    }
}
