//! Analytic MSE of each mechanism, calibration of privacy parameters to a
//! target MSE, the baseline's budget split, and high-probability error bounds.
//!
//! MSE here is the average over steps `1..=T` of the release's noise variance.
//! It does not depend on the input, and it scales as `1/ε²`, so calibration is
//! a closed-form rescaling of the MSE at `ε = 1`.

use thiserror::Error;

use crate::dyadic::floor_log2;
use crate::mechanisms::{
    BaselineParams, ContinualCounter, ExpirationMechanism, MechanismError, MechanismParams,
};
use crate::noise::{concentration_threshold, KeyedNoise, LaplaceScale, NoiseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("target MSE must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("budget ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),
    #[error("optimal ratio needs more than one round: window {window} >= horizon {horizon}")]
    SingleRound { window: u64, horizon: u64 },
    #[error("no interior minimum in [{lo:e}, {hi:e}]: best ratio {best:e}")]
    NotBracketed { lo: f64, hi: f64, best: f64 },
    #[error("step {step} lies inside the delay {delay}")]
    InsideDelay { step: u64, delay: u64 },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Calibrated parameters and the MSE they achieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult<P> {
    pub params: P,
    pub achieved_mse: f64,
    pub horizon: u64,
    pub target_mse: f64,
}

fn check_target(target_mse: f64, horizon: u64) -> Result<(), CalibrationError> {
    if !(target_mse.is_finite() && target_mse > 0.0) {
        return Err(CalibrationError::InvalidTarget(target_mse));
    }
    if horizon == 0 {
        return Err(CalibrationError::EmptyHorizon);
    }
    Ok(())
}

/// Noise variance summed over levels `0..=top`: `2 Σ b_ℓ²`.
fn level_variance(params: &MechanismParams, top: u32) -> f64 {
    (0..=top).map(|l| params.level_scale(l).variance()).sum()
}

/// Average noise variance of the level-budgeted mechanism over `1..=T`.
/// Step `t > B` carries one noise term per level up to `⌊log₂(t−B)⌋`; the
/// delayed steps carry none.
pub fn analytic_mse_alg3(params: &MechanismParams, horizon: u64) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let positions = horizon.saturating_sub(params.delay());
    let mut total = 0.0;
    let mut cumulative = 0.0;
    if positions > 0 {
        for level in 0..=floor_log2(positions) {
            cumulative += params.level_scale(level).variance();
            let first = 1u64 << level;
            let last = positions.min(first.saturating_mul(2) - 1);
            total += cumulative * (last - first + 1) as f64;
        }
    }
    total / horizon as f64
}

/// Average noise variance of the simple mechanism: one `Lap(1/ε)` from step 2.
pub fn analytic_mse_simple(epsilon: f64, horizon: u64) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    2.0 * (horizon - 1) as f64 / (epsilon * epsilon * horizon as f64)
}

/// `Σ_{s=1}^{n} popcount(s)`.
pub fn popcount_prefix_sum(n: u64) -> u64 {
    let m = n as u128 + 1;
    let mut total = 0u128;
    for bit in 0..64 {
        let half = 1u128 << bit;
        let period = half << 1;
        total += (m / period) * half + (m % period).saturating_sub(half);
    }
    total as u64
}

/// `(Σ_t popcount(s_t), steps after the first round)` for steps `1..=T`.
fn baseline_counts(window: u64, horizon: u64) -> (u64, u64) {
    let full = horizon / window;
    let rest = horizon % window;
    let popcounts = full * popcount_prefix_sum(window) + popcount_prefix_sum(rest);
    (popcounts, horizon - horizon.min(window))
}

/// Average noise variance of the baseline over `1..=T`: each step at
/// in-round position `s` carries `popcount(s)` nodes of variance `2k²/ε_cur²`,
/// and every step after the first round one past term of variance `2/ε_past²`.
pub fn analytic_mse_baseline(params: &BaselineParams, horizon: u64) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let (popcounts, later) = baseline_counts(params.window(), horizon);
    let tree = params.node_scale().variance() * popcounts as f64;
    let past = params.past_scale().variance() * later as f64;
    (tree + past) / horizon as f64
}

/// Picks `ε` so the level-budgeted mechanism hits `target_mse` over `T` steps.
pub fn calibrate_epsilon(
    target_mse: f64,
    horizon: u64,
    lambda: f64,
    delay: u64,
) -> Result<CalibrationResult<MechanismParams>, CalibrationError> {
    check_target(target_mse, horizon)?;
    let unit = MechanismParams::new(1.0, lambda, delay)?;
    let mse = analytic_mse_alg3(&unit, horizon);
    if mse == 0.0 {
        // Every release lies inside the delay: there is nothing to calibrate.
        return Err(CalibrationError::InsideDelay {
            step: horizon,
            delay,
        });
    }
    let params = unit.with_epsilon((mse / target_mse).sqrt())?;
    Ok(CalibrationResult {
        achieved_mse: analytic_mse_alg3(&params, horizon),
        params,
        horizon,
        target_mse,
    })
}

/// Picks `eps_cur` (with `eps_past = ratio·eps_cur`) so the baseline hits
/// `target_mse` over `T` steps.
pub fn calibrate_baseline(
    target_mse: f64,
    horizon: u64,
    window: u64,
    ratio: f64,
) -> Result<CalibrationResult<BaselineParams>, CalibrationError> {
    check_target(target_mse, horizon)?;
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(CalibrationError::InvalidRatio(ratio));
    }
    let unit = BaselineParams::with_ratio(window, 1.0, ratio)?;
    let eps_cur = (analytic_mse_baseline(&unit, horizon) / target_mse).sqrt();
    let params = BaselineParams::with_ratio(window, eps_cur, ratio)?;
    Ok(CalibrationResult {
        achieved_mse: analytic_mse_baseline(&params, horizon),
        params,
        horizon,
        target_mse,
    })
}

const RATIO_LO: f64 = 1e-8;
const RATIO_HI: f64 = 1e4;

/// Budget ratio `eps_past/eps_cur` minimising the total loss of an input
/// observed over the whole horizon, `eps_cur + eps_past·(N−1)` with
/// `N = ⌈T/W⌉` rounds, at fixed MSE. Golden-section search over `ln ρ`.
pub fn optimal_ratio(
    target_mse: f64,
    horizon: u64,
    window: u64,
) -> Result<(f64, CalibrationResult<BaselineParams>), CalibrationError> {
    check_target(target_mse, horizon)?;
    if window >= horizon {
        return Err(CalibrationError::SingleRound { window, horizon });
    }
    BaselineParams::new(window, 1.0, 1.0)?;
    let rounds = horizon.div_ceil(window);
    let (popcounts, later) = baseline_counts(window, horizon);
    let k = (64 - window.leading_zeros()) as f64;
    // MSE = (tree + past/ρ²)/eps_cur² with eps_past = ρ·eps_cur.
    let tree = 2.0 * k * k * popcounts as f64 / horizon as f64;
    let past = 2.0 * later as f64 / horizon as f64;
    let objective = |log_ratio: f64| {
        let rho = log_ratio.exp();
        let eps_cur = ((tree + past / (rho * rho)) / target_mse).sqrt();
        eps_cur * (1.0 + rho * (rounds - 1) as f64)
    };

    let (mut a, mut b) = (RATIO_LO.ln(), RATIO_HI.ln());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    // Stop once the bracket on ρ is within a relative 1e-9.
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let best = (a + b) / 2.0;
    let ratio = best.exp();
    let edge = 1e-3;
    if best - RATIO_LO.ln() < edge || RATIO_HI.ln() - best < edge {
        return Err(CalibrationError::NotBracketed {
            lo: RATIO_LO,
            hi: RATIO_HI,
            best: ratio,
        });
    }
    let result = calibrate_baseline(target_mse, horizon, window, ratio)?;
    Ok((ratio, result))
}

/// Error bound at step `t > B` holding with probability at least `1 − β`:
/// the delay plus the concentration threshold of the noise terms at `t`.
pub fn error_bound_alg3(
    t: u64,
    beta: f64,
    params: &MechanismParams,
) -> Result<f64, CalibrationError> {
    let delay = params.delay();
    if t <= delay {
        return Err(CalibrationError::InsideDelay { step: t, delay });
    }
    let scales: Vec<LaplaceScale> = (0..=floor_log2(t - delay))
        .map(|l| params.level_scale(l))
        .collect();
    Ok(delay as f64 + concentration_threshold(&scales, beta)?)
}

/// Noise variance of the release at step `t`.
pub fn step_variance_alg3(t: u64, params: &MechanismParams) -> f64 {
    match t.checked_sub(params.delay()) {
        Some(p) if p > 0 => level_variance(params, floor_log2(p)),
        _ => 0.0,
    }
}

/// Summary of repeated seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    /// Mean over trials of the per-trial average squared error.
    pub mse: f64,
    /// Standard error of `mse`.
    pub mse_std_error: f64,
    /// Per-trial maximum absolute error, in trial order.
    pub max_errors: Vec<f64>,
}

impl SimulationSummary {
    /// Empirical `q`-quantile of the per-trial maximum error (nearest rank).
    pub fn max_error_quantile(&self, q: f64) -> f64 {
        let mut sorted = self.max_errors.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[rank - 1]
    }
}

/// Runs the level-budgeted mechanism on `stream` for `trials` independent
/// seeds (`seed, seed+1, …`) and measures the error against the true prefix.
/// Inside the delay the error is the full prefix, so it counts towards the MSE.
pub fn simulate_alg3(
    params: &MechanismParams,
    stream: &[f64],
    trials: u64,
    seed: u64,
) -> Result<SimulationSummary, CalibrationError> {
    if stream.is_empty() {
        return Err(CalibrationError::EmptyHorizon);
    }
    let mut per_trial = Vec::with_capacity(trials as usize);
    let mut max_errors = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut m = ExpirationMechanism::new(*params, KeyedNoise::new(seed.wrapping_add(trial)));
        let mut truth = 0.0;
        let mut squared = 0.0;
        let mut worst = 0.0f64;
        for &x in stream {
            truth += x;
            let err = (m.step(x)? - truth).abs();
            squared += err * err;
            worst = worst.max(err);
        }
        per_trial.push(squared / stream.len() as f64);
        max_errors.push(worst);
    }
    let n = per_trial.len() as f64;
    let mse = per_trial.iter().sum::<f64>() / n;
    let var = if per_trial.len() > 1 {
        per_trial.iter().map(|v| (v - mse).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SimulationSummary {
        mse,
        mse_std_error: (var / n).sqrt(),
        max_errors,
    })
}
