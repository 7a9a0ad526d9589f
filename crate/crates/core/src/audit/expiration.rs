//! Privacy-loss accounting for the level-budgeted mechanism.
//!
//! An input at position `j`, observed up to time `τ = j + d`, is covered by the
//! shift coupling on `decompose(j, τ − B)`. Each level-`ℓ` interval of that
//! decomposition costs `ε·(1+ℓ)^(λ−1)`, so the loss at elapsed time `d` is
//! the worst such cost over positions `j`.

use crate::dyadic::{decompose, floor_log2, LevelCounts};
use crate::mechanisms::MechanismParams;

use super::curve::PrivacyLossCurve;
use super::AuditError;

/// Length `d − B + 1` of the shifted range, or `None` inside the delay.
fn shifted_len(d: u64, params: &MechanismParams) -> Option<u64> {
    d.checked_sub(params.delay()).map(|n| n + 1)
}

/// `ε · Σ_ℓ count(ℓ)·(1+ℓ)^(λ−1)`.
pub fn level_cost(counts: &LevelCounts, params: &MechanismParams) -> f64 {
    params.epsilon() * counts.weighted_sum(|l| params.level_weight(l))
}

/// Tight per-`d` bound `ε · 2 Σ_{ℓ=0}^{⌊log₂(d−B+1)⌋} (1+ℓ)^(λ−1)`; 0 for `d < B`.
pub fn exact_g_sum(d: u64, params: &MechanismParams) -> f64 {
    let Some(n) = shifted_len(d, params) else {
        return 0.0;
    };
    let mut counts = LevelCounts::default();
    for level in 0..=floor_log2(n) {
        counts.add(level, 2);
    }
    level_cost(&counts, params)
}

/// Closed-form expiration bound obtained by replacing the level sum with an
/// integral: `ε · 2(1 + ((log₂(d−B+1) + 1)^λ − 1)/λ)`.
///
/// At `λ = 0` this uses the limit of the same expression,
/// `ε · 2(1 + ln(log₂(d−B+1) + 1))`, and requires `d − B + 1 ≥ 2`.
/// For `λ > 1` the integral relaxation can fall below [`exact_g_sum`]; see
/// [`published_theoretical_g`].
pub fn theoretical_g(d: u64, params: &MechanismParams) -> Result<f64, AuditError> {
    let Some(n) = shifted_len(d, params) else {
        return Ok(0.0);
    };
    let lambda = params.lambda();
    let x = (n as f64).log2() + 1.0;
    let inner = if lambda == 0.0 {
        if n < 2 {
            return Err(AuditError::Domain(format!(
                "lambda = 0 needs d - B + 1 >= 2, got {n}"
            )));
        }
        x.ln()
    } else {
        (x.powf(lambda) - 1.0) / lambda
    };
    Ok(params.epsilon() * 2.0 * (1.0 + inner))
}

/// The theoretical curve as reported: the larger of the closed form and the
/// exact level sum, so it always dominates the exact bound.
pub fn published_theoretical_g(d: u64, params: &MechanismParams) -> f64 {
    let exact = exact_g_sum(d, params);
    match theoretical_g(d, params) {
        Ok(closed) => closed.max(exact),
        Err(_) => exact,
    }
}

/// Cost-maximising start position and the level counts of its decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstPosition {
    pub j: u64,
    pub counts: LevelCounts,
    pub loss: f64,
}

/// Position search bound `J = 4·2^⌊log₂(d−B+1)⌋`. The decomposition of a
/// length-`n` range uses levels up to `⌊log₂ n⌋` only, so its cost is
/// periodic in the start position with period `2^⌊log₂ n⌋`.
pub fn position_search_bound(d: u64, params: &MechanismParams) -> Option<u64> {
    shifted_len(d, params).map(|n| 4u64 << floor_log2(n))
}

/// Scans `j ∈ [1, min(t_max, J)]`, decomposing `[j, j + d − B]` each time.
pub fn bounded_search_alg3(d: u64, params: &MechanismParams, t_max: u64) -> Option<WorstPosition> {
    let n = shifted_len(d, params)?;
    let limit = t_max.min(position_search_bound(d, params)?);
    scan_positions(n, params, limit)
}

fn scan_positions(n: u64, params: &MechanismParams, limit: u64) -> Option<WorstPosition> {
    let mut best: Option<WorstPosition> = None;
    for j in 1..=limit {
        let counts = decompose(j, j + n - 1)
            .expect("j >= 1 and n >= 1")
            .level_counts();
        let loss = level_cost(&counts, params);
        if best.is_none_or(|b| loss > b.loss) {
            best = Some(WorstPosition { j, counts, loss });
        }
    }
    best
}

/// Worst start position over all `j ≥ 1`.
///
/// Splitting `[j, j+n−1]` at its most aligned point `M` leaves a left part of
/// length `A = M − j` and a right part of length `n − A`, each decomposed by
/// its binary digits. Every `A ∈ [0, n]` is realised by `j = 2^(L+1) − A`
/// with `L = ⌊log₂ n⌋`, so the worst case maximises `W(A) + W(n − A)`, where
/// `W` sums level weights over set bits. That is a digit DP over the bits of
/// `n` with a carry.
fn worst_split(n: u64, params: &MechanismParams) -> WorstPosition {
    let top = floor_log2(n);
    let bits = top + 1;
    // best[carry] = (value, low bits of A chosen so far)
    let mut best: [Option<(f64, u64)>; 2] = [Some((0.0, 0)), None];
    for bit in 0..bits {
        let n_bit = (n >> bit) & 1;
        let w = params.level_weight(bit);
        let mut next: [Option<(f64, u64)>; 2] = [None, None];
        for (carry_in, state) in best.iter().enumerate() {
            let Some((value, a_bits)) = *state else {
                continue;
            };
            for a in 0..2u64 {
                for c in 0..2u64 {
                    let s = a + c + carry_in as u64;
                    if s & 1 != n_bit {
                        continue;
                    }
                    let carry_out = (s >> 1) as usize;
                    let v = value + w * (a + c) as f64;
                    if next[carry_out].is_none_or(|(cur, _)| v > cur) {
                        next[carry_out] = Some((v, a_bits | (a << bit)));
                    }
                }
            }
        }
        best = next;
    }
    let (_, a_len) = best[0].expect("A = 0, C = n is always feasible");
    let c_len = n - a_len;
    let mut counts = LevelCounts::default();
    for bit in 0..bits {
        counts.add(bit, (((a_len >> bit) & 1) + ((c_len >> bit) & 1)) as u8);
    }
    let j = (2u64 << top) - a_len;
    debug_assert_eq!(
        decompose(j, j + n - 1).unwrap().level_counts(),
        counts,
        "split model disagrees with decomposition at j = {j}, n = {n}"
    );
    WorstPosition {
        j,
        counts,
        loss: level_cost(&counts, params),
    }
}

/// Worst start position among `j ∈ [1, t_max]`.
///
/// With `x = j − 1` and `y = x + n`, let `h` be the highest bit where `x` and
/// `y` differ. The left part of the cover has one level-`ℓ` block for each
/// zero bit `ℓ < h` of `x`, and the right part one block per set bit of
/// `(y mod 2^h) + 1`. For each `h`, a digit DP from the low bit up tracks the
/// carry of `x + n`, the carry of that `+ 1`, and whether `x ≤ t_max − 1` so far.
fn worst_bounded(n: u64, params: &MechanismParams, t_max: u64) -> Option<WorstPosition> {
    let x_max = t_max.checked_sub(1)?;
    let y_max = (x_max as u128 + n as u128).min(u64::MAX as u128);
    let h_max = 127 - y_max.leading_zeros();
    let bit_of = |v: u64, b: u32| if b < 64 { (v >> b) & 1 } else { 0 };
    // State index: carry1 | carry2 << 1 | above << 2, where `above` means the
    // low bits of x exceed those of x_max.
    let mut best: Option<(f64, u64)> = None;
    for h in floor_log2(n)..=h_max {
        let mut states: [Option<(f64, u64)>; 8] = [None; 8];
        states[0b010] = Some((0.0, 0));
        for b in 0..=h_max {
            let n_b = bit_of(n, b);
            let lim_b = bit_of(x_max, b);
            let w = params.level_weight(b);
            let mut next: [Option<(f64, u64)>; 8] = [None; 8];
            for (idx, state) in states.iter().enumerate() {
                let Some((value, x)) = *state else {
                    continue;
                };
                let (c1, c2, above) = (idx as u64 & 1, (idx as u64 >> 1) & 1, idx >> 2);
                for x_b in 0..2u64 {
                    if x_b == 1 && b >= 64 {
                        continue;
                    }
                    let s = x_b + n_b + c1;
                    let y_b = s & 1;
                    if (b > h && x_b != y_b) || (b == h && (x_b, y_b) != (0, 1)) {
                        continue;
                    }
                    let (gain, c2_out) = if b < h {
                        let r = y_b + c2;
                        ((1 - x_b + (r & 1)) as f64 * w, r >> 1)
                    } else if b == h {
                        (c2 as f64 * w, 0)
                    } else {
                        (0.0, 0)
                    };
                    let above_out = match x_b.cmp(&lim_b) {
                        std::cmp::Ordering::Less => 0,
                        std::cmp::Ordering::Greater => 1,
                        std::cmp::Ordering::Equal => above,
                    };
                    let to = (s >> 1) as usize | (c2_out as usize) << 1 | above_out << 2;
                    let v = value + gain;
                    if next[to].is_none_or(|(cur, _)| v > cur) {
                        next[to] = Some((v, x | x_b << b.min(63)));
                    }
                }
            }
            states = next;
        }
        for candidate in [states[0b000], states[0b010]].into_iter().flatten() {
            if best.is_none_or(|(cur, _)| candidate.0 > cur) {
                best = Some(candidate);
            }
        }
    }
    let (_, x) = best?;
    let j = x + 1;
    let counts = decompose(j, x + n).ok()?.level_counts();
    Some(WorstPosition {
        j,
        counts,
        loss: level_cost(&counts, params),
    })
}

/// Worst start position for elapsed time `d` among `j ∈ [1, t_max]`, or
/// `None` when `d < B` (the outputs do not depend on the input yet).
pub fn worst_position_alg3(d: u64, params: &MechanismParams, t_max: u64) -> Option<WorstPosition> {
    let n = shifted_len(d, params)?;
    if t_max == 0 {
        return None;
    }
    if t_max as u128 >= 2u128 << floor_log2(n) {
        let free = worst_split(n, params);
        if free.j <= t_max {
            return Some(free);
        }
    }
    worst_bounded(n, params, t_max)
}

/// Empirical worst-case loss at elapsed time `d` for inputs at positions up
/// to `t_max`: the largest decomposition cost `ε·Σ (1+ℓ)^(λ−1)` over start
/// positions. 0 for `d < B`.
pub fn empirical_loss_alg3(d: u64, params: &MechanismParams, t_max: u64) -> f64 {
    worst_position_alg3(d, params, t_max).map_or(0.0, |w| w.loss)
}

/// One audit row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    pub d: u64,
    pub loss_empirical: f64,
    pub loss_envelope: f64,
    /// Absent for mechanisms without a closed-form bound.
    pub loss_theoretical: Option<f64>,
}

/// Empirical curve for `d = 0..=d_max`.
pub fn curve_alg3(params: &MechanismParams, d_max: u64, t_max: u64) -> PrivacyLossCurve {
    PrivacyLossCurve::from_losses((0..=d_max).map(|d| (d, empirical_loss_alg3(d, params, t_max))))
}

/// Audit rows with the empirical curve, its envelope and the published
/// theoretical bound.
pub fn audit_alg3(params: &MechanismParams, d_max: u64, t_max: u64) -> Vec<AuditRow> {
    curve_alg3(params, d_max, t_max)
        .points()
        .iter()
        .map(|p| AuditRow {
            d: p.d,
            loss_empirical: p.loss,
            loss_envelope: p.envelope,
            loss_theoretical: Some(published_theoretical_g(p.d, params)),
        })
        .collect()
}
