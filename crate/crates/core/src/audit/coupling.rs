//! Executable form of the shift coupling.
//!
//! Changing the input at position `j` by `Δ = x_j − x'_j` changes every
//! delayed prefix sum from `j` on by `−Δ`. Adding `Δ` to the noise of each
//! interval in `decompose(j, τ')` puts it back: every position in `[j, τ']`
//! lies in exactly one of those intervals, and no earlier position lies in
//! any of them. Shifting a `Lap(b)` value by `Δ` changes its density by at
//! most `e^{|Δ|/b}`, so the coupling costs `Σ |Δ|/b_I`.

use crate::dyadic::{decompose, Decomposition};
use crate::fixed::Fixed;
use crate::mechanisms::{ContinualCounter, ExpirationMechanism, MechanismParams};
use crate::noise::{NoiseLedger, NoiseSlot, NoiseSource};

use super::AuditError;

/// Outcome of shifting a ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    /// `Σ_I |y| / b_I`.
    pub cost: f64,
    pub shifted_intervals: Decomposition,
    pub y: f64,
}

/// Outcome of a coupled pair of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub outputs_identical: bool,
    pub cost: f64,
    pub shifted_intervals: Decomposition,
    /// `x'_j − x_j`.
    pub y: f64,
}

fn shift_by(
    ledger: &NoiseLedger,
    j: u64,
    tau_prime: u64,
    delta: Fixed,
    params: &MechanismParams,
) -> Result<(NoiseLedger, Decomposition, f64), AuditError> {
    let intervals = decompose(j, tau_prime)?;
    let mut shifted = ledger.clone();
    let mut weight = 0.0;
    for &interval in &intervals {
        let slot = NoiseSlot::Interval(interval);
        let scale = params.level_scale(interval.level());
        let z = shifted.noise(slot, scale);
        shifted.insert(slot, z + delta);
        weight += params.level_weight(interval.level());
    }
    let cost = params.epsilon() * weight * delta.abs().to_f64();
    Ok((shifted, intervals, cost))
}

/// Adds `y` to the noise of every interval in `decompose(j, tau_prime)`,
/// leaving all other slots untouched. Slots not yet in the ledger are first
/// filled with their keyed value.
pub fn coupling_shift(
    ledger: &NoiseLedger,
    j: u64,
    tau_prime: u64,
    y: f64,
    params: &MechanismParams,
) -> Result<(NoiseLedger, ShiftReport), AuditError> {
    if y.is_nan() || y.abs() > 1.0 {
        return Err(AuditError::Domain(format!(
            "shift must lie in [-1, 1], got {y}"
        )));
    }
    if j == 0 || j > tau_prime {
        return Err(AuditError::Domain(format!(
            "need 1 <= j <= tau', got j = {j}, tau' = {tau_prime}"
        )));
    }
    let delta = Fixed::from_f64(y).expect("|y| <= 1");
    let (shifted, intervals, cost) = shift_by(ledger, j, tau_prime, delta, params)?;
    Ok((
        shifted,
        ShiftReport {
            cost,
            shifted_intervals: intervals,
            y,
        },
    ))
}

fn run(
    stream: &[f64],
    params: &MechanismParams,
    ledger: &mut NoiseLedger,
) -> Result<Vec<f64>, AuditError> {
    let mut m = ExpirationMechanism::new(*params, ledger);
    stream
        .iter()
        .map(|&x| m.step(x).map_err(AuditError::from))
        .collect()
}

/// Runs the level-budgeted mechanism on `x` and, after shifting the noise of
/// `decompose(j, τ − B)`, on `x_prime`, and compares the first `tau`
/// releases bit for bit.
pub fn verify_coupling(
    x: &[f64],
    x_prime: &[f64],
    j: u64,
    tau: u64,
    params: &MechanismParams,
    seed: u64,
) -> Result<CouplingReport, AuditError> {
    if x.len() != x_prime.len() {
        return Err(AuditError::NotNeighboring(format!(
            "lengths differ: {} vs {}",
            x.len(),
            x_prime.len()
        )));
    }
    if j == 0 || j > tau || tau > x.len() as u64 {
        return Err(AuditError::Domain(format!(
            "need 1 <= j <= tau <= {}, got j = {j}, tau = {tau}",
            x.len()
        )));
    }
    let idx = (j - 1) as usize;
    if let Some(i) = (0..x.len()).find(|&i| i != idx && x[i].to_bits() != x_prime[i].to_bits()) {
        return Err(AuditError::NotNeighboring(format!(
            "streams also differ at position {}",
            i + 1
        )));
    }
    let y = x_prime[idx] - x[idx];
    if y.is_nan() || y.abs() > 1.0 {
        return Err(AuditError::NotNeighboring(format!(
            "|x'_j - x_j| must be at most 1, got {y}"
        )));
    }
    let tau = tau as usize;
    let mut ledger = NoiseLedger::new(seed);
    let original = run(&x[..tau], params, &mut ledger)?;

    let delay = params.delay();
    let (mut shifted, intervals, cost) = match (tau as u64).checked_sub(delay) {
        Some(end) if end >= j => {
            let to = |v: f64| {
                Fixed::from_f64(v)
                    .ok_or_else(|| AuditError::Domain(format!("input {v} out of range")))
            };
            let delta = to(x[idx])? - to(x_prime[idx])?;
            shift_by(&ledger, j, end, delta, params)?
        }
        _ => (ledger, Decomposition::default(), 0.0),
    };
    let coupled = run(&x_prime[..tau], params, &mut shifted)?;
    let outputs_identical = original
        .iter()
        .zip(&coupled)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    Ok(CouplingReport {
        outputs_identical,
        cost,
        shifted_intervals: intervals,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{empirical_loss_alg3, exact_g_sum};

    fn params(eps: f64, lambda: f64, delay: u64) -> MechanismParams {
        MechanismParams::new(eps, lambda, delay).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let p = params(1.0, 2.0, 0);
        let mut ledger = NoiseLedger::new(3);
        let mut m = ExpirationMechanism::new(p, &mut ledger);
        for _ in 0..20 {
            m.step(0.5).unwrap();
        }
        let (shifted, report) = coupling_shift(&ledger, 3, 17, 0.0, &p).unwrap();
        assert_eq!(report.cost, 0.0);
        // Slots touched by the decomposition were already present.
        assert_eq!(shifted, ledger);
    }

    #[test]
    fn unit_shift_at_lambda_one_costs_interval_count() {
        let p = params(1.0, 1.0, 0);
        let ledger = NoiseLedger::new(0);
        let (_, report) = coupling_shift(&ledger, 5, 8, -1.0, &p).unwrap();
        assert_eq!(report.shifted_intervals.len(), 3);
        assert_eq!(report.cost, 3.0);
    }

    #[test]
    fn shift_round_trips_exactly() {
        let p = params(0.3, 3.0, 0);
        let ledger = NoiseLedger::new(11);
        let (a, _) = coupling_shift(&ledger, 6, 100, 0.37, &p).unwrap();
        let (b, _) = coupling_shift(&a, 6, 100, -0.37, &p).unwrap();
        let (filled, _) = coupling_shift(&ledger, 6, 100, 0.0, &p).unwrap();
        assert_ne!(a, filled);
        assert_eq!(b, filled);
    }

    #[test]
    fn shift_rejects_large_y_and_bad_range() {
        let p = params(1.0, 1.0, 0);
        let ledger = NoiseLedger::new(0);
        assert!(matches!(
            coupling_shift(&ledger, 1, 2, 1.5, &p),
            Err(AuditError::Domain(_))
        ));
        assert!(coupling_shift(&ledger, 3, 2, 0.5, &p).is_err());
        assert!(coupling_shift(&ledger, 1, 2, f64::NAN, &p).is_err());
    }

    #[test]
    fn coupled_runs_agree() {
        let p = params(0.5, 2.0, 4);
        let x: Vec<f64> = (0..64).map(|i| ((i * 7) % 5) as f64 / 4.0).collect();
        let mut xp = x.clone();
        xp[12] = 1.0 - x[12];
        let r = verify_coupling(&x, &xp, 13, 64, &p, 5).unwrap();
        assert!(r.outputs_identical);
        assert!(r.cost <= exact_g_sum(64 - 13, &p) + 1e-12);
        assert!(r.cost <= empirical_loss_alg3(64 - 13, &p, u64::MAX) + 1e-12);
        assert_eq!(r.shifted_intervals, decompose(13, 60).unwrap());
    }

    #[test]
    fn delay_regime_needs_no_shift() {
        let p = params(0.5, 1.0, 4);
        let x = vec![0.0; 10];
        let mut xp = x.clone();
        xp[6] = 1.0;
        let r = verify_coupling(&x, &xp, 7, 10, &p, 1).unwrap();
        assert!(r.outputs_identical);
        assert_eq!(r.cost, 0.0);
        assert!(r.shifted_intervals.is_empty());
    }

    #[test]
    fn unshifted_rerun_differs() {
        let p = params(0.5, 1.0, 0);
        let x = vec![0.0; 8];
        let mut xp = x.clone();
        xp[2] = 1.0;
        // Running x' on the untouched ledger changes every release from 3 on.
        let mut ledger = NoiseLedger::new(1);
        let a = run(&x, &p, &mut ledger).unwrap();
        let b = run(&xp, &p, &mut ledger).unwrap();
        assert_eq!(a[..2], b[..2]);
        assert!(a[2..].iter().zip(&b[2..]).all(|(u, v)| u != v));
    }

    #[test]
    fn rejects_non_neighbouring_streams() {
        let p = params(1.0, 1.0, 0);
        let x = vec![0.0; 5];
        let mut xp = x.clone();
        xp[0] = 1.0;
        xp[3] = 1.0;
        assert!(matches!(
            verify_coupling(&x, &xp, 1, 5, &p, 0),
            Err(AuditError::NotNeighboring(_))
        ));
        assert!(matches!(
            verify_coupling(&x, &x[..4], 1, 4, &p, 0),
            Err(AuditError::NotNeighboring(_))
        ));
        assert!(verify_coupling(&x, &x, 3, 2, &p, 0).is_err());
    }
}
