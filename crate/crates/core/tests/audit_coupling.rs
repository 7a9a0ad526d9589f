use gradual_expiry::audit::{
    audit_alg3, audit_baseline, coupling_shift, empirical_loss_alg3, empirical_loss_baseline,
    exact_g_sum, published_theoretical_g, theoretical_g, verify_coupling, AuditError,
};
use gradual_expiry::dyadic::decompose;
use gradual_expiry::mechanisms::{BaselineParams, MechanismParams};
use gradual_expiry::noise::NoiseLedger;
use proptest::prelude::*;

fn neighbours() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, u64, u64)> {
    (1usize..=200).prop_flat_map(|len| {
        (
            prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], len),
            1..=len as u64,
            0.0f64..=1.0,
            0..len as u64,
        )
            .prop_map(|(x, j, v, extra)| {
                let tau = (j + extra).min(x.len() as u64);
                let mut xp = x.clone();
                xp[(j - 1) as usize] = v;
                (x, xp, j, tau)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn coupled_outputs_are_identical(
        (x, xp, j, tau) in neighbours(),
        lambda in prop_oneof![Just(0.0), Just(1.0), Just(1.5), Just(2.0), Just(3.0)],
        delay in prop_oneof![Just(0u64), Just(4), Just(16)],
        seed: u64,
    ) {
        let params = MechanismParams::new(0.3, lambda, delay).unwrap();
        let r = verify_coupling(&x, &xp, j, tau, &params, seed).unwrap();
        prop_assert!(r.outputs_identical);
        prop_assert!(r.cost <= exact_g_sum(tau - j, &params) * (1.0 + 1e-12));
        prop_assert!(r.cost <= empirical_loss_alg3(tau - j, &params, u64::MAX) * (1.0 + 1e-12));
        match (tau).checked_sub(delay) {
            Some(end) if end >= j => prop_assert_eq!(r.shifted_intervals, decompose(j, end).unwrap()),
            _ => prop_assert_eq!(r.cost, 0.0),
        }
    }

    #[test]
    fn shift_is_a_bijection(j in 1u64..500, len in 1u64..500, y in -1.0f64..=1.0, seed: u64) {
        let params = MechanismParams::new(0.7, 2.0, 0).unwrap();
        let ledger = NoiseLedger::new(seed);
        let (filled, _) = coupling_shift(&ledger, j, j + len - 1, 0.0, &params).unwrap();
        let (there, report) = coupling_shift(&ledger, j, j + len - 1, y, &params).unwrap();
        let (back, _) = coupling_shift(&there, j, j + len - 1, -y, &params).unwrap();
        prop_assert_eq!(back, filled);
        let expected: f64 = report
            .shifted_intervals
            .iter()
            .map(|iv| y.abs() / params.level_scale(iv.level()).value())
            .sum();
        prop_assert!((report.cost - expected).abs() <= 1e-9 * expected.max(1e-300));
    }
}

#[test]
fn bound_ordering_holds_for_other_lambdas() {
    for lambda in [0.0, 0.5, 1.5] {
        for delay in [0u64, 7] {
            let params = MechanismParams::new(0.2, lambda, delay).unwrap();
            for d in 0..=1024u64 {
                let emp = empirical_loss_alg3(d, &params, u64::MAX);
                let exact = exact_g_sum(d, &params);
                assert!(emp <= exact * (1.0 + 1e-12), "λ {lambda} B {delay} d {d}");
                assert!(exact <= published_theoretical_g(d, &params));
            }
        }
    }
}

#[test]
fn closed_form_dominates_exact_sum_for_small_lambda() {
    // For λ ≤ 1 the weights are nondecreasing, so the integral bound is above the sum.
    for lambda in [0.25, 0.5, 1.0] {
        let params = MechanismParams::new(1.0, lambda, 0).unwrap();
        for d in 0..5000u64 {
            let closed = theoretical_g(d, &params).unwrap();
            assert!(closed >= exact_g_sum(d, &params) - 1e-9, "λ {lambda} d {d}");
        }
    }
}

#[test]
fn audit_tables_are_monotone_in_envelope() {
    let rows = audit_alg3(&MechanismParams::new(0.05542, 2.0, 0).unwrap(), 999, 1000);
    assert_eq!(rows.len(), 1000);
    for pair in rows.windows(2) {
        assert!(pair[1].loss_envelope >= pair[0].loss_envelope);
        assert!(pair[1].loss_envelope >= pair[1].loss_empirical);
    }
    assert!(rows
        .iter()
        .all(|r| r.loss_empirical <= r.loss_theoretical.unwrap()));

    let base = audit_baseline(
        &BaselineParams::new(127, 0.7197, 0.07197).unwrap(),
        999,
        1000,
    );
    assert!(base.iter().all(|r| r.loss_theoretical.is_none()));
    assert_eq!(
        base[0].loss_empirical,
        empirical_loss_baseline(0, &BaselineParams::new(127, 0.7197, 0.07197).unwrap(), 1000)
    );
}

#[test]
fn verify_coupling_reports_domain_errors() {
    let params = MechanismParams::new(1.0, 1.0, 0).unwrap();
    let x = vec![0.5; 4];
    assert!(matches!(
        verify_coupling(&x, &x, 0, 2, &params, 0),
        Err(AuditError::Domain(_))
    ));
    assert!(matches!(
        verify_coupling(&x, &x, 1, 5, &params, 0),
        Err(AuditError::Domain(_))
    ));
    let bad = vec![0.5, 2.0, 0.5, 0.5];
    assert!(matches!(
        verify_coupling(&bad, &bad, 1, 4, &params, 0),
        Err(AuditError::Mechanism(_))
    ));
}
