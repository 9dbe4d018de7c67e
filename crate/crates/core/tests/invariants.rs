//! Trace-level invariants over random tiny instances and every policy.

use invbal_core::generators::{gen_tiny, TinyParams};
use invbal_core::{run, Instance, PolicyKind, SimTrace};
use proptest::prelude::*;

fn policies(gamma: u64) -> Vec<PolicyKind> {
    PolicyKind::standard_set(gamma)
}

fn check(inst: &Instance, trace: &SimTrace) -> Result<(), TestCaseError> {
    let total: f64 = trace.allocations.iter().map(|a| a.price).sum();
    prop_assert!((total - trace.total_revenue).abs() < 1e-9);
    for a in &trace.allocations {
        let period = &trace.periods[a.t - 1];
        prop_assert!(period.offered.contains(&a.product));
        prop_assert_eq!(period.choice, Some(a.product));
        prop_assert!((0.0..=1.0).contains(&a.level));
        prop_assert!(a.level > 0.0, "sale from an empty book at t={}", a.t);
    }
    for p in &trace.periods {
        prop_assert!(p.offered.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(p.choice.is_none_or(|i| p.offered.contains(&i)));
    }
    // Units out at any period never exceed what has ever been on hand.
    for (i, prod) in inst.products.iter().enumerate() {
        let Some(c) = prod.initial_inventory.finite() else {
            continue;
        };
        let mut supply = c as i64;
        for (t, p) in trace.periods.iter().enumerate().map(|(k, p)| (k + 1, p)) {
            supply += p.shocks.iter().filter(|s| s.0 == i).map(|s| s.1).sum::<i64>();
            let out = trace
                .allocations
                .iter()
                .filter(|a| a.product == i && a.t <= t && a.returns_at.is_none_or(|r| r > t))
                .count() as i64;
            prop_assert!(out <= supply, "product {} period {}: {} out of {}", i, t, out, supply);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn traces_are_consistent(
        seed in any::<u64>(),
        gamma in 1u64..=3,
        mnl in any::<bool>(),
        shocks in 0u64..=10,
    ) {
        let params = TinyParams {
            mnl,
            max_shock_units: shocks,
            inventory: [gamma, 5],
            ..TinyParams::default()
        };
        let inst = gen_tiny(&params, seed);
        for kind in policies(gamma) {
            let trace = run(&inst, &kind, seed).unwrap();
            check(&inst, &trace)?;
            prop_assert_eq!(&trace, &run(&inst, &kind, seed).unwrap());
        }
    }

    #[test]
    fn instance_json_round_trips(seed in any::<u64>(), mnl in any::<bool>()) {
        let inst = gen_tiny(&TinyParams { mnl, ..TinyParams::default() }, seed);
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(inst, back);
    }
}
