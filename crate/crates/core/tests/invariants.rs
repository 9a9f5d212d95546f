use std::collections::BTreeMap;

use mismc::estimator::compensated_sum;
use mismc::ratefit::least_squares;
use mismc::rng::stream;
use mismc::smc::{resample_multinomial, resample_systematic};
use mismc::{allocate_samples, IndexSet, MultiIndex};
use proptest::prelude::*;
use rand::RngCore;

fn positive_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((1e-6f64..10.0, 1e-3f64..1e3), 1..8)
}

proptest! {
    #[test]
    fn allocation_meets_variance_budget(vc in positive_pairs(), eps in 1e-3f64..1.0) {
        let keys: Vec<MultiIndex> = (0..vc.len() as u32).map(|l| MultiIndex::new(vec![l])).collect();
        let v: BTreeMap<_, _> = keys.iter().cloned().zip(vc.iter().map(|p| p.0)).collect();
        let c: BTreeMap<_, _> = keys.iter().cloned().zip(vc.iter().map(|p| p.1)).collect();
        let plan = allocate_samples(&v, &c, eps, None).unwrap();
        let variance: f64 = keys.iter().map(|a| v[a] / plan.samples[a] as f64).sum();
        prop_assert!(variance <= eps * eps * (1.0 + 1e-12));
        for a in &keys {
            prop_assert!(plan.samples[a] >= 1);
            prop_assert!(plan.samples[a] as f64 >= plan.raw[a]);
        }
        let tighter = allocate_samples(&v, &c, eps / 2.0, None).unwrap();
        for a in &keys {
            prop_assert!(tighter.samples[a] >= plan.samples[a]);
        }
    }

    #[test]
    fn allocation_cap_bounds_every_count(vc in positive_pairs(), cap in 1usize..50) {
        let keys: Vec<MultiIndex> = (0..vc.len() as u32).map(|l| MultiIndex::new(vec![l])).collect();
        let v: BTreeMap<_, _> = keys.iter().cloned().zip(vc.iter().map(|p| p.0)).collect();
        let c: BTreeMap<_, _> = keys.iter().cloned().zip(vc.iter().map(|p| p.1)).collect();
        let plan = allocate_samples(&v, &c, 1e-3, Some(cap)).unwrap();
        prop_assert!(plan.samples.values().all(|&n| (1..=cap).contains(&n)));
    }

    #[test]
    fn resampled_ancestors_are_valid(w in proptest::collection::vec(0.0f64..1.0, 1..20), n in 1usize..200, seed in any::<u64>()) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let mut rng = stream(seed, "resample");
        for idx in [resample_multinomial(&w, n, &mut rng).unwrap(), resample_systematic(&w, n, &mut rng).unwrap()] {
            prop_assert_eq!(idx.len(), n);
            prop_assert!(idx.iter().all(|&i| i < w.len() && w[i] > 0.0));
        }
    }

    #[test]
    fn systematic_counts_stay_within_one_of_expectation(w in proptest::collection::vec(0.01f64..1.0, 1..10), n in 1usize..300, seed in any::<u64>()) {
        let total: f64 = w.iter().sum();
        let idx = resample_systematic(&w, n, &mut stream(seed, "systematic")).unwrap();
        for (i, wi) in w.iter().enumerate() {
            let count = idx.iter().filter(|&&j| j == i).count() as f64;
            prop_assert!((count - n as f64 * wi / total).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn tensor_product_size_and_closure(max in proptest::collection::vec(0u32..5, 1..4)) {
        let set = IndexSet::tensor_product(&max);
        let size: usize = max.iter().map(|&m| m as usize + 1).product();
        prop_assert_eq!(set.len(), size);
        prop_assert!(set.is_downward_closed());
        prop_assert_eq!(set.max_index(), MultiIndex::new(max));
    }

    #[test]
    fn least_squares_recovers_exact_lines(slope in -5.0f64..5.0, intercept in -10.0f64..10.0, n in 2usize..12) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, intercept + slope * i as f64)).collect();
        let fit = least_squares(&pts);
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - intercept).abs() < 1e-8);
    }

    #[test]
    fn compensated_sum_ignores_order(v in proptest::collection::vec(-1e6f64..1e6, 0..50)) {
        let forward = compensated_sum(v.iter().copied());
        let backward = compensated_sum(v.iter().rev().copied());
        let scale = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((forward - backward).abs() <= 1e-14 * scale);
    }

    #[test]
    fn streams_depend_only_on_seed_and_key(seed in any::<u64>(), key in "[a-z/0-9]{1,12}") {
        let a = stream(seed, &key).next_u64();
        let b = stream(seed, &key).next_u64();
        let c = stream(seed, &format!("{key}x")).next_u64();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, c);
    }
}
