//! Estimator assembly: telescoping, allocation, limiting cases and scalar genericity.

mod common;

use std::collections::BTreeMap;

use common::{mean_se, toy_likelihood, trapezoid_prior};
use mismc::models::{Elliptic2D, Toy1D};
use mismc::quadrature::prior_integrals;
use mismc::{
    allocate_samples, mismc_ratio_estimate, mismc_sn_estimate, mixed_difference, single_level_smc_estimate,
    AllocationPlan, IndexSet, Model, MultiIndex, SmcConfig,
};

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

/// Ratio of telescoped quadrature integrals over a tensor-product set.
fn telescoped_ratio<M: Model<f64>>(model: &M, top: &[u32], nodes: usize) -> (f64, f64) {
    let set = IndexSet::tensor_product(top);
    let mut evidence = BTreeMap::new();
    let mut qoi = BTreeMap::new();
    for a in set.iter() {
        let q = prior_integrals(model, a, nodes).unwrap();
        evidence.insert(a.clone(), q.evidence());
        qoi.insert(a.clone(), q.unnormalized_qoi());
    }
    let num: f64 = set.iter().map(|a| mixed_difference(&qoi, a).unwrap()).sum();
    let den: f64 = set.iter().map(|a| mixed_difference(&evidence, a).unwrap()).sum();
    let exact = prior_integrals(model, &mi(top), nodes).unwrap().posterior_mean();
    (num / den, exact)
}

#[test]
fn exact_increments_telescope_to_top_corner_posterior_mean() {
    let toy = Toy1D::<f64>::with_default_data();
    let (ratio, exact) = telescoped_ratio(&toy, &[5], 32);
    assert!((ratio - exact).abs() < 1e-10, "{ratio} vs {exact}");

    let elliptic = Elliptic2D::<f64>::with_default_data();
    let (ratio, exact) = telescoped_ratio(&elliptic, &[2, 1], 8);
    assert!((ratio - exact).abs() < 1e-10, "{ratio} vs {exact}");
}

#[test]
fn hand_computed_two_index_allocation() {
    let v = BTreeMap::from([(mi(&[0]), 4.0), (mi(&[1]), 1.0)]);
    let c = BTreeMap::from([(mi(&[0]), 1.0), (mi(&[1]), 4.0)]);
    let plan = allocate_samples(&v, &c, 1.0, None).unwrap();
    assert!((plan.raw[&mi(&[0])] - 8.0).abs() < 1e-12);
    assert!((plan.raw[&mi(&[1])] - 2.0).abs() < 1e-12);
    assert_eq!(plan.samples[&mi(&[0])], 9);
    assert_eq!(plan.samples[&mi(&[1])], 3);
}

/// Cheapest integer allocation with `sum V / N <= eps^2`, by exhaustive search
/// over the first two counts.
fn brute_force_min_cost(v: [f64; 3], c: [f64; 3], eps: f64, limit: usize) -> f64 {
    let budget = eps * eps;
    let mut best = f64::INFINITY;
    for n1 in 1..=limit {
        for n2 in 1..=limit {
            let rest = budget - v[0] / n1 as f64 - v[1] / n2 as f64;
            if rest <= 0.0 {
                continue;
            }
            let n3 = (v[2] / rest).ceil().max(1.0);
            best = best.min(n1 as f64 * c[0] + n2 as f64 * c[1] + n3 * c[2]);
        }
    }
    best
}

#[test]
fn closed_form_allocation_is_near_optimal() {
    let v = [0.5, 0.2, 0.05];
    let c = [1.0, 2.0, 4.0];
    let eps = 0.3;
    let idx: Vec<MultiIndex> = (0..3).map(|l| mi(&[l])).collect();
    let vm: BTreeMap<_, _> = idx.iter().cloned().zip(v).collect();
    let cm: BTreeMap<_, _> = idx.iter().cloned().zip(c).collect();
    let plan: AllocationPlan = allocate_samples(&vm, &cm, eps, None).unwrap();

    let variance: f64 = idx.iter().map(|a| vm[a] / plan.samples[a] as f64).sum();
    assert!(variance <= eps * eps + 1e-15);

    let brute = brute_force_min_cost(v, c, eps, 400);
    let continuous: f64 = v.iter().zip(&c).map(|(v, c)| (v * c).sqrt()).sum::<f64>().powi(2) / (eps * eps);
    assert!(brute >= continuous - 1e-9, "brute {brute} below the continuous bound {continuous}");
    // rounding each count up costs at most two extra particles per index
    let slack: f64 = 2.0 * c.iter().sum::<f64>();
    assert!(plan.cost() <= brute + slack, "plan {} brute {brute}", plan.cost());
}

#[test]
fn constant_likelihood_recovers_prior_mean() {
    let base = Toy1D::<f64>::with_default_data();
    let flat = Toy1D::<f64>::new(base.observations().clone(), 1e9).unwrap();
    let set = IndexSet::tensor_product(&[3]);
    let samples: BTreeMap<_, _> = set.iter().map(|a| (a.clone(), 20_000)).collect();
    let plan = plan_with(&set, samples);
    let report = mismc_ratio_estimate(&flat, &set, &plan, &SmcConfig::new(10).unwrap(), 3, "flat").unwrap();
    // sd of x^2 under U[-1, 1] is 2 / sqrt(45)
    let se = 2.0 / 45f64.sqrt() / (20_000f64).sqrt();
    assert!((report.estimate - 1.0 / 3.0).abs() < 3.0 * se, "estimate {}", report.estimate);
    assert!(!report.clamped);
}

fn plan_with(set: &IndexSet, samples: BTreeMap<MultiIndex, usize>) -> AllocationPlan {
    let unit: BTreeMap<_, _> = set.iter().map(|a| (a.clone(), 1.0)).collect();
    let mut plan = allocate_samples(&unit, &unit, 1.0, None).unwrap();
    plan.samples = samples;
    plan
}

#[test]
fn single_level_matches_quadrature_posterior_mean() {
    let m = Toy1D::<f64>::with_default_data();
    let alpha = mi(&[6]);
    let config = SmcConfig::new(10).unwrap();
    let estimates: Vec<f64> = (0..10u64)
        .map(|s| single_level_smc_estimate(&m, &alpha, 10_000, &config, s, "single").unwrap().estimate)
        .collect();
    let z = trapezoid_prior(|x| toy_likelihood(&m, 6, x));
    let oracle = trapezoid_prior(|x| x * x * toy_likelihood(&m, 6, x)) / z;
    let (mean, se) = mean_se(&estimates);
    assert!((mean - oracle).abs() <= 3.0 * se, "mean {mean} oracle {oracle} se {se}");
}

fn geometric_plan(set: &IndexSet, n0: usize) -> AllocationPlan {
    let samples = set.iter().map(|a| (a.clone(), (n0 >> (3 * a.get(0) / 2)).max(50))).collect();
    plan_with(set, samples)
}

#[test]
fn self_normalized_and_ratio_estimators_agree() {
    let m = Toy1D::<f64>::with_default_data();
    let set = IndexSet::tensor_product(&[4]);
    let plan = geometric_plan(&set, 2000);
    let config = SmcConfig::new(10).unwrap();
    let re: Vec<f64> = (0..20u64)
        .map(|s| mismc_ratio_estimate(&m, &set, &plan, &config, s, "re").unwrap().estimate)
        .collect();
    let sn: Vec<f64> = (0..20u64)
        .map(|s| mismc_sn_estimate(&m, &set, &plan, &config, s, "sn").unwrap().estimate)
        .collect();
    let (a, sa) = mean_se(&re);
    let (b, sb) = mean_se(&sn);
    assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "ratio {a}±{sa}, self-normalized {b}±{sb}");
}

#[test]
fn single_precision_ratio_estimate() {
    let m = Toy1D::<f32>::with_default_data();
    let set = IndexSet::tensor_product(&[3]);
    let plan = geometric_plan(&set, 2000);
    let report = mismc_ratio_estimate(&m, &set, &plan, &SmcConfig::new(10).unwrap(), 5, "f32").unwrap();
    let reference = prior_integrals(&Toy1D::<f64>::with_default_data(), &mi(&[3]), 48)
        .unwrap()
        .posterior_mean();
    assert!(report.estimate.is_finite());
    assert!((report.estimate - reference).abs() < 0.05, "{} vs {reference}", report.estimate);
}
