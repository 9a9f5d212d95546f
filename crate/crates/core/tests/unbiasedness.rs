//! Seed-averaged SMC outputs against deterministic quadrature oracles.

mod common;

use common::{mean_se, sample_variance, toy_likelihood, trapezoid_prior};
use mismc::models::Toy1D;
use mismc::rng::stream;
use mismc::smc::{estimate_f, signed_psi};
use mismc::{corners, run_coupled_smc, run_smc, MultiIndex, SmcConfig, Zeta};

fn config() -> SmcConfig {
    SmcConfig::new(10).unwrap()
}

/// `sum_k sign_k int L_k zeta pi_0` over the corners of `alpha`.
fn increment_oracle(m: &Toy1D<f64>, alpha: u32, zeta: Zeta) -> f64 {
    corners(&MultiIndex::new(vec![alpha]))
        .iter()
        .map(|c| {
            let level = c.index.get(0);
            let z = trapezoid_prior(|x| {
                let w = match zeta {
                    Zeta::One => 1.0,
                    Zeta::Qoi => x * x,
                };
                toy_likelihood(m, level, x) * w
            });
            c.sign as f64 * z
        })
        .sum()
}

fn increment_draws(m: &Toy1D<f64>, alpha: u32, n: usize, seeds: usize, zeta: Zeta, key: &str) -> Vec<f64> {
    let alpha = MultiIndex::new(vec![alpha]);
    (0..seeds)
        .map(|s| {
            let mut rng = stream(s as u64, &format!("{key}/{alpha}"));
            let run = run_coupled_smc(m, &alpha, n, &config(), &mut rng).unwrap();
            let psi = signed_psi(&run, m, zeta).unwrap();
            estimate_f(&run, &psi)
        })
        .collect()
}

#[test]
fn normalizing_constant_is_unbiased() {
    let m = Toy1D::<f64>::with_default_data();
    let alpha = MultiIndex::new(vec![3]);
    let z: Vec<f64> = (0..200u64)
        .map(|s| {
            let mut rng = stream(s, "normalizer");
            run_smc(&m, &alpha, 500, &config(), &mut rng).unwrap().log_z.exp()
        })
        .collect();
    let oracle = trapezoid_prior(|x| toy_likelihood(&m, 3, x));
    let (mean, se) = mean_se(&z);
    assert!((mean - oracle).abs() <= 3.0 * se, "mean {mean} oracle {oracle} se {se}");
}

#[test]
fn normalizing_constant_increment_is_unbiased() {
    let m = Toy1D::<f64>::with_default_data();
    let f = increment_draws(&m, 2, 1000, 200, Zeta::One, "delta-z");
    let oracle = increment_oracle(&m, 2, Zeta::One);
    let (mean, se) = mean_se(&f);
    assert!((mean - oracle).abs() <= 3.0 * se, "mean {mean} oracle {oracle} se {se}");
}

#[test]
fn qoi_increment_is_unbiased() {
    let m = Toy1D::<f64>::with_default_data();
    let f = increment_draws(&m, 1, 1000, 200, Zeta::Qoi, "delta-f");
    let oracle = increment_oracle(&m, 1, Zeta::Qoi);
    let (mean, se) = mean_se(&f);
    assert!((mean - oracle).abs() <= 3.0 * se, "mean {mean} oracle {oracle} se {se}");
}

#[test]
fn increments_unbiased_at_every_level() {
    let m = Toy1D::<f64>::with_default_data();
    for alpha in 0..=3 {
        for zeta in [Zeta::One, Zeta::Qoi] {
            let f = increment_draws(&m, alpha, 200, 200, zeta, "unbiased");
            let oracle = increment_oracle(&m, alpha, zeta);
            let (mean, se) = mean_se(&f);
            assert!(
                (mean - oracle).abs() <= 3.0 * se,
                "alpha {alpha} {zeta:?}: mean {mean} oracle {oracle} se {se}"
            );
        }
    }
}

#[test]
fn variance_scales_inversely_with_particles() {
    let m = Toy1D::<f64>::with_default_data();
    let small = increment_draws(&m, 2, 250, 400, Zeta::Qoi, "variance-small");
    let large = increment_draws(&m, 2, 1000, 400, Zeta::Qoi, "variance-large");
    let ratio = sample_variance(&small) / sample_variance(&large);
    assert!((ratio - 4.0).abs() <= 0.3 * 4.0, "variance ratio {ratio}");
}
