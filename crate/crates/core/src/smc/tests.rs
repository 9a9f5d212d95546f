use super::*;
use crate::models::PriorKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Likelihood `exp(c)` everywhere, uniform prior on [-1, 1].
struct Flat {
    log_c: f64,
    dim: usize,
}

impl Model<f64> for Flat {
    fn name(&self) -> &str {
        "flat"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn base_offset(&self) -> Vec<u32> {
        vec![0; self.dim]
    }
    fn prior(&self) -> PriorKind {
        PriorKind::UniformBox {
            lower: vec![-1.0],
            upper: vec![1.0],
        }
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.gen_range(-1.0..1.0)]
    }
    fn log_likelihood(&self, _: &MultiIndex, _: &[f64]) -> Result<f64> {
        Ok(self.log_c)
    }
    fn qoi(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        Ok(x[0] * x[0] + alpha.order() as f64)
    }
    fn cost(&self, _: &MultiIndex) -> f64 {
        1.0
    }
    fn z_min(&self) -> f64 {
        0.0
    }
}

/// Gaussian prior with constant likelihood, for pCN.
struct FlatGaussian;

impl Model<f64> for FlatGaussian {
    fn name(&self) -> &str {
        "flat-gaussian"
    }
    fn dim(&self) -> usize {
        1
    }
    fn base_offset(&self) -> Vec<u32> {
        vec![0]
    }
    fn prior(&self) -> PriorKind {
        PriorKind::Gaussian { variance: 0.5 }
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..3).map(|_| f64::standard_normal(rng) * 0.5f64.sqrt()).collect()
    }
    fn log_likelihood(&self, _: &MultiIndex, _: &[f64]) -> Result<f64> {
        Ok(0.3)
    }
    fn qoi(&self, _: &MultiIndex, _: &[f64]) -> Result<f64> {
        Ok(1.0)
    }
    fn cost(&self, _: &MultiIndex) -> f64 {
        1.0
    }
    fn z_min(&self) -> f64 {
        0.0
    }
}

#[test]
fn schedule_validation() {
    assert_eq!(TemperingSchedule::uniform(3).unwrap().taus(), &[0.0, 0.5, 1.0]);
    assert!(TemperingSchedule::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    assert!(TemperingSchedule::new(vec![0.1, 1.0]).is_err());
    assert!(TemperingSchedule::uniform(0).is_err());
}

#[test]
fn single_stage_gives_unit_normalizer() {
    let m = Flat { log_c: 2.0, dim: 1 };
    let cfg = SmcConfig::new(1).unwrap();
    let run = run_smc(&m, &MultiIndex::zeros(1), 10, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(run.log_z, 0.0);
}

#[test]
fn constant_likelihood_normalizer_is_exact() {
    let m = Flat { log_c: 0.7f64.ln(), dim: 1 };
    let cfg = SmcConfig::new(10).unwrap();
    for seed in 0..5 {
        let run = run_smc(&m, &MultiIndex::zeros(1), 7, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!((run.log_z.exp() - 0.7).abs() < 1e-12);
        let psi = signed_psi(&run, &m, Zeta::One).unwrap();
        assert!((estimate_f(&run, &psi) - 0.7).abs() < 1e-12);
    }
}

#[test]
fn zero_particles_rejected() {
    let m = Flat { log_c: 0.0, dim: 1 };
    let cfg = SmcConfig::new(3).unwrap();
    assert!(run_smc(&m, &MultiIndex::zeros(1), 0, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn equal_corner_likelihoods_cancel() {
    let m = Flat { log_c: -1.0, dim: 2 };
    let cfg = SmcConfig::new(4).unwrap();
    let alpha = MultiIndex::new(vec![1, 1]);
    let run = run_coupled_smc(&m, &alpha, 20, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for i in 0..run.len() {
        assert!(run.coupling_weights(i).iter().all(|&w| w == 1.0));
    }
    let one = signed_psi(&run, &m, Zeta::One).unwrap();
    assert!(one.iter().all(|&v| v == 0.0));
    // qoi = x^2 + |alpha|: its mixed difference over (1,1) is 2 - 1 - 1 + 0 = 0
    let q = signed_psi(&run, &m, Zeta::Qoi).unwrap();
    assert!(q.iter().all(|v| v.abs() < 1e-15));
    let at = MultiIndex::new(vec![0, 1]);
    let run = run_coupled_smc(&m, &at, 20, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let q = signed_psi(&run, &m, Zeta::Qoi).unwrap();
    assert!(q.iter().all(|v| (v - 1.0).abs() < 1e-15));
}

#[test]
fn zero_index_collapses_to_single_run() {
    let m = Flat { log_c: 0.0, dim: 2 };
    let cfg = SmcConfig::new(3).unwrap();
    let a = run_coupled_smc(&m, &MultiIndex::zeros(2), 15, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let b = run_smc(&m, &MultiIndex::zeros(2), 15, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(a.particles, b.particles);
    assert_eq!(a.log_z, b.log_z);
    let psi = signed_psi(&a, &m, Zeta::One).unwrap();
    assert!(psi.iter().all(|&v| v == 1.0));
}

#[test]
fn zero_psi_estimates_zero() {
    let m = Flat { log_c: 0.0, dim: 1 };
    let run = run_smc(&m, &MultiIndex::zeros(1), 5, &SmcConfig::new(2).unwrap(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(estimate_f(&run, &[0.0; 5]), 0.0);
}

#[test]
fn resampling_point_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = [0.0, 0.0, 1.0, 0.0];
    assert!(resample_multinomial(&w, 50, &mut rng).unwrap().iter().all(|&a| a == 2));
    assert!(resample_systematic(&w, 50, &mut rng).unwrap().iter().all(|&a| a == 2));
    assert!(matches!(resample_multinomial(&[0.0f64; 3], 3, &mut rng), Err(Error::DegenerateWeights)));
}

#[test]
fn resampling_proportions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let anc = resample_multinomial(&[0.75, 0.25], n, &mut rng).unwrap();
    let frac = anc.iter().filter(|&&a| a == 0).count() as f64 / n as f64;
    assert!((frac - 0.75).abs() < 0.005, "{frac}");
    let anc = resample_systematic(&[0.75, 0.25], n, &mut rng).unwrap();
    let frac = anc.iter().filter(|&&a| a == 0).count() as f64 / n as f64;
    assert!((frac - 0.75).abs() < 1e-4, "{frac}");
}

#[test]
fn resampling_uniform_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let k = 10;
    let n = 50_000;
    let anc = resample_multinomial(&vec![1.0; k], n, &mut rng).unwrap();
    let mut counts = vec![0usize; k];
    for a in anc {
        counts[a] += 1;
    }
    let e = n as f64 / k as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99.9% quantile of chi-square with 9 degrees of freedom
    assert!(chi2 < 27.88, "{chi2}");
}

#[test]
fn zero_step_keeps_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = vec![0.3];
    let mut cur = (0.0, ());
    let acc = mh_mutate(&mut x, &mut cur, &Proposal::RandomWalk { step: vec![0.0] }, 10, &mut rng, |c| {
        Ok(Some((-0.5 * c[0] * c[0] + 0.045, ())))
    })
    .unwrap();
    assert_eq!(acc, 10);
    assert_eq!(x, vec![0.3]);
}

#[test]
fn pcn_with_flat_likelihood_always_accepts() {
    let m = FlatGaussian;
    let cfg = SmcConfig::new(5).unwrap();
    let run = run_smc(&m, &MultiIndex::zeros(1), 30, &cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    assert!(run.acceptance.iter().all(|&a| a == 1.0));
    assert!((run.log_z - 0.3).abs() < 1e-12);
}

#[test]
fn random_walk_acceptance_on_standard_normal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x = vec![0.0];
    let mut cur = (0.0, ());
    let n = 100_000;
    let acc = mh_mutate(&mut x, &mut cur, &Proposal::RandomWalk { step: vec![2.4] }, n, &mut rng, |c| {
        Ok(Some((-0.5 * c[0] * c[0], ())))
    })
    .unwrap();
    let rate = acc as f64 / n as f64;
    assert!((rate - 0.44).abs() < 0.05, "{rate}");
}

#[test]
fn random_walk_preserves_target_moments() {
    // start exactly in N(0,1) and check mean and second moment after mutation
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 20_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let mut x = vec![f64::standard_normal(&mut rng)];
        let mut cur = (-0.5 * x[0] * x[0], ());
        mh_mutate(&mut x, &mut cur, &Proposal::RandomWalk { step: vec![1.0] }, 3, &mut rng, |c| {
            Ok(Some((-0.5 * c[0] * c[0], ())))
        })
        .unwrap();
        s1 += x[0];
        s2 += x[0] * x[0];
    }
    let m1 = s1 / n as f64;
    let m2 = s2 / n as f64;
    let se1 = (1.0 / n as f64).sqrt();
    let se2 = (2.0 / n as f64).sqrt();
    assert!(m1.abs() < 3.0 * se1, "{m1}");
    assert!((m2 - 1.0).abs() < 3.0 * se2, "{m2}");
}

#[test]
fn adaptive_tempering_reaches_one() {
    let m = crate::models::Toy1D::<f64>::with_default_data();
    let mut cfg = SmcConfig::new(10).unwrap();
    cfg.adaptive_ess = Some(0.5);
    let run = run_smc(&m, &MultiIndex::new(vec![2]), 200, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(*run.taus.last().unwrap(), 1.0);
    assert!(run.taus.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn runs_are_deterministic() {
    let m = crate::models::Toy1D::<f64>::with_default_data();
    let cfg = SmcConfig::new(5).unwrap();
    let a = run_coupled_smc(&m, &MultiIndex::new(vec![2]), 50, &cfg, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    let b = run_coupled_smc(&m, &MultiIndex::new(vec![2]), 50, &cfg, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    assert_eq!(a.particles, b.particles);
    assert_eq!(a.log_z.to_bits(), b.log_z.to_bits());
}
