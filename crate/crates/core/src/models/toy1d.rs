use std::sync::OnceLock;

use rand::RngCore;

use super::{check_finite, gaussian_log_likelihood, read_observations, uniform_box, Model, Observations, PriorKind};
use crate::error::{Error, Result};
use crate::fem1d;
use crate::multiindex::MultiIndex;
use crate::quadrature::gauss_legendre;
use crate::scalar::Scalar;

/// Parameter value used to generate the shipped dataset.
pub const TOY_TRUTH: f64 = 0.2581;

const DEFAULT_DATA: &str = include_str!("../../data/toy1d.csv");
const MAX_LEVEL: usize = 30;

/// One-parameter inverse problem: recover the constant load `x ~ U[-1, 1]`
/// of `-u'' = x` on `(0, 1)` from noisy point values of `u`.
pub struct Toy1D<T: Scalar> {
    obs: Observations,
    y: Vec<T>,
    noise_sd: T,
    z_min: f64,
    // the solution is linear in x, so each level stores the unit-load response
    unit_response: Vec<OnceLock<Vec<T>>>,
}

impl<T: Scalar> Toy1D<T> {
    pub fn new(obs: Observations, noise_sd: f64) -> Result<Self> {
        if obs.points.iter().any(|p| p.len() != 1 || !(0.0..=1.0).contains(&p[0])) {
            return Err(Error::Dataset("toy1d observation points must be scalars in [0, 1]".into()));
        }
        let mut m = Toy1D {
            y: obs.values.iter().map(|&v| T::of(v)).collect(),
            obs,
            noise_sd: T::of(noise_sd),
            z_min: 0.0,
            unit_response: (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect(),
        };
        m.z_min = 0.5 * m.evidence(0, 64)?;
        Ok(m)
    }

    /// Shipped dataset: 10 observations at `z = 0.1, ..., 1.0`, noise sd 0.2.
    pub fn with_default_data() -> Self {
        let obs = read_observations(DEFAULT_DATA.as_bytes(), 1).expect("shipped toy1d dataset parses");
        Self::new(obs, 0.2).expect("shipped toy1d dataset is valid")
    }

    pub fn with_z_min(mut self, z_min: f64) -> Self {
        self.z_min = z_min;
        self
    }

    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd.to_f64_lossy()
    }

    fn response(&self, level: u32) -> &[T] {
        let slot = &self.unit_response[(level as usize).min(MAX_LEVEL)];
        slot.get_or_init(|| {
            let u = fem1d::solve(T::one(), level);
            self.obs
                .points
                .iter()
                .map(|p| fem1d::interpolate(&u, level, T::of(p[0])))
                .collect()
        })
    }

    /// Forward map at `level`: solution values at the observation points.
    pub fn forward(&self, level: u32, x: T) -> Vec<T> {
        self.response(level).iter().map(|&r| r * x).collect()
    }

    /// Log-likelihood at `level` as a function of the scalar parameter.
    pub fn log_likelihood_at(&self, level: u32, x: T) -> T {
        gaussian_log_likelihood(&self.forward(level, x), &self.y, self.noise_sd)
    }

    /// `int L_level(x) pi_0(dx)` by Gauss-Legendre quadrature.
    pub fn evidence(&self, level: u32, nodes: usize) -> Result<f64> {
        Ok(gauss_legendre(nodes, -1.0, 1.0)
            .iter()
            .map(|&(x, w)| 0.5 * w * self.log_likelihood_at(level, T::of(x)).to_f64_lossy().exp())
            .sum())
    }

    /// Synthetic data: the level-`level` forward map at `truth` plus seeded
    /// Gaussian noise, observed at `z = 0.1, ..., 1.0`.
    pub fn generate_data(truth: f64, level: u32, noise_sd: f64, rng: &mut dyn RngCore) -> Observations {
        let u = fem1d::solve(truth, level);
        let points: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64 / 10.0]).collect();
        let values = points
            .iter()
            .map(|p| fem1d::interpolate(&u, level, p[0]) + noise_sd * f64::standard_normal(rng))
            .collect();
        Observations { points, values }
    }
}

impl<T: Scalar> Model<T> for Toy1D<T> {
    fn name(&self) -> &str {
        "toy1d"
    }

    fn dim(&self) -> usize {
        1
    }

    fn base_offset(&self) -> Vec<u32> {
        vec![0]
    }

    fn prior(&self) -> PriorKind {
        PriorKind::UniformBox {
            lower: vec![-1.0],
            upper: vec![1.0],
        }
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<T> {
        uniform_box(rng, &[-1.0], &[1.0])
    }

    fn log_likelihood(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        check_finite(alpha, self.log_likelihood_at(alpha.get(0), x[0]))
    }

    fn qoi(&self, _alpha: &MultiIndex, x: &[T]) -> Result<T> {
        Ok(x[0] * x[0])
    }

    fn cost(&self, alpha: &MultiIndex) -> f64 {
        2f64.powi(alpha.get(0) as i32)
    }

    fn z_min(&self) -> f64 {
        self.z_min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_dataset_loads() {
        let m = Toy1D::<f64>::with_default_data();
        assert_eq!(m.observations().values.len(), 10);
        assert!(m.z_min() > 0.0);
        let q = m.qoi(&MultiIndex::new(vec![3]), &[0.5]).unwrap();
        assert_eq!(q, 0.25);
    }

    #[test]
    fn likelihood_converges_quadratically() {
        let m = Toy1D::<f64>::with_default_data();
        let exact = |x: f64| {
            let pred: Vec<f64> = m.obs.points.iter().map(|p| fem1d::exact_solution(x, p[0])).collect();
            gaussian_log_likelihood(&pred, &m.y, 0.2).exp()
        };
        let xs: Vec<f64> = (0..=20).map(|i| -1.0 + i as f64 * 0.1).collect();
        let mut prev = f64::NAN;
        for level in 1..=8 {
            let err = xs
                .iter()
                .map(|&x| (m.log_likelihood_at(level, x).exp() - exact(x)).abs())
                .fold(0.0, f64::max);
            let scaled = err * 4f64.powi(level as i32);
            if level > 1 {
                assert!(scaled < 2.0 * prev + 1e-12, "level {level}: {scaled} vs {prev}");
            }
            prev = scaled;
        }
    }

    #[test]
    fn generated_data_is_reproducible() {
        let a = Toy1D::<f64>::generate_data(TOY_TRUTH, 10, 0.2, &mut ChaCha8Rng::seed_from_u64(3));
        let b = Toy1D::<f64>::generate_data(TOY_TRUTH, 10, 0.2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 10);
    }
}
