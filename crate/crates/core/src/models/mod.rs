//! Bayesian inverse problems with resolution-indexed likelihoods.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::scalar::Scalar;

mod data;
mod diagonal;
mod elliptic2d;
mod log_gaussian;
mod toy1d;

pub use data::{read_observations, read_points, write_observations, write_points, Observations};
pub use diagonal::Diagonal;
pub use elliptic2d::{Elliptic2D, ELLIPTIC_TRUTH};
pub use log_gaussian::{LogGaussian, LogGaussianConfig};
pub use toy1d::{Toy1D, TOY_TRUTH};

/// Prior family, which decides the mutation kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum PriorKind {
    /// Independent uniforms on a box.
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// Independent centred Gaussians with the given variance per coordinate.
    Gaussian { variance: f64 },
}

/// A Bayesian inverse problem `pi_alpha(dx) ~ L_alpha(x) pi_0(dx)`.
///
/// Resolution indices passed to the model are relative: the model adds its
/// own base offset before mapping to a mesh.
pub trait Model<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// Number of resolution axes.
    fn dim(&self) -> usize;

    /// Per-axis shift applied to relative indices.
    fn base_offset(&self) -> Vec<u32>;

    fn prior(&self) -> PriorKind;

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<T>;

    fn log_likelihood(&self, alpha: &MultiIndex, x: &[T]) -> Result<T>;

    /// Quantity of interest at resolution `alpha`.
    fn qoi(&self, alpha: &MultiIndex, x: &[T]) -> Result<T>;

    /// Cost of one likelihood evaluation, in model cost units.
    fn cost(&self, alpha: &MultiIndex) -> f64;

    /// Lower clamp for the ratio estimator's denominator.
    fn z_min(&self) -> f64;

    /// Effective (offset) index.
    fn effective(&self, alpha: &MultiIndex) -> MultiIndex {
        alpha.offset(&self.base_offset())
    }
}

impl<T: Scalar, M: Model<T> + ?Sized> Model<T> for &M {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn base_offset(&self) -> Vec<u32> {
        (**self).base_offset()
    }
    fn prior(&self) -> PriorKind {
        (**self).prior()
    }
    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<T> {
        (**self).sample_prior(rng)
    }
    fn log_likelihood(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        (**self).log_likelihood(alpha, x)
    }
    fn qoi(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        (**self).qoi(alpha, x)
    }
    fn cost(&self, alpha: &MultiIndex) -> f64 {
        (**self).cost(alpha)
    }
    fn z_min(&self) -> f64 {
        (**self).z_min()
    }
}

/// `-1/2 sum (y_i - pred_i)^2 / sd^2`, without the normalizing constant.
pub fn gaussian_log_likelihood<T: Scalar>(predicted: &[T], y: &[T], noise_sd: T) -> T {
    assert_eq!(predicted.len(), y.len());
    let inv = T::one() / (noise_sd * noise_sd);
    let ss: T = predicted.iter().zip(y).map(|(&p, &o)| (o - p) * (o - p)).sum();
    -T::of(0.5) * ss * inv
}

pub(crate) fn check_finite<T: Scalar>(alpha: &MultiIndex, v: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteLikelihood {
            alpha: alpha.clone(),
            value: v.to_f64_lossy(),
        })
    }
}

pub(crate) fn uniform_box<T: Scalar>(rng: &mut dyn RngCore, lower: &[f64], upper: &[f64]) -> Vec<T> {
    lower
        .iter()
        .zip(upper)
        .map(|(&a, &b)| T::of(a) + T::of(b - a) * T::unit_uniform(rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_log_likelihood_examples() {
        assert_eq!(gaussian_log_likelihood(&[1.0, 2.0], &[1.0, 2.0], 0.3f64), 0.0);
        assert!((gaussian_log_likelihood(&[0.0], &[0.2], 0.2f64) + 0.5).abs() < 1e-15);
        assert!((gaussian_log_likelihood(&[0.0; 4], &[1.0; 4], 0.5f64) + 8.0).abs() < 1e-15);
    }
}
