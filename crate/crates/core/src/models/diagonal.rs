use rand::RngCore;

use super::{Model, PriorKind};
use crate::error::Result;
use crate::multiindex::MultiIndex;
use crate::scalar::Scalar;

/// Views a multi-axis model as a single-level hierarchy: level `l` maps to
/// the index `(l, ..., l)`. This is how multilevel estimators run on the
/// two-dimensional models.
pub struct Diagonal<M> {
    inner: M,
    name: String,
}

impl<M> Diagonal<M> {
    pub fn new<T: Scalar>(inner: M) -> Self
    where
        M: Model<T>,
    {
        let name = format!("{}-diagonal", inner.name());
        Diagonal { inner, name }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    fn lift<T: Scalar>(&self, alpha: &MultiIndex) -> MultiIndex
    where
        M: Model<T>,
    {
        MultiIndex::new(vec![alpha.get(0); self.inner.dim()])
    }
}

impl<T: Scalar, M: Model<T>> Model<T> for Diagonal<M> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        1
    }

    fn base_offset(&self) -> Vec<u32> {
        vec![self.inner.base_offset()[0]]
    }

    fn prior(&self) -> PriorKind {
        self.inner.prior()
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<T> {
        self.inner.sample_prior(rng)
    }

    fn log_likelihood(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        self.inner.log_likelihood(&self.lift(alpha), x)
    }

    fn qoi(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        self.inner.qoi(&self.lift(alpha), x)
    }

    fn cost(&self, alpha: &MultiIndex) -> f64 {
        self.inner.cost(&self.lift(alpha))
    }

    fn z_min(&self) -> f64 {
        self.inner.z_min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Elliptic2D;

    #[test]
    fn diagonal_maps_levels_to_equal_indices() {
        let m = Elliptic2D::<f64>::with_default_data();
        let d = Diagonal::new(&m);
        let x = [0.1, 0.2];
        let l = MultiIndex::new(vec![2]);
        let a = Model::<f64>::log_likelihood(&d, &l, &x).unwrap();
        let b = m.log_likelihood(&MultiIndex::new(vec![2, 2]), &x).unwrap();
        assert_eq!(a, b);
        assert_eq!(Model::<f64>::cost(&d, &l), m.cost(&MultiIndex::new(vec![2, 2])));
        assert_eq!(Model::<f64>::dim(&d), 1);
    }
}
