use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::RngCore;

use super::{check_finite, gaussian_log_likelihood, read_observations, uniform_box, Model, Observations, PriorKind};
use crate::error::{Error, Result};
use crate::fem2d::{self, Mesh, SolverKind};
use crate::linalg::{StencilMatrix, TensorLaplacePreconditioner};
use crate::multiindex::MultiIndex;
use crate::quadrature::gauss_legendre;
use crate::scalar::Scalar;

/// Parameter value used to generate the shipped dataset.
pub const ELLIPTIC_TRUTH: [f64; 2] = [-0.4836, -0.5806];

const DEFAULT_DATA: &str = include_str!("../../data/elliptic2d.csv");
const FORCING: f64 = 100.0;
const OFFSET: u32 = 2;

/// Mesh operators of one resolution: the stiffness matrix is affine in the
/// parameter, `A(x) = 3 A0 + x1 A1 + x2 A2`.
struct Operators<T: Scalar> {
    mesh: Mesh,
    parts: [StencilMatrix<T>; 3],
    load: Vec<T>,
    precond: TensorLaplacePreconditioner<T>,
}

/// Recover `x in [-1, 1]^2` in the diffusion coefficient
/// `a(z) = 3 + x1 cos(3 z1) sin(3 z2) + x2 cos(z1) sin(z2)` of
/// `-div(a grad u) = 100` on the unit square from noisy point values of `u`.
pub struct Elliptic2D<T: Scalar> {
    obs: Observations,
    y: Vec<T>,
    noise_sd: T,
    z_min: f64,
    solver: SolverKind,
    cache: Mutex<HashMap<(u32, u32), Arc<Operators<T>>>>,
}

impl<T: Scalar> Elliptic2D<T> {
    pub fn new(obs: Observations, noise_sd: f64) -> Result<Self> {
        if obs.points.iter().any(|p| p.len() != 2 || p.iter().any(|v| !(0.0..=1.0).contains(v))) {
            return Err(Error::Dataset("elliptic2d observation points must lie in [0, 1]^2".into()));
        }
        let mut m = Elliptic2D {
            y: obs.values.iter().map(|&v| T::of(v)).collect(),
            obs,
            noise_sd: T::of(noise_sd),
            z_min: 0.0,
            solver: SolverKind::FastPoissonPcg { coefficient: 3.0 },
            cache: Mutex::new(HashMap::new()),
        };
        m.z_min = 0.5 * m.evidence(&MultiIndex::zeros(2), 12)?;
        Ok(m)
    }

    /// Shipped dataset: four observations at `(0.25|0.75, 0.25|0.75)`, noise sd 0.5.
    pub fn with_default_data() -> Self {
        let obs = read_observations(DEFAULT_DATA.as_bytes(), 2).expect("shipped elliptic2d dataset parses");
        Self::new(obs, 0.5).expect("shipped elliptic2d dataset is valid")
    }

    pub fn with_z_min(mut self, z_min: f64) -> Self {
        self.z_min = z_min;
        self
    }

    /// Plain CG instead of the preconditioned default.
    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    fn operators(&self, eff: (u32, u32)) -> Arc<Operators<T>> {
        if let Some(op) = self.cache.lock().expect("operator cache poisoned").get(&eff) {
            return op.clone();
        }
        // assembled outside the lock; a racing duplicate is harmless
        let mesh = Mesh::dyadic(eff.0, eff.1);
        let three = T::of(3.0);
        let parts = [
            fem2d::assemble_stiffness(mesh, |_, _| T::one()),
            fem2d::assemble_stiffness(mesh, move |z1: T, z2: T| (three * z1).cos() * (three * z2).sin()),
            fem2d::assemble_stiffness(mesh, |z1: T, z2: T| z1.cos() * z2.sin()),
        ];
        let coefficient = match self.solver {
            SolverKind::FastPoissonPcg { coefficient } => coefficient,
            SolverKind::Cg => 3.0,
        };
        let op = Arc::new(Operators {
            mesh,
            parts,
            load: fem2d::constant_load(mesh, T::of(FORCING)),
            precond: fem2d::poisson_preconditioner(mesh, T::of(coefficient)),
        });
        self.cache
            .lock()
            .expect("operator cache poisoned")
            .entry(eff)
            .or_insert(op)
            .clone()
    }

    /// Solution values at the observation points for an effective mesh
    /// `2^{a1} x 2^{a2}`.
    pub fn forward_effective(&self, eff: (u32, u32), x: &[T]) -> Result<Vec<T>> {
        let op = self.operators(eff);
        let a = StencilMatrix::combine(&[(&op.parts[0], T::of(3.0)), (&op.parts[1], x[0]), (&op.parts[2], x[1])]);
        let (u, _) = fem2d::solve(op.mesh, &a, &op.load, self.solver, Some(&op.precond))?;
        Ok(self
            .obs
            .points
            .iter()
            .map(|p| fem2d::interpolate(op.mesh, &u, T::of(p[0]), T::of(p[1])))
            .collect())
    }

    pub fn forward(&self, alpha: &MultiIndex, x: &[T]) -> Result<Vec<T>> {
        let e = self.effective(alpha);
        self.forward_effective((e.get(0), e.get(1)), x)
    }

    /// `int L_alpha(x) pi_0(dx)` by tensor Gauss-Legendre quadrature.
    pub fn evidence(&self, alpha: &MultiIndex, nodes: usize) -> Result<f64> {
        let rule = gauss_legendre(nodes, -1.0, 1.0);
        let mut acc = 0.0;
        for &(x1, w1) in &rule {
            for &(x2, w2) in &rule {
                let ll = self.log_likelihood(alpha, &[T::of(x1), T::of(x2)])?;
                acc += 0.25 * w1 * w2 * ll.to_f64_lossy().exp();
            }
        }
        Ok(acc)
    }

    /// Synthetic data: the forward map on the effective mesh `eff` at `truth`
    /// plus seeded Gaussian noise, at the four default observation points.
    pub fn generate_data(truth: [f64; 2], eff: (u32, u32), noise_sd: f64, rng: &mut dyn RngCore) -> Result<Observations> {
        let points: Vec<Vec<f64>> = vec![vec![0.25, 0.25], vec![0.25, 0.75], vec![0.75, 0.25], vec![0.75, 0.75]];
        let probe = Elliptic2D::<f64> {
            y: vec![0.0; 4],
            obs: Observations {
                points: points.clone(),
                values: vec![0.0; 4],
            },
            noise_sd,
            z_min: 0.0,
            solver: SolverKind::FastPoissonPcg { coefficient: 3.0 },
            cache: Mutex::new(HashMap::new()),
        };
        let clean = probe.forward_effective(eff, &truth)?;
        let values = clean.iter().map(|v| v + noise_sd * f64::standard_normal(rng)).collect();
        Ok(Observations { points, values })
    }
}

impl<T: Scalar> Model<T> for Elliptic2D<T> {
    fn name(&self) -> &str {
        "elliptic2d"
    }

    fn dim(&self) -> usize {
        2
    }

    fn base_offset(&self) -> Vec<u32> {
        vec![OFFSET, OFFSET]
    }

    fn prior(&self) -> PriorKind {
        PriorKind::UniformBox {
            lower: vec![-1.0, -1.0],
            upper: vec![1.0, 1.0],
        }
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<T> {
        uniform_box(rng, &[-1.0, -1.0], &[1.0, 1.0])
    }

    fn log_likelihood(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        let pred = self.forward(alpha, x).map_err(|e| e.at(alpha))?;
        check_finite(alpha, gaussian_log_likelihood(&pred, &self.y, self.noise_sd))
    }

    fn qoi(&self, _alpha: &MultiIndex, x: &[T]) -> Result<T> {
        Ok(x[0] * x[0] + x[1] * x[1])
    }

    fn cost(&self, alpha: &MultiIndex) -> f64 {
        let e = self.effective(alpha);
        2f64.powi((e.get(0) + e.get(1)) as i32)
    }

    fn z_min(&self) -> f64 {
        self.z_min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dataset_and_qoi() {
        let m = Elliptic2D::<f64>::with_default_data();
        assert_eq!(m.observations().values.len(), 4);
        assert!(m.z_min() > 0.0);
        let q = m.qoi(&MultiIndex::zeros(2), &ELLIPTIC_TRUTH).unwrap();
        assert!((q - 0.57096532).abs() < 1e-12);
    }

    #[test]
    fn plain_and_preconditioned_solvers_agree() {
        let m = Elliptic2D::<f64>::with_default_data();
        let plain = Elliptic2D::<f64>::with_default_data().with_solver(SolverKind::Cg);
        let alpha = MultiIndex::new(vec![2, 1]);
        let x = [0.7, -0.9];
        let a = m.forward(&alpha, &x).unwrap();
        let b = plain.forward(&alpha, &x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn observations_converge_with_resolution() {
        let m = Elliptic2D::<f64>::with_default_data();
        let x = [0.3, -0.6];
        let fine = m.forward_effective((8, 8), &x).unwrap();
        let mut prev = f64::INFINITY;
        for a in 3..=6 {
            let u = m.forward_effective((a, a), &x).unwrap();
            let err = u.iter().zip(&fine).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < prev / 2.5, "level {a}: {err} vs {prev}");
            prev = err;
        }
    }
}
