//! Bilinear finite elements on the unit square for `-div(a grad u) = f` with
//! homogeneous Dirichlet conditions.
//!
//! The mesh has `n1 x n2` interior nodes at `z = (i / (n1 + 1), j / (n2 + 1))`.

use crate::error::Result;
use crate::linalg::{conjugate_gradient, CgReport, Identity, Preconditioner, StencilMatrix, TensorLaplacePreconditioner};
use crate::scalar::Scalar;

/// Uniform tensor mesh of interior nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mesh {
    pub n1: usize,
    pub n2: usize,
}

impl Mesh {
    pub fn new(n1: usize, n2: usize) -> Self {
        Mesh { n1, n2 }
    }

    /// Mesh with `2^{a1} x 2^{a2}` interior nodes.
    pub fn dyadic(a1: u32, a2: u32) -> Self {
        Mesh::new(1 << a1, 1 << a2)
    }

    pub fn h<T: Scalar>(&self) -> (T, T) {
        (
            T::one() / T::of((self.n1 + 1) as f64),
            T::one() / T::of((self.n2 + 1) as f64),
        )
    }

    pub fn unknowns(&self) -> usize {
        self.n1 * self.n2
    }
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Stiffness matrix of `a(z)` using 2x2 Gauss quadrature on every cell.
pub fn assemble_stiffness<T, F>(mesh: Mesh, coef: F) -> StencilMatrix<T>
where
    T: Scalar,
    F: Fn(T, T) -> T,
{
    let (h1, h2) = mesh.h::<T>();
    let mut a = StencilMatrix::zeros(mesh.n1, mesh.n2);
    let quarter = T::of(0.25);
    for c2 in 0..=mesh.n2 {
        for c1 in 0..=mesh.n1 {
            // local corner k = (k & 1, k >> 1); grid node (c1 + k1, c2 + k2)
            let mut local = [[T::zero(); 4]; 4];
            for &g2 in &GAUSS {
                for &g1 in &GAUSS {
                    let (t1, t2) = (T::of(g1), T::of(g2));
                    let z1 = (T::of(c1 as f64) + t1) * h1;
                    let z2 = (T::of(c2 as f64) + t2) * h2;
                    let w = coef(z1, z2) * h1 * h2 * quarter;
                    let grads = shape_gradients(t1, t2, h1, h2);
                    for i in 0..4 {
                        for j in 0..4 {
                            local[i][j] += w * (grads[i].0 * grads[j].0 + grads[i].1 * grads[j].1);
                        }
                    }
                }
            }
            for i in 0..4 {
                let ni = ((c1 + (i & 1)) as isize - 1, (c2 + (i >> 1)) as isize - 1);
                for j in 0..4 {
                    let nj = ((c1 + (j & 1)) as isize - 1, (c2 + (j >> 1)) as isize - 1);
                    a.add(ni, nj, local[i][j]);
                }
            }
        }
    }
    a
}

fn shape_gradients<T: Scalar>(t1: T, t2: T, h1: T, h2: T) -> [(T, T); 4] {
    let one = T::one();
    [
        (-(one - t2) / h1, -(one - t1) / h2),
        ((one - t2) / h1, -t1 / h2),
        (-t2 / h1, (one - t1) / h2),
        (t2 / h1, t1 / h2),
    ]
}

fn shape_values<T: Scalar>(t1: T, t2: T) -> [T; 4] {
    let one = T::one();
    [(one - t1) * (one - t2), t1 * (one - t2), (one - t1) * t2, t1 * t2]
}

/// Load vector `<f, phi_j>` using 2x2 Gauss quadrature on every cell.
pub fn assemble_load<T, F>(mesh: Mesh, f: F) -> Vec<T>
where
    T: Scalar,
    F: Fn(T, T) -> T,
{
    let (h1, h2) = mesh.h::<T>();
    let mut b = vec![T::zero(); mesh.unknowns()];
    let quarter = T::of(0.25);
    for c2 in 0..=mesh.n2 {
        for c1 in 0..=mesh.n1 {
            for &g2 in &GAUSS {
                for &g1 in &GAUSS {
                    let (t1, t2) = (T::of(g1), T::of(g2));
                    let z1 = (T::of(c1 as f64) + t1) * h1;
                    let z2 = (T::of(c2 as f64) + t2) * h2;
                    let w = f(z1, z2) * h1 * h2 * quarter;
                    let phi = shape_values(t1, t2);
                    for (k, p) in phi.iter().enumerate() {
                        let (i1, i2) = (c1 + (k & 1), c2 + (k >> 1));
                        if i1 == 0 || i2 == 0 || i1 > mesh.n1 || i2 > mesh.n2 {
                            continue;
                        }
                        b[(i1 - 1) + mesh.n1 * (i2 - 1)] += w * *p;
                    }
                }
            }
        }
    }
    b
}

/// Load vector of a constant forcing, exact: `f h1 h2` at every interior node.
pub fn constant_load<T: Scalar>(mesh: Mesh, f: T) -> Vec<T> {
    let (h1, h2) = mesh.h::<T>();
    vec![f * h1 * h2; mesh.unknowns()]
}

/// Krylov solver choice for [`solve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverKind {
    /// Plain conjugate gradients.
    Cg,
    /// Conjugate gradients preconditioned by the exact inverse of the
    /// constant-coefficient operator with the given coefficient.
    FastPoissonPcg { coefficient: f64 },
}

/// Relative residual target of the Krylov solves.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Solves `A u = b`; fails if CG does not converge within `10 * max(n1, n2)`
/// iterations (unpreconditioned runs get `10 * n1 * n2`).
pub fn solve<T: Scalar>(
    mesh: Mesh,
    a: &StencilMatrix<T>,
    b: &[T],
    solver: SolverKind,
    precond: Option<&TensorLaplacePreconditioner<T>>,
) -> Result<(Vec<T>, CgReport)> {
    let mv = |x: &[T], y: &mut [T]| a.matvec(x, y);
    match solver {
        SolverKind::Cg => conjugate_gradient(mv, &Identity, b, CG_TOLERANCE, 10 * mesh.unknowns()),
        SolverKind::FastPoissonPcg { coefficient } => {
            let max_iter = 10 * mesh.n1.max(mesh.n2);
            match precond {
                Some(p) => conjugate_gradient(mv, p, b, CG_TOLERANCE, max_iter),
                None => {
                    let p = poisson_preconditioner(mesh, T::of(coefficient));
                    conjugate_gradient(mv, &p as &dyn Preconditioner<T>, b, CG_TOLERANCE, max_iter)
                }
            }
        }
    }
}

pub fn poisson_preconditioner<T: Scalar>(mesh: Mesh, coefficient: T) -> TensorLaplacePreconditioner<T> {
    let (h1, h2) = mesh.h::<T>();
    TensorLaplacePreconditioner::new(mesh.n1, mesh.n2, h1, h2, coefficient)
}

/// Bilinear interpolation of interior nodal values (zero on the boundary).
pub fn interpolate<T: Scalar>(mesh: Mesh, u: &[T], z1: T, z2: T) -> T {
    let locate = |z: T, n: usize| -> (usize, T) {
        let cells = n + 1;
        let s = (z * T::of(cells as f64)).max(T::zero()).min(T::of(cells as f64));
        let c = s.floor().to_usize().unwrap_or(0).min(cells - 1);
        (c, s - T::of(c as f64))
    };
    let (c1, t1) = locate(z1, mesh.n1);
    let (c2, t2) = locate(z2, mesh.n2);
    let node = |i1: usize, i2: usize| -> T {
        if i1 == 0 || i2 == 0 || i1 > mesh.n1 || i2 > mesh.n2 {
            T::zero()
        } else {
            u[(i1 - 1) + mesh.n1 * (i2 - 1)]
        }
    };
    let phi = shape_values(t1, t2);
    phi[0] * node(c1, c2) + phi[1] * node(c1 + 1, c2) + phi[2] * node(c1, c2 + 1) + phi[3] * node(c1 + 1, c2 + 1)
}

/// `L^2` distance between the bilinear interpolant of `u` and `exact`,
/// integrated with 3x3 Gauss quadrature per cell.
pub fn l2_error<T, F>(mesh: Mesh, u: &[T], exact: F) -> T
where
    T: Scalar,
    F: Fn(T, T) -> T,
{
    let pts = [
        (0.112_701_665_379_258_3, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.887_298_334_620_741_7, 5.0 / 18.0),
    ];
    let (h1, h2) = mesh.h::<T>();
    let mut acc = T::zero();
    for c2 in 0..=mesh.n2 {
        for c1 in 0..=mesh.n1 {
            for &(g2, w2) in &pts {
                for &(g1, w1) in &pts {
                    let z1 = (T::of(c1 as f64) + T::of(g1)) * h1;
                    let z2 = (T::of(c2 as f64) + T::of(g2)) * h2;
                    let d = interpolate(mesh, u, z1, z2) - exact(z1, z2);
                    acc += T::of(w1 * w2) * h1 * h2 * d * d;
                }
            }
        }
    }
    acc.sqrt()
}
