//! Sparse linear algebra for the finite element models: a tridiagonal direct
//! solver, a 9-point stencil matrix on tensor grids, and (preconditioned)
//! conjugate gradients.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i` to
/// column `i + 1`. The matrix is assumed diagonally dominant (no pivoting).
pub fn thomas_solve<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    assert!(rhs.len() == n && lower.len() + 1 == n.max(1) && upper.len() + 1 == n.max(1));
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = if n > 1 { upper[0] / diag[0] } else { T::zero() };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / m;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Square matrix on an `n1 x n2` grid of unknowns where each row couples a
/// node to its 3x3 neighbourhood. Unknown `(i1, i2)` has linear index
/// `i1 + n1 * i2`; stencil slot `(d1 + 1) + 3 (d2 + 1)` holds the coupling to
/// node `(i1 + d1, i2 + d2)`.
#[derive(Clone, Debug)]
pub struct StencilMatrix<T> {
    n1: usize,
    n2: usize,
    coeffs: Vec<[T; 9]>,
}

impl<T: Scalar> StencilMatrix<T> {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        StencilMatrix {
            n1,
            n2,
            coeffs: vec![[T::zero(); 9]; n1 * n2],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn size(&self) -> usize {
        self.n1 * self.n2
    }

    /// Adds `v` to the coupling of node `(i1, i2)` with `(j1, j2)`.
    /// Couplings to nodes outside the grid are ignored (Dirichlet boundary).
    pub fn add(&mut self, i: (isize, isize), j: (isize, isize), v: T) {
        let (n1, n2) = (self.n1 as isize, self.n2 as isize);
        if i.0 < 0 || i.1 < 0 || i.0 >= n1 || i.1 >= n2 || j.0 < 0 || j.1 < 0 || j.0 >= n1 || j.1 >= n2 {
            return;
        }
        let (d1, d2) = (j.0 - i.0, j.1 - i.1);
        debug_assert!(d1.abs() <= 1 && d2.abs() <= 1);
        let slot = ((d1 + 1) + 3 * (d2 + 1)) as usize;
        self.coeffs[(i.0 + n1 * i.1) as usize][slot] += v;
    }

    pub fn get(&self, i: (usize, usize), j: (usize, usize)) -> T {
        let d1 = j.0 as isize - i.0 as isize;
        let d2 = j.1 as isize - i.1 as isize;
        if d1.abs() > 1 || d2.abs() > 1 {
            return T::zero();
        }
        self.coeffs[i.0 + self.n1 * i.1][((d1 + 1) + 3 * (d2 + 1)) as usize]
    }

    pub fn row(&self, i: (usize, usize)) -> &[T; 9] {
        &self.coeffs[i.0 + self.n1 * i.1]
    }

    /// `self * a + other * b`, entrywise.
    pub fn combine(parts: &[(&StencilMatrix<T>, T)]) -> StencilMatrix<T> {
        let (n1, n2) = parts[0].0.shape();
        let mut out = StencilMatrix::zeros(n1, n2);
        for (m, w) in parts {
            assert_eq!(m.shape(), (n1, n2));
            for (o, r) in out.coeffs.iter_mut().zip(&m.coeffs) {
                for s in 0..9 {
                    o[s] += *w * r[s];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        let (n1, n2) = (self.n1, self.n2);
        debug_assert_eq!(x.len(), n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let row = &self.coeffs[i1 + n1 * i2];
                let mut acc = T::zero();
                for d2 in 0..3usize {
                    let j2 = i2 + d2;
                    if j2 == 0 || j2 > n2 {
                        continue;
                    }
                    let base = n1 * (j2 - 1);
                    for d1 in 0..3usize {
                        let j1 = i1 + d1;
                        if j1 == 0 || j1 > n1 {
                            continue;
                        }
                        acc += row[d1 + 3 * d2] * x[base + j1 - 1];
                    }
                }
                y[i1 + n1 * i2] = acc;
            }
        }
    }

    /// Largest asymmetry `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i2 in 0..self.n2 {
            for i1 in 0..self.n1 {
                for d2 in -1isize..=1 {
                    for d1 in -1isize..=1 {
                        let j1 = i1 as isize + d1;
                        let j2 = i2 as isize + d2;
                        if j1 < 0 || j2 < 0 || j1 >= self.n1 as isize || j2 >= self.n2 as isize {
                            continue;
                        }
                        let a = self.get((i1, i2), (j1 as usize, j2 as usize));
                        let b = self.get((j1 as usize, j2 as usize), (i1, i2));
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Preconditioner interface for [`conjugate_gradient`].
pub trait Preconditioner<T> {
    /// Writes `M^-1 r` into `z`.
    fn apply(&self, r: &[T], z: &mut [T]);
}

/// No preconditioning.
pub struct Identity;

impl<T: Scalar> Preconditioner<T> for Identity {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

/// Outcome of a converged CG solve.
#[derive(Clone, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for `A x = b`, started from zero.
///
/// Stops when `|r| <= tol * |b|`; fails after `max_iter` iterations.
pub fn conjugate_gradient<T, A, P>(
    matvec: A,
    precond: &P,
    b: &[T],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<T>, CgReport)>
where
    T: Scalar,
    A: Fn(&[T], &mut [T]),
    P: Preconditioner<T> + ?Sized,
{
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let b_norm = norm(b);
    if b_norm == T::zero() {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let target = T::of(tol) * b_norm;
    let mut r = b.to_vec();
    let mut z = vec![T::zero(); n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::SolverNotConverged {
                iterations: it,
                residual: (norm(&r) / b_norm).to_f64_lossy(),
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rn = norm(&r);
        if rn <= target {
            return Ok((
                x,
                CgReport {
                    iterations: it,
                    relative_residual: (rn / b_norm).to_f64_lossy(),
                },
            ));
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverNotConverged {
        iterations: max_iter,
        residual: (norm(&r) / b_norm).to_f64_lossy(),
    })
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Type-I discrete sine transform `X_k = sum_j x_j sin(pi j k / (n + 1))`
/// (1-based `j, k`) computed through a complex FFT of length `2(n + 1)`.
pub struct SineTransform<T: Scalar> {
    n: usize,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Scalar> SineTransform<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        SineTransform {
            n,
            fft: planner.plan_fft_forward(2 * (n + 1)),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms `data` in place; `buf` is resized as needed.
    pub fn apply(&self, data: &mut [T], buf: &mut Vec<Complex<T>>) {
        let n = self.n;
        let m = 2 * (n + 1);
        buf.clear();
        buf.resize(m, Complex::new(T::zero(), T::zero()));
        for j in 0..n {
            buf[j + 1] = Complex::new(data[j], T::zero());
            buf[m - 1 - j] = Complex::new(-data[j], T::zero());
        }
        self.fft.process(buf);
        let half = T::of(0.5);
        for k in 0..n {
            data[k] = -buf[k + 1].im * half;
        }
    }
}

/// Exact inverse of `c (K1 (x) M2 + M1 (x) K2)`, the bilinear finite element
/// stiffness operator with constant coefficient `c` on a uniform tensor grid
/// with homogeneous Dirichlet conditions, applied with fast sine transforms.
pub struct TensorLaplacePreconditioner<T: Scalar> {
    n1: usize,
    n2: usize,
    dst1: SineTransform<T>,
    dst2: SineTransform<T>,
    inv_eig: Vec<T>,
}

impl<T: Scalar> TensorLaplacePreconditioner<T> {
    /// Grid of `n1 x n2` interior nodes with spacings `h1, h2`.
    pub fn new(n1: usize, n2: usize, h1: T, h2: T, coefficient: T) -> Self {
        let eig = |n: usize, h: T| -> (Vec<T>, Vec<T>) {
            (1..=n)
                .map(|k| {
                    let c = (T::PI() * T::of(k as f64) / T::of((n + 1) as f64)).cos();
                    let two = T::of(2.0);
                    let stiff = two * (T::one() - c) / h;
                    let mass = h * (T::of(4.0) + two * c) / T::of(6.0);
                    (stiff, mass)
                })
                .unzip()
        };
        let (k1, m1) = eig(n1, h1);
        let (k2, m2) = eig(n2, h2);
        let scale = T::of(4.0 / ((n1 + 1) as f64 * (n2 + 1) as f64));
        let mut inv_eig = vec![T::zero(); n1 * n2];
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let lam = coefficient * (k1[i1] * m2[i2] + m1[i1] * k2[i2]);
                inv_eig[i1 + n1 * i2] = scale / lam;
            }
        }
        TensorLaplacePreconditioner {
            n1,
            n2,
            dst1: SineTransform::new(n1),
            dst2: SineTransform::new(n2),
            inv_eig,
        }
    }

    fn transform(&self, z: &mut [T], buf: &mut Vec<Complex<T>>, col: &mut [T]) {
        let (n1, n2) = (self.n1, self.n2);
        for i2 in 0..n2 {
            self.dst1.apply(&mut z[n1 * i2..n1 * (i2 + 1)], buf);
        }
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                col[i2] = z[i1 + n1 * i2];
            }
            self.dst2.apply(col, buf);
            for i2 in 0..n2 {
                z[i1 + n1 * i2] = col[i2];
            }
        }
    }
}

impl<T: Scalar> Preconditioner<T> for TensorLaplacePreconditioner<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
        let mut buf = Vec::new();
        let mut col = vec![T::zero(); self.n2];
        self.transform(z, &mut buf, &mut col);
        for (v, s) in z.iter_mut().zip(&self.inv_eig) {
            *v *= *s;
        }
        self.transform(z, &mut buf, &mut col);
    }
}
