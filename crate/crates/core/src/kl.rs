//! Truncated Karhunen-Loeve expansion of a periodic Gaussian field on
//! `[0, 2]^2`, synthesized on the `[0, 1]^2` sub-grid with FFTs.
//!
//! The field is `x(z) = theta_1 + 2 Re sum_{k in A} zeta_k xi_k exp(i pi k.z)`
//! where `A` is a half-plane of wavenumbers, so conjugate pairs make the
//! result real.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spectral parameters `theta = (mean, scale, length)` and smoothness `beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub theta: [f64; 3],
    pub beta: f64,
}

impl Spectrum {
    /// `zeta_k^2 = theta_2 / ((theta_3 + k1^2)(theta_3 + k2^2))^{(beta+1)/2}`.
    pub fn zeta_sq(&self, k1: i64, k2: i64) -> f64 {
        let [_, t2, t3] = self.theta;
        let p = (t3 + (k1 * k1) as f64) * (t3 + (k2 * k2) as f64);
        t2 / p.powf((self.beta + 1.0) / 2.0)
    }

    pub fn zeta(&self, k1: i64, k2: i64) -> f64 {
        self.zeta_sq(k1, k2).sqrt()
    }
}

/// Truncation half-width `floor(2^{a/2})` for an effective resolution `a`.
pub fn truncation(a: u32) -> usize {
    (2f64.powf(a as f64 / 2.0)).floor() as usize
}

/// Layout of the complex coefficient table covering the half-plane
/// `{|k1| <= K1, 1 <= k2 <= K2} U {1 <= k1 <= K1, k2 = 0}`.
///
/// Each mode occupies two consecutive reals (real, imaginary part).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeTable {
    pub k1_max: usize,
    pub k2_max: usize,
}

impl ModeTable {
    pub fn new(k1_max: usize, k2_max: usize) -> Self {
        ModeTable { k1_max, k2_max }
    }

    pub fn modes(&self) -> usize {
        self.k2_max * (2 * self.k1_max + 1) + self.k1_max
    }

    /// Number of reals in a state vector.
    pub fn len(&self) -> usize {
        2 * self.modes()
    }

    pub fn is_empty(&self) -> bool {
        self.modes() == 0
    }

    /// Slot of mode `k` (must lie in the half-plane and inside the table).
    pub fn slot(&self, k1: i64, k2: i64) -> usize {
        let w = 2 * self.k1_max + 1;
        if k2 >= 1 {
            debug_assert!(k2 as usize <= self.k2_max && k1.unsigned_abs() as usize <= self.k1_max);
            (k2 as usize - 1) * w + (k1 + self.k1_max as i64) as usize
        } else {
            debug_assert!(k2 == 0 && k1 >= 1 && k1 as usize <= self.k1_max);
            self.k2_max * w + (k1 as usize - 1)
        }
    }

    /// Iterates the half-plane modes with `|k1| <= t1`, `k2 <= t2`.
    pub fn modes_within(&self, t1: usize, t2: usize) -> impl Iterator<Item = (i64, i64)> {
        let (t1, t2) = (t1.min(self.k1_max) as i64, t2.min(self.k2_max) as i64);
        let upper = (1..=t2).flat_map(move |k2| (-t1..=t1).map(move |k1| (k1, k2)));
        upper.chain((1..=t1).map(|k1| (k1, 0)))
    }
}

/// Field sampled on the `(n1 + 1) x (n2 + 1)` grid `z = (i1 / n1, i2 / n2)`,
/// edges included. Value `(i1, i2)` is stored at `i1 + (n1 + 1) i2`.
#[derive(Clone, Debug)]
pub struct GridField<T> {
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> GridField<T> {
    pub fn constant(n1: usize, n2: usize, c: T) -> Self {
        GridField {
            n1,
            n2,
            values: vec![c; (n1 + 1) * (n2 + 1)],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity((n1 + 1) * (n2 + 1));
        for i2 in 0..=n2 {
            for i1 in 0..=n1 {
                values.push(f(T::of(i1 as f64 / n1 as f64), T::of(i2 as f64 / n2 as f64)));
            }
        }
        GridField { n1, n2, values }
    }

    pub fn at(&self, i1: usize, i2: usize) -> T {
        self.values[i1 + (self.n1 + 1) * i2]
    }

    /// Bilinear interpolant at `z` in `[0, 1]^2`.
    pub fn interpolate(&self, z1: T, z2: T) -> T {
        let locate = |z: T, n: usize| -> (usize, T) {
            let s = (z * T::of(n as f64)).max(T::zero()).min(T::of(n as f64));
            let c = s.floor().to_usize().unwrap_or(0).min(n - 1);
            (c, s - T::of(c as f64))
        };
        let (c1, t1) = locate(z1, self.n1);
        let (c2, t2) = locate(z2, self.n2);
        let one = T::one();
        (one - t1) * (one - t2) * self.at(c1, c2)
            + t1 * (one - t2) * self.at(c1 + 1, c2)
            + (one - t1) * t2 * self.at(c1, c2 + 1)
            + t1 * t2 * self.at(c1 + 1, c2 + 1)
    }

    /// Trapezoidal rule for `int exp(x)` over the unit square.
    pub fn trapezoid_exp(&self) -> Result<T> {
        let limit = T::of(700.0);
        let mut acc = T::zero();
        let mut max_field = T::neg_infinity();
        for i2 in 0..=self.n2 {
            let w2 = if i2 == 0 || i2 == self.n2 { T::of(0.5) } else { T::one() };
            let mut row = T::zero();
            for i1 in 0..=self.n1 {
                let w1 = if i1 == 0 || i1 == self.n1 { T::of(0.5) } else { T::one() };
                let v = self.at(i1, i2);
                max_field = max_field.max(v);
                row += w1 * v.exp();
            }
            acc += w2 * row;
        }
        if !(max_field < limit) || !acc.is_finite() {
            return Err(Error::QuadratureOverflow {
                max_field: max_field.to_f64_lossy(),
            });
        }
        Ok(acc / T::of((self.n1 * self.n2) as f64))
    }
}

type Plan<T> = Arc<dyn Fft<T>>;

/// Synthesizes truncated fields from coefficient tables. FFT plans are cached
/// per lattice size.
pub struct FieldSynthesizer<T: Scalar> {
    spectrum: Spectrum,
    table: ModeTable,
    plans: Mutex<HashMap<usize, Plan<T>>>,
}

impl<T: Scalar> FieldSynthesizer<T> {
    pub fn new(spectrum: Spectrum, table: ModeTable) -> Self {
        FieldSynthesizer {
            spectrum,
            table,
            plans: Mutex::new(HashMap::new()),
        }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn table(&self) -> ModeTable {
        self.table
    }

    fn plan(&self, len: usize) -> Plan<T> {
        let mut plans = self.plans.lock().expect("fft plan cache poisoned");
        plans
            .entry(len)
            .or_insert_with(|| FftPlanner::new().plan_fft_inverse(len))
            .clone()
    }

    /// Field with truncation `(t1, t2)` on the grid with `n1 x n2` cells.
    /// Requires `t_i < n_i` so that no wavenumber aliases.
    pub fn synthesize(&self, coeffs: &[T], t: (usize, usize), n: (usize, usize)) -> GridField<T> {
        let (n1, n2) = n;
        let (t1, t2) = (t.0.min(self.table.k1_max), t.1.min(self.table.k2_max));
        assert!(t1 < n1 && t2 < n2, "truncation {t:?} aliases on grid {n:?}");
        assert_eq!(coeffs.len(), self.table.len());
        let (m1, m2) = (2 * n1, 2 * n2);
        let zero = Complex::new(T::zero(), T::zero());
        let p1 = self.plan(m1);
        let p2 = self.plan(m2);

        // rows[k2][i1]: sum over k1 for fixed k2 >= 0, for i1 in 0..=n1
        let mut rows = vec![zero; (t2 + 1) * (n1 + 1)];
        let mut buf = vec![zero; m1.max(m2)];
        for k2 in 0..=t2 {
            let line = &mut buf[..m1];
            line.fill(zero);
            let k1_range: Box<dyn Iterator<Item = i64>> = if k2 == 0 {
                Box::new(1..=t1 as i64)
            } else {
                Box::new(-(t1 as i64)..=t1 as i64)
            };
            let mut any = false;
            for k1 in k1_range {
                let s = self.table.slot(k1, k2 as i64);
                let z = T::of(self.spectrum.zeta(k1, k2 as i64));
                let bin = k1.rem_euclid(m1 as i64) as usize;
                line[bin] = Complex::new(coeffs[2 * s] * z, coeffs[2 * s + 1] * z);
                any = true;
            }
            if any {
                p1.process(line);
            }
            rows[k2 * (n1 + 1)..(k2 + 1) * (n1 + 1)].copy_from_slice(&line[..=n1]);
        }

        let two = T::of(2.0);
        let mean = T::of(self.spectrum.theta[0]);
        let mut values = vec![T::zero(); (n1 + 1) * (n2 + 1)];
        for i1 in 0..=n1 {
            let col = &mut buf[..m2];
            col.fill(zero);
            for k2 in 0..=t2 {
                col[k2] = rows[k2 * (n1 + 1) + i1];
            }
            p2.process(col);
            for i2 in 0..=n2 {
                values[i1 + (n1 + 1) * i2] = mean + two * col[i2].re;
            }
        }
        GridField { n1, n2, values }
    }

    /// Direct summation of the truncated expansion at a point, for testing.
    pub fn evaluate_direct(&self, coeffs: &[T], t: (usize, usize), z1: f64, z2: f64) -> f64 {
        let mut acc = 0.0;
        for (k1, k2) in self.table.modes_within(t.0, t.1) {
            let s = self.table.slot(k1, k2);
            let c = Complex::new(coeffs[2 * s].to_f64_lossy(), coeffs[2 * s + 1].to_f64_lossy());
            let phase = std::f64::consts::PI * (k1 as f64 * z1 + k2 as f64 * z2);
            acc += 2.0 * self.spectrum.zeta(k1, k2) * (c * Complex::from_polar(1.0, phase)).re;
        }
        self.spectrum.theta[0] + acc
    }
}

/// Likelihood variant for the log-Gaussian point process models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointProcess {
    /// Cox process: `sum x(z_j) - int exp(x)`.
    Cox,
    /// Density model: `sum x(z_j) - n log int exp(x)`.
    Density,
}

/// Log-likelihood from the interpolated field sum and the quadrature `q`.
pub fn point_process_log_likelihood<T: Scalar>(variant: PointProcess, field_sum: T, q: T, n: usize) -> T {
    match variant {
        PointProcess::Cox => field_sum - q,
        PointProcess::Density => field_sum - T::of(n as f64) * q.ln(),
    }
}
