#![allow(dead_code)]

use mismc::models::Toy1D;

pub const TRAPEZOID_POINTS: usize = 10_000;

/// Composite trapezoid of `f(x) pi_0(x)` over `[-1, 1]` with `pi_0 = 1/2`.
pub fn trapezoid_prior(f: impl Fn(f64) -> f64) -> f64 {
    let h = 2.0 / TRAPEZOID_POINTS as f64;
    let mut s = 0.5 * (f(-1.0) + f(1.0));
    for i in 1..TRAPEZOID_POINTS {
        s += f(-1.0 + i as f64 * h);
    }
    0.5 * s * h
}

pub fn toy_likelihood(m: &Toy1D<f64>, level: u32, x: f64) -> f64 {
    m.log_likelihood_at(level, x).exp()
}

/// Mean and standard error of a sample.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
