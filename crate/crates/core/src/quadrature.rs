//! Quadrature rules used for reference values.

use crate::error::{Error, Result};
use crate::models::{Model, PriorKind};
use crate::multiindex::MultiIndex;
use crate::scalar::Scalar;

/// Gauss-Legendre nodes and weights on `[a, b]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = vec![(0.0, 0.0); n];
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (mid - half * x, half * w);
        out[n - 1 - i] = (mid + half * x, half * w);
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite trapezoid nodes and weights with `n` intervals on `[a, b]`.
pub fn trapezoid(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { h / 2.0 } else { h };
            (a + i as f64 * h, w)
        })
        .collect()
}

/// Composite Gauss-Legendre rule: `panels` equal panels with `order` points each.
pub fn composite_gauss(panels: usize, order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| gauss_legendre(order, a + p as f64 * h, a + (p + 1) as f64 * h))
        .collect()
}

/// Prior integrals `int L pi_0` and `int phi L pi_0` at one resolution,
/// stored relative to `exp(log_scale)` so peaked likelihoods do not underflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorIntegrals {
    pub log_scale: f64,
    pub mass: f64,
    pub weighted_qoi: f64,
}

impl PriorIntegrals {
    /// `int L pi_0`.
    pub fn evidence(&self) -> f64 {
        self.mass * self.log_scale.exp()
    }

    /// `int phi L pi_0`.
    pub fn unnormalized_qoi(&self) -> f64 {
        self.weighted_qoi * self.log_scale.exp()
    }

    pub fn posterior_mean(&self) -> f64 {
        self.weighted_qoi / self.mass
    }
}

/// Tensor Gauss-Legendre quadrature of the prior integrals at `alpha` with
/// `nodes` points per parameter coordinate. Only uniform box priors are
/// supported, and the node count grows as `nodes^dim`.
pub fn prior_integrals<T, M>(model: &M, alpha: &MultiIndex, nodes: usize) -> Result<PriorIntegrals>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    let (lower, upper) = match model.prior() {
        PriorKind::UniformBox { lower, upper } => (lower, upper),
        PriorKind::Gaussian { .. } => {
            return Err(Error::InvalidArgument(format!(
                "quadrature reference needs a uniform box prior; {} has a Gaussian prior",
                model.name()
            )))
        }
    };
    let dim = lower.len();
    if dim == 0 || dim > 3 || nodes == 0 {
        return Err(Error::InvalidArgument(format!(
            "quadrature reference supports 1 to 3 parameters, got {dim}"
        )));
    }
    let rules: Vec<Vec<(f64, f64)>> = lower
        .iter()
        .zip(&upper)
        .map(|(&a, &b)| {
            gauss_legendre(nodes, a, b)
                .into_iter()
                .map(|(x, w)| (x, w / (b - a)))
                .collect()
        })
        .collect();
    let total = nodes.pow(dim as u32);
    let mut terms = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = Vec::with_capacity(dim);
        let mut w = 1.0;
        for rule in &rules {
            let (xi, wi) = rule[rem % nodes];
            rem /= nodes;
            x.push(T::of(xi));
            w *= wi;
        }
        let ll = model.log_likelihood(alpha, &x).map_err(|e| e.at(alpha))?.to_f64_lossy();
        let q = model.qoi(alpha, &x)?.to_f64_lossy();
        terms.push((w, ll, q));
    }
    let log_scale = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut mass, mut weighted_qoi) = (0.0, 0.0);
    for (w, ll, q) in terms {
        let l = (ll - log_scale).exp();
        mass += w * l;
        weighted_qoi += w * l * q;
    }
    Ok(PriorIntegrals {
        log_scale,
        mass,
        weighted_qoi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..12 {
            let rule = gauss_legendre(n, -1.0, 2.0);
            for deg in 0..(2 * n) {
                let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = (2f64.powi(deg as i32 + 1) - (-1f64).powi(deg as i32 + 1)) / (deg + 1) as f64;
                assert!((approx - exact).abs() < 1e-11 * exact.abs().max(1.0), "n {n} deg {deg}");
            }
        }
    }

    #[test]
    fn trapezoid_is_second_order() {
        let f = |x: f64| x.exp();
        let exact = 1f64.exp() - 1.0;
        let e = |n| (trapezoid(n, 0.0, 1.0).iter().map(|(x, w)| w * f(*x)).sum::<f64>() - exact).abs();
        assert!((e(10) / e(20) - 4.0).abs() < 0.01);
    }

    #[test]
    fn composite_gauss_weights_sum_to_length() {
        let s: f64 = composite_gauss(7, 5, -1.0, 1.0).iter().map(|p| p.1).sum();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn prior_integrals_match_model_evidence() {
        use crate::models::{LogGaussian, LogGaussianConfig, Toy1D};
        let m = Toy1D::<f64>::with_default_data();
        let alpha = MultiIndex::new(vec![3]);
        let q = prior_integrals(&m, &alpha, 64).unwrap();
        let z = m.evidence(3, 64).unwrap();
        assert!((q.evidence() - z).abs() < 1e-12 * z);
        let finer = prior_integrals(&m, &alpha, 128).unwrap();
        assert!((q.posterior_mean() - finer.posterior_mean()).abs() < 1e-8);

        let lg = LogGaussian::<f64>::with_default_data(LogGaussianConfig::density());
        assert!(prior_integrals(&lg, &MultiIndex::zeros(2), 4).is_err());
    }
}
