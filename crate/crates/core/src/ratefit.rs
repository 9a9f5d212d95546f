//! Increment statistics of mixed differences and log-linear rate fits.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::multiindex::{corners, MultiIndex};
use crate::scalar::Scalar;
use crate::smc::{estimate_f, run_coupled_smc, signed_psi, SmcConfig, Zeta};

/// Ordinary least-squares line through `(x, y)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Standard error of the slope (zero for exact or two-point fits).
    pub slope_se: f64,
    pub points: usize,
}

pub fn least_squares(pts: &[(f64, f64)]) -> LinearFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_se = if pts.len() > 2 && sxx > 0.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LinearFit {
        slope,
        intercept,
        residual_rms: (rss / n).sqrt(),
        slope_se,
        points: pts.len(),
    }
}

/// Monte Carlo statistics of `Delta(L_alpha zeta_alpha)` at one index.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementStat {
    pub alpha: MultiIndex,
    pub samples: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub second_moment_se: f64,
}

impl IncrementStat {
    pub fn from_samples(alpha: MultiIndex, d: &[f64]) -> Result<Self> {
        let n = d.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        let nf = n as f64;
        let mean = d.iter().sum::<f64>() / nf;
        let second_moment = d.iter().map(|v| v * v).sum::<f64>() / nf;
        let variance = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let m4 = d.iter().map(|v| v.powi(4)).sum::<f64>() / nf;
        Ok(IncrementStat {
            alpha,
            samples: n,
            mean,
            second_moment,
            variance,
            mean_se: (variance / nf).sqrt(),
            second_moment_se: ((m4 - second_moment * second_moment).max(0.0) / nf).sqrt(),
        })
    }
}

/// Draws `n_samples` prior samples and evaluates the mixed difference of
/// `L_alpha zeta_alpha` on each shared draw.
pub fn estimate_increment_stats<T, M>(
    model: &M,
    alpha: &MultiIndex,
    n_samples: usize,
    zeta: Zeta,
    rng: &mut dyn RngCore,
) -> Result<IncrementStat>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    let d = increment_samples(model, alpha, n_samples, &[zeta], rng)?;
    IncrementStat::from_samples(alpha.clone(), &d[0])
}

/// The raw draws behind [`estimate_increment_stats`], one vector per entry
/// of `zetas`, all evaluated on the same prior draws.
pub fn increment_samples<T, M>(
    model: &M,
    alpha: &MultiIndex,
    n_samples: usize,
    zetas: &[Zeta],
    rng: &mut dyn RngCore,
) -> Result<Vec<Vec<f64>>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "increment statistics need at least 100 samples, got {n_samples}"
        )));
    }
    let cs = corners(alpha);
    let mut d = vec![Vec::with_capacity(n_samples); zetas.len()];
    let mut acc = vec![0.0; zetas.len()];
    for _ in 0..n_samples {
        let x = model.sample_prior(rng);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for c in &cs {
            let l = model.log_likelihood(&c.index, &x).map_err(|e| e.at(&c.index))?;
            let weight = c.sign as f64 * l.to_f64_lossy().exp();
            for (a, zeta) in acc.iter_mut().zip(zetas) {
                let z = match zeta {
                    Zeta::One => 1.0,
                    Zeta::Qoi => model.qoi(&c.index, &x)?.to_f64_lossy(),
                };
                *a += weight * z;
            }
        }
        for (v, a) in d.iter_mut().zip(&acc) {
            v.push(*a);
        }
    }
    Ok(d)
}

/// Cross-check mode: statistics of `F^N(psi_zeta)` over independent coupled
/// SMC runs instead of prior draws.
pub fn estimate_increment_stats_smc<T, M, R>(
    model: &M,
    alpha: &MultiIndex,
    runs: usize,
    particles: usize,
    config: &SmcConfig,
    zeta: Zeta,
    rng: &mut R,
) -> Result<IncrementStat>
where
    T: Scalar,
    M: Model<T> + ?Sized,
    R: RngCore,
{
    let mut d = Vec::with_capacity(runs);
    for _ in 0..runs {
        let run = run_coupled_smc(model, alpha, particles, config, rng)?;
        let psi = signed_psi(&run, model, zeta)?;
        d.push(estimate_f(&run, &psi));
    }
    IncrementStat::from_samples(alpha.clone(), &d)
}

/// Which statistic is regressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    /// `|E Delta|`, whose decay rate is `s`.
    Mean,
    /// `E Delta^2`, whose decay rate is `beta`.
    SecondMoment,
}

/// A fitted rate along a line of indices.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    /// Direction of the index line (`e_i` for an axis, all ones for the
    /// diagonal).
    pub direction: Vec<u32>,
    pub statistic: Statistic,
    pub fit: LinearFit,
    /// Indices excluded because the statistic was not resolvable.
    pub dropped: Vec<MultiIndex>,
}

impl RateFit {
    /// The decay rate, `-slope`.
    pub fn rate(&self) -> f64 {
        -self.fit.slope
    }
}

/// Position of `alpha` along `direction`: `<alpha, d> / <d, d>`, so an axis
/// index maps to its coordinate and `(l, l)` maps to `l` on the diagonal.
pub fn line_position(alpha: &MultiIndex, direction: &[u32]) -> f64 {
    let dot: u32 = alpha.entries().iter().zip(direction).map(|(&a, &d)| a * d).sum();
    let norm: u32 = direction.iter().map(|d| d * d).sum();
    dot as f64 / norm as f64
}

/// Regresses `log2(statistic)` on the position along `direction`. Mean points with
/// `|mean| < 2 SE` and non-positive statistics are dropped with a warning.
pub fn fit_rates(stats: &[IncrementStat], direction: &[u32], statistic: Statistic) -> Result<RateFit> {
    let mut pts = Vec::new();
    let mut dropped = Vec::new();
    for s in stats {
        let (v, ok) = match statistic {
            Statistic::Mean => (s.mean.abs(), s.mean.abs() >= 2.0 * s.mean_se && s.mean != 0.0),
            Statistic::SecondMoment => (s.second_moment, s.second_moment > 0.0),
        };
        if ok && v.is_finite() {
            pts.push((line_position(&s.alpha, direction), v.log2()));
        } else {
            log::warn!("dropping {} from the {statistic:?} fit: value {v:e} not resolvable", s.alpha);
            dropped.push(s.alpha.clone());
        }
    }
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 usable points, got {}",
            pts.len()
        )));
    }
    Ok(RateFit {
        direction: direction.to_vec(),
        statistic,
        fit: least_squares(&pts),
        dropped,
    })
}

/// Growth rate of the model cost along `direction`, from indices `alphas`.
pub fn fit_cost_rate<T: Scalar, M: Model<T> + ?Sized>(model: &M, alphas: &[MultiIndex], direction: &[u32]) -> LinearFit {
    let pts: Vec<(f64, f64)> = alphas
        .iter()
        .map(|a| (line_position(a, direction), model.cost(a).log2()))
        .collect();
    least_squares(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Elliptic2D, Toy1D};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(values: &[(u32, f64)]) -> Vec<IncrementStat> {
        values
            .iter()
            .map(|&(a, v)| IncrementStat {
                alpha: MultiIndex::new(vec![a]),
                samples: 1000,
                mean: v,
                second_moment: v,
                variance: 0.0,
                mean_se: 0.0,
                second_moment_se: 0.0,
            })
            .collect()
    }

    #[test]
    fn planted_geometric_decay_is_recovered() {
        let s = synthetic(&(0..6).map(|a| (a, 2f64.powi(-4 * a as i32))).collect::<Vec<_>>());
        let f = fit_rates(&s, &[1], Statistic::SecondMoment).unwrap();
        assert!((f.fit.slope + 4.0).abs() < 1e-9);
        assert!(f.fit.residual_rms < 1e-9);
    }

    #[test]
    fn flat_statistic_gives_zero_slope() {
        let s = synthetic(&[(1, 0.3), (2, 0.3), (3, 0.3), (4, 0.3)]);
        assert!(fit_rates(&s, &[1], Statistic::Mean).unwrap().fit.slope.abs() < 1e-12);
    }

    #[test]
    fn unresolved_points_are_dropped() {
        let mut s = synthetic(&[(1, 0.5), (2, 0.25), (3, 0.125), (4, 0.0)]);
        s[0].mean_se = 1.0;
        let f = fit_rates(&s, &[1], Statistic::Mean);
        assert!(f.is_err());
        s[0].mean_se = 0.0;
        let f = fit_rates(&s, &[1], Statistic::Mean).unwrap();
        assert_eq!(f.dropped, vec![MultiIndex::new(vec![4])]);
        assert!((f.rate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_index_statistic_is_the_likelihood() {
        let m = Toy1D::<f64>::with_default_data();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = estimate_increment_stats(&m, &MultiIndex::new(vec![0]), 2000, Zeta::One, &mut rng).unwrap();
        let z0 = m.evidence(0, 64).unwrap();
        assert!((s.mean - z0).abs() < 4.0 * s.mean_se);
        assert!(estimate_increment_stats(&m, &MultiIndex::new(vec![0]), 10, Zeta::One, &mut rng).is_err());
    }

    #[test]
    fn cost_rates() {
        let m = Elliptic2D::<f64>::with_default_data();
        let axis: Vec<MultiIndex> = (0..4).map(|a| MultiIndex::new(vec![a, 2])).collect();
        assert!((fit_cost_rate(&m, &axis, &[1, 0]).slope - 1.0).abs() < 1e-12);
        let diag: Vec<MultiIndex> = (0..4).map(|a| MultiIndex::new(vec![a, a])).collect();
        assert!((fit_cost_rate(&m, &diag, &[1, 1]).slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_line() {
        let f = least_squares(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
    }
}
