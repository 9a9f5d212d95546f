use rand::RngCore;

use super::{check_finite, read_points, Model, PriorKind};
use crate::error::{Error, Result};
use crate::kl::{point_process_log_likelihood, truncation, FieldSynthesizer, GridField, ModeTable, PointProcess, Spectrum};
use crate::multiindex::MultiIndex;
use crate::scalar::Scalar;

const DEFAULT_POINTS: &str = include_str!("../../data/lg_points.csv");
const OFFSET: u32 = 5;

/// Parameters of a log-Gaussian point process model.
#[derive(Clone, Debug, PartialEq)]
pub struct LogGaussianConfig {
    pub variant: PointProcess,
    pub spectrum: Spectrum,
    /// Largest effective resolution per axis; sizes the coefficient table.
    pub max_effective: u32,
}

impl LogGaussianConfig {
    /// Cox process with `theta = (0, 1, 110.339)`, `beta = 1.6`.
    pub fn cox() -> Self {
        LogGaussianConfig {
            variant: PointProcess::Cox,
            spectrum: Spectrum {
                theta: [0.0, 1.0, 110.339],
                beta: 1.6,
            },
            max_effective: 10,
        }
    }

    /// Density model with `theta = (0, 1, 27.585)`, `beta = 1.6`.
    pub fn density() -> Self {
        LogGaussianConfig {
            variant: PointProcess::Density,
            spectrum: Spectrum {
                theta: [0.0, 1.0, 27.585],
                beta: 1.6,
            },
            max_effective: 10,
        }
    }
}

/// Latent Gaussian field on `[0, 2]^2` observed through a point pattern in
/// `[0, 1]^2`. The parameter is the table of complex KL coefficients `xi_k`
/// (real and imaginary parts `N(0, 1/2)`); resolution `alpha` truncates the
/// expansion to `|k_i| <= 2^{a_i/2}` and synthesizes on a `2^{a_i}` grid,
/// `a = alpha + 5`.
pub struct LogGaussian<T: Scalar> {
    config: LogGaussianConfig,
    points: Vec<[T; 2]>,
    synth: FieldSynthesizer<T>,
    z_min: f64,
    name: String,
}

impl<T: Scalar> LogGaussian<T> {
    pub fn new(config: LogGaussianConfig, points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Dataset("empty point pattern".into()));
        }
        if config.max_effective < OFFSET {
            return Err(Error::InvalidArgument(format!(
                "max_effective must be at least {OFFSET}"
            )));
        }
        let k = truncation(config.max_effective);
        let synth = FieldSynthesizer::new(config.spectrum, ModeTable::new(k, k));
        let name = match config.variant {
            PointProcess::Cox => "lgc",
            PointProcess::Density => "lgp",
        }
        .to_string();
        let mut m = LogGaussian {
            points: points.iter().map(|p| [T::of(p[0]), T::of(p[1])]).collect(),
            config,
            synth,
            z_min: 0.0,
            name,
        };
        m.z_min = 0.5 * m.prior_evidence_estimate(200, 0x5eed)?;
        Ok(m)
    }

    /// Shipped synthetic pattern of 126 points.
    pub fn with_default_data(config: LogGaussianConfig) -> Self {
        let pts = read_points(DEFAULT_POINTS.as_bytes()).expect("shipped point pattern parses");
        Self::new(config, pts).expect("shipped point pattern is valid")
    }

    pub fn with_z_min(mut self, z_min: f64) -> Self {
        self.z_min = z_min;
        self
    }

    pub fn config(&self) -> &LogGaussianConfig {
        &self.config
    }

    pub fn points(&self) -> usize {
        self.points.len()
    }

    /// The observed locations.
    pub fn point_pattern(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()]).collect()
    }

    pub fn table(&self) -> ModeTable {
        self.synth.table()
    }

    fn check_alpha(&self, eff: &MultiIndex) -> Result<()> {
        if eff.entries().iter().any(|&a| a > self.config.max_effective) {
            return Err(Error::InvalidArgument(format!(
                "effective resolution {eff} exceeds the configured maximum {}",
                self.config.max_effective
            )));
        }
        Ok(())
    }

    /// Field of the state `x` at relative resolution `alpha`.
    pub fn field(&self, alpha: &MultiIndex, x: &[T]) -> Result<GridField<T>> {
        let eff = self.effective(alpha);
        self.check_alpha(&eff)?;
        let (a1, a2) = (eff.get(0), eff.get(1));
        Ok(self
            .synth
            .synthesize(x, (truncation(a1), truncation(a2)), (1 << a1, 1 << a2)))
    }

    /// Log-likelihood and quadrature `Q(exp(x))` together.
    pub fn evaluate(&self, alpha: &MultiIndex, x: &[T]) -> Result<(T, T)> {
        let f = self.field(alpha, x)?;
        let q = f.trapezoid_exp().map_err(|e| e.at(alpha))?;
        let sum: T = self.points.iter().map(|p| f.interpolate(p[0], p[1])).sum();
        let ll = point_process_log_likelihood(self.config.variant, sum, q, self.points.len());
        Ok((check_finite(alpha, ll)?, q))
    }

    /// Crude prior Monte Carlo estimate of `int L_0 d pi_0`.
    fn prior_evidence_estimate(&self, draws: usize, seed: u64) -> Result<f64> {
        let mut rng = crate::rng::stream(seed, &format!("z_min/{}", self.name));
        let zero = MultiIndex::zeros(2);
        let mut lls = Vec::with_capacity(draws);
        for _ in 0..draws {
            let x = self.sample_prior(&mut rng);
            lls.push(self.log_likelihood(&zero, &x)?.to_f64_lossy());
        }
        let m = lls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(m.exp() * lls.iter().map(|l| (l - m).exp()).sum::<f64>() / draws as f64)
    }

    /// Synthetic pattern: `n` points drawn i.i.d. from the density
    /// proportional to `exp(x)` for a prior draw `x` at effective resolution
    /// `(a, a)`, by rejection sampling.
    pub fn generate_points(config: &LogGaussianConfig, a: u32, n: usize, rng: &mut dyn RngCore) -> Vec<[f64; 2]> {
        let k = truncation(a);
        let synth = FieldSynthesizer::<f64>::new(config.spectrum, ModeTable::new(k, k));
        let coeffs: Vec<f64> = (0..synth.table().len())
            .map(|_| f64::standard_normal(rng) * std::f64::consts::FRAC_1_SQRT_2)
            .collect();
        let field = synth.synthesize(&coeffs, (k, k), (1 << a, 1 << a));
        let max = field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut pts = Vec::with_capacity(n);
        while pts.len() < n {
            let z1 = f64::unit_uniform(rng);
            let z2 = f64::unit_uniform(rng);
            let u = f64::unit_uniform(rng);
            if u < (field.interpolate(z1, z2) - max).exp() {
                pts.push([z1, z2]);
            }
        }
        pts
    }
}

impl<T: Scalar> Model<T> for LogGaussian<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        2
    }

    fn base_offset(&self) -> Vec<u32> {
        vec![OFFSET, OFFSET]
    }

    fn prior(&self) -> PriorKind {
        PriorKind::Gaussian { variance: 0.5 }
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> Vec<T> {
        let s = T::of(std::f64::consts::FRAC_1_SQRT_2);
        (0..self.synth.table().len())
            .map(|_| T::standard_normal(rng) * s)
            .collect()
    }

    fn log_likelihood(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        Ok(self.evaluate(alpha, x)?.0)
    }

    fn qoi(&self, alpha: &MultiIndex, x: &[T]) -> Result<T> {
        Ok(self.evaluate(alpha, x)?.1)
    }

    fn cost(&self, alpha: &MultiIndex) -> f64 {
        let e = self.effective(alpha);
        let s = (e.get(0) + e.get(1)) as f64;
        s * 2f64.powf(s)
    }

    fn z_min(&self) -> f64 {
        self.z_min
    }
}
