//! Tempered SMC samplers: the single-resolution sampler and the coupled
//! sampler whose particles carry one shared parameter evaluated at every
//! corner of a mixed difference.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::models::{Model, PriorKind};
use crate::multiindex::{corners, MultiIndex, SignedCorner};
use crate::scalar::Scalar;

/// Tempering exponents `0 = tau_1 < ... < tau_J = 1`. A single-stage schedule
/// samples the prior and never reweights.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperingSchedule {
    taus: Vec<f64>,
}

impl TemperingSchedule {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidSchedule("no stages".into()));
        }
        if taus.len() == 1 {
            return Ok(TemperingSchedule { taus });
        }
        if taus[0] != 0.0 || *taus.last().unwrap() != 1.0 {
            return Err(Error::InvalidSchedule("must run from 0 to 1".into()));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule("must be strictly increasing".into()));
        }
        Ok(TemperingSchedule { taus })
    }

    /// `tau_j = (j - 1) / (J - 1)`.
    pub fn uniform(stages: usize) -> Result<Self> {
        match stages {
            0 => Err(Error::InvalidSchedule("no stages".into())),
            1 => Ok(TemperingSchedule { taus: vec![1.0] }),
            j => Self::new((0..j).map(|i| i as f64 / (j - 1) as f64).collect()),
        }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn stages(&self) -> usize {
        self.taus.len()
    }
}

/// MH proposal.
#[derive(Clone, Debug, PartialEq)]
pub enum Proposal {
    /// Symmetric Gaussian random walk with per-coordinate standard deviations.
    RandomWalk { step: Vec<f64> },
    /// `x' = sqrt(1 - rho^2) x + rho xi` with `xi ~ N(0, variance)`; reversible
    /// for the Gaussian prior, so only the likelihood enters the acceptance.
    Pcn { rho: f64, variance: f64 },
}

/// Runs `n_steps` MH steps on `x`. `log_target` returns the log acceptance
/// density of a proposal (`None` if it lies outside the support) along with
/// auxiliary data cached for the accepted state. For [`Proposal::Pcn`] the
/// density must exclude the Gaussian prior. Returns the number of accepted
/// moves.
pub fn mh_mutate<T, S, R, F>(
    x: &mut Vec<T>,
    current: &mut (T, S),
    proposal: &Proposal,
    n_steps: usize,
    rng: &mut R,
    mut log_target: F,
) -> Result<usize>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&[T]) -> Result<Option<(T, S)>>,
{
    let mut accepted = 0;
    let mut cand = x.clone();
    for _ in 0..n_steps {
        match proposal {
            Proposal::RandomWalk { step } => {
                for ((c, &v), &s) in cand.iter_mut().zip(x.iter()).zip(step.iter().cycle()) {
                    *c = v + T::of(s) * T::standard_normal(rng);
                }
            }
            Proposal::Pcn { rho, variance } => {
                let keep = T::of((1.0 - rho * rho).max(0.0).sqrt());
                let scale = T::of(rho * variance.sqrt());
                for (c, &v) in cand.iter_mut().zip(x.iter()) {
                    *c = keep * v + scale * T::standard_normal(rng);
                }
            }
        }
        let u = T::unit_uniform(rng);
        if let Some((lp, aux)) = log_target(&cand)? {
            let log_ratio = lp - current.0;
            if log_ratio >= T::zero() || u.ln() < log_ratio {
                std::mem::swap(x, &mut cand);
                *current = (lp, aux);
                accepted += 1;
            }
        }
    }
    Ok(accepted)
}

/// Resampling scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Resampling {
    #[default]
    Multinomial,
    Systematic,
}

/// Multinomial ancestor indices from non-negative weights.
pub fn resample_multinomial<T: Scalar, R: Rng + ?Sized>(weights: &[T], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let w = normalize(weights)?;
    let dist = WeightedIndex::new(&w).map_err(|_| Error::DegenerateWeights)?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// Systematic resampling: one uniform offset, `n` evenly spaced points.
pub fn resample_systematic<T: Scalar, R: Rng + ?Sized>(weights: &[T], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let w = normalize(weights)?;
    let u0: f64 = rng.gen();
    let mut out = Vec::with_capacity(n);
    let mut cum = w[0];
    let mut i = 0;
    for k in 0..n {
        let u = (k as f64 + u0) / n as f64;
        while u > cum && i + 1 < w.len() {
            i += 1;
            cum += w[i];
        }
        out.push(i);
    }
    Ok(out)
}

fn normalize<T: Scalar>(weights: &[T]) -> Result<Vec<f64>> {
    let w: Vec<f64> = weights.iter().map(|v| v.to_f64_lossy()).collect();
    if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateWeights);
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let out: Vec<f64> = w.iter().map(|v| v / total).collect();
    debug_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    Ok(out)
}

/// Which MH proposal the sampler uses.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum KernelChoice {
    /// Random walk for bounded priors, pCN for Gaussian priors.
    #[default]
    Auto,
    RandomWalk,
    Pcn,
}

/// Mutation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationConfig {
    pub kernel: KernelChoice,
    pub steps: usize,
    /// Random-walk standard deviation as a fraction of the prior box width,
    /// or the pCN `rho`, at the first stage.
    pub initial_scale: f64,
    /// Per-stage adaptation: halve the scale when the previous stage's
    /// acceptance fell below 0.2, double it above 0.5.
    pub adapt: bool,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            kernel: KernelChoice::Auto,
            steps: 5,
            initial_scale: 0.5,
            adapt: true,
        }
    }
}

/// Sampler settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SmcConfig {
    pub schedule: TemperingSchedule,
    pub mutation: MutationConfig,
    pub resampling: Resampling,
    /// ESS-driven tempering: choose each next exponent so the incremental
    /// weights keep this fraction of `N` as effective sample size. The fixed
    /// schedule is ignored when set.
    pub adaptive_ess: Option<f64>,
}

impl SmcConfig {
    pub fn new(stages: usize) -> Result<Self> {
        Ok(SmcConfig {
            schedule: TemperingSchedule::uniform(stages)?,
            mutation: MutationConfig::default(),
            resampling: Resampling::Multinomial,
            adaptive_ess: None,
        })
    }

    /// Likelihood evaluations per particle (all stages, all MH steps), as
    /// used in the cost model.
    pub fn evaluations_per_particle(&self) -> f64 {
        (self.schedule.stages() * (1 + self.mutation.steps)) as f64
    }
}

/// Output of a coupled run at index `alpha`.
#[derive(Clone, Debug)]
pub struct CoupledRun<T> {
    pub alpha: MultiIndex,
    pub corners: Vec<SignedCorner>,
    /// Final particles (uniformly weighted).
    pub particles: Vec<Vec<T>>,
    /// Per particle, the log-likelihood of every corner.
    pub corner_log_likelihoods: Vec<Vec<T>>,
    /// Log of the normalizing constant estimate.
    pub log_z: f64,
    /// Acceptance rate of each mutation stage.
    pub acceptance: Vec<f64>,
    /// Tempering exponents actually used.
    pub taus: Vec<f64>,
    pub likelihood_evaluations: usize,
}

impl<T: Scalar> CoupledRun<T> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Coupling weights `omega_k = L_k / max_j L_j` of particle `i`.
    pub fn coupling_weights(&self, i: usize) -> Vec<T> {
        let ll = &self.corner_log_likelihoods[i];
        let m = max_of(ll);
        ll.iter().map(|&l| (l - m).exp()).collect()
    }
}

fn max_of<T: Scalar>(v: &[T]) -> T {
    v.iter().cloned().fold(T::neg_infinity(), T::max)
}

fn log_mean_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (v.iter().map(|x| (x - m).exp()).sum::<f64>() / v.len() as f64).ln()
}

fn corner_log_likelihoods<T: Scalar, M: Model<T> + ?Sized>(
    model: &M,
    corners: &[SignedCorner],
    x: &[T],
) -> Result<Vec<T>> {
    corners
        .iter()
        .map(|c| model.log_likelihood(&c.index, x).map_err(|e| e.at(&c.index)))
        .collect()
}

/// Next exponent keeping the ESS of `exp((tau - cur) l_i)` at `target * N`.
fn next_adaptive_tau(log_l: &[f64], cur: f64, target: f64) -> f64 {
    let ess = |tau: f64| {
        let w: Vec<f64> = log_l.iter().map(|l| (tau - cur) * l).collect();
        let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|x| (x - m).exp()).collect();
        let s: f64 = e.iter().sum();
        s * s / e.iter().map(|x| x * x).sum::<f64>() / log_l.len() as f64
    };
    if ess(1.0) >= target {
        return 1.0;
    }
    let (mut lo, mut hi) = (cur, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ess(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.max(cur + 1e-9)
}

/// Coupled sampler (the single-resolution sampler is the one-corner case).
/// Targets `Lbold^tau pi_0` with `Lbold = max_k L_{alpha_k}` over `corners`.
pub fn run_sampler<T, M, R>(
    model: &M,
    alpha: &MultiIndex,
    corners: Vec<SignedCorner>,
    n: usize,
    config: &SmcConfig,
    rng: &mut R,
) -> Result<CoupledRun<T>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
    R: RngCore,
{
    if n == 0 {
        return Err(Error::InvalidArgument("at least one particle is required".into()));
    }
    let prior = model.prior();
    let (proposal_kind, widths, variance) = match (&prior, config.mutation.kernel) {
        (PriorKind::Gaussian { variance }, KernelChoice::Auto | KernelChoice::Pcn) => (KernelChoice::Pcn, vec![], *variance),
        (PriorKind::Gaussian { variance }, KernelChoice::RandomWalk) => {
            (KernelChoice::RandomWalk, vec![variance.sqrt()], *variance)
        }
        (PriorKind::UniformBox { lower, upper }, KernelChoice::Auto | KernelChoice::RandomWalk) => (
            KernelChoice::RandomWalk,
            lower.iter().zip(upper).map(|(a, b)| b - a).collect(),
            0.0,
        ),
        (PriorKind::UniformBox { .. }, KernelChoice::Pcn) => {
            return Err(Error::InvalidArgument("pCN needs a Gaussian prior".into()))
        }
    };
    let in_support = |x: &[T]| -> bool {
        match &prior {
            PriorKind::UniformBox { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (a, b))| {
                    let v = v.to_f64_lossy();
                    v >= *a && v <= *b
                }),
            PriorKind::Gaussian { .. } => true,
        }
    };
    let log_prior = |x: &[T]| -> T {
        match &prior {
            PriorKind::Gaussian { variance } => {
                let ss: T = x.iter().map(|&v| v * v).sum();
                -T::of(0.5 / variance) * ss
            }
            PriorKind::UniformBox { .. } => T::zero(),
        }
    };

    let mut evaluations = 0usize;
    let mut particles: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut lls: Vec<Vec<T>> = Vec::with_capacity(n);
    for _ in 0..n {
        let x = model.sample_prior(rng);
        lls.push(corner_log_likelihoods(model, &corners, &x)?);
        evaluations += corners.len();
        particles.push(x);
    }

    let mut taus = vec![config.schedule.taus()[0]];
    if config.schedule.stages() == 1 && config.adaptive_ess.is_none() {
        return Ok(CoupledRun {
            alpha: alpha.clone(),
            corners,
            particles,
            corner_log_likelihoods: lls,
            log_z: 0.0,
            acceptance: vec![],
            taus,
            likelihood_evaluations: evaluations,
        });
    }
    taus[0] = 0.0;

    let mut log_z = 0.0;
    let mut acceptance = Vec::new();
    let mut scale = config.mutation.initial_scale;
    let mut stage = 0usize;
    loop {
        let cur = *taus.last().unwrap();
        if cur >= 1.0 {
            break;
        }
        let max_ll: Vec<f64> = lls.iter().map(|l| max_of(l).to_f64_lossy()).collect();
        let next = match config.adaptive_ess {
            Some(target) => next_adaptive_tau(&max_ll, cur, target),
            None => config.schedule.taus()[stage + 1],
        };
        let dtau = next - cur;
        let logw: Vec<f64> = max_ll.iter().map(|l| dtau * l).collect();
        let lme = log_mean_exp(&logw);
        if !lme.is_finite() {
            return Err(Error::DegenerateWeights);
        }
        log_z += lme;
        let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
        let anc = match config.resampling {
            Resampling::Multinomial => resample_multinomial(&w, n, rng)?,
            Resampling::Systematic => resample_systematic(&w, n, rng)?,
        };
        particles = anc.iter().map(|&a| particles[a].clone()).collect();
        lls = anc.iter().map(|&a| lls[a].clone()).collect();

        let proposal = match proposal_kind {
            KernelChoice::Pcn => Proposal::Pcn {
                rho: scale.min(1.0),
                variance,
            },
            _ => Proposal::RandomWalk {
                step: widths.iter().map(|w| w * scale).collect(),
            },
        };
        let tau = T::of(next);
        let pcn = matches!(proposal, Proposal::Pcn { .. });
        let mut accepted = 0usize;
        let mut attempted = 0usize;
        for (x, ll) in particles.iter_mut().zip(lls.iter_mut()) {
            let base = if pcn { T::zero() } else { log_prior(x) };
            let mut current = (tau * max_of(ll) + base, std::mem::take(ll));
            let acc = mh_mutate(x, &mut current, &proposal, config.mutation.steps, rng, |cand| {
                if !in_support(cand) {
                    return Ok(None);
                }
                let l = corner_log_likelihoods(model, &corners, cand)?;
                evaluations += corners.len();
                let base = if pcn { T::zero() } else { log_prior(cand) };
                Ok(Some((tau * max_of(&l) + base, l)))
            })?;
            *ll = current.1;
            accepted += acc;
            attempted += config.mutation.steps;
        }
        let rate = if attempted > 0 { accepted as f64 / attempted as f64 } else { 1.0 };
        acceptance.push(rate);
        if config.mutation.adapt {
            if rate < 0.2 {
                scale *= 0.5;
            } else if rate > 0.5 {
                scale = match proposal_kind {
                    KernelChoice::Pcn => (scale * 2.0).min(1.0),
                    _ => scale * 2.0,
                };
            }
        }
        taus.push(next);
        stage += 1;
    }

    Ok(CoupledRun {
        alpha: alpha.clone(),
        corners,
        particles,
        corner_log_likelihoods: lls,
        log_z,
        acceptance,
        taus,
        likelihood_evaluations: evaluations,
    })
}

/// Algorithm with a single resolution: targets `L_alpha^tau pi_0`.
pub fn run_smc<T, M, R>(model: &M, alpha: &MultiIndex, n: usize, config: &SmcConfig, rng: &mut R) -> Result<CoupledRun<T>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
    R: RngCore,
{
    let corner = SignedCorner {
        index: alpha.clone(),
        sign: 1,
    };
    run_sampler(model, alpha, vec![corner], n, config, rng)
}

/// Coupled sampler over every corner of the mixed difference at `alpha`.
pub fn run_coupled_smc<T, M, R>(
    model: &M,
    alpha: &MultiIndex,
    n: usize,
    config: &SmcConfig,
    rng: &mut R,
) -> Result<CoupledRun<T>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
    R: RngCore,
{
    run_sampler(model, alpha, corners(alpha), n, config, rng)
}

/// Per-corner integrand of a signed increment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Zeta {
    /// `zeta = 1`, giving normalizing-constant increments.
    One,
    /// `zeta = phi_alpha_k`, the model's quantity of interest at the corner.
    Qoi,
}

/// `psi_zeta(x_i) = sum_k sign_k omega_k(x_i) zeta_k(x_i)` for every particle.
pub fn signed_psi<T, M>(run: &CoupledRun<T>, model: &M, zeta: Zeta) -> Result<Vec<T>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    signed_psi_with(run, |c, x| match zeta {
        Zeta::One => Ok(T::one()),
        Zeta::Qoi => model.qoi(c, x),
    })
}

/// [`signed_psi`] with an arbitrary per-corner integrand.
pub fn signed_psi_with<T, F>(run: &CoupledRun<T>, mut zeta: F) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&MultiIndex, &[T]) -> Result<T>,
{
    let mut out = Vec::with_capacity(run.len());
    for (i, x) in run.particles.iter().enumerate() {
        let omega = run.coupling_weights(i);
        let mut acc = T::zero();
        for (c, w) in run.corners.iter().zip(&omega) {
            acc += c.sign_as::<T>() * *w * zeta(&c.index, x)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `F^N(psi) = Z^N * mean(psi)`.
pub fn estimate_f<T: Scalar>(run: &CoupledRun<T>, psi: &[T]) -> f64 {
    let mean = psi.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / psi.len() as f64;
    run.log_z.exp() * mean
}

#[cfg(test)]
mod tests;
