//! Multi-index estimators assembled from independent coupled SMC runs, and
//! variance-optimal sample allocation.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::multiindex::{IndexSet, MultiIndex};
use crate::rng;
use crate::scalar::Scalar;
use crate::smc::{estimate_f, run_coupled_smc, run_smc, signed_psi, CoupledRun, SmcConfig, Zeta};

/// Particle counts per index.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationPlan {
    pub epsilon: f64,
    pub variances: BTreeMap<MultiIndex, f64>,
    pub costs: BTreeMap<MultiIndex, f64>,
    /// `eps^-2 (sum sqrt(V C)) sqrt(V / C)` before rounding.
    pub raw: BTreeMap<MultiIndex, f64>,
    pub samples: BTreeMap<MultiIndex, usize>,
}

impl AllocationPlan {
    pub fn get(&self, alpha: &MultiIndex) -> Option<usize> {
        self.samples.get(alpha).copied()
    }

    /// `sum N_alpha C_alpha`.
    pub fn cost(&self) -> f64 {
        self.samples.iter().map(|(a, &n)| n as f64 * self.costs[a]).sum()
    }

    /// `sum V_alpha / N_alpha`.
    pub fn variance(&self) -> f64 {
        self.samples.iter().map(|(a, &n)| self.variances[a] / n as f64).sum()
    }
}

/// `N_alpha = ceil(1 + eps^-2 (sum_a' sqrt(V_a' C_a')) sqrt(V_alpha / C_alpha))`,
/// truncated to `cap` when given.
pub fn allocate_samples(
    variances: &BTreeMap<MultiIndex, f64>,
    costs: &BTreeMap<MultiIndex, f64>,
    epsilon: f64,
    cap: Option<usize>,
) -> Result<AllocationPlan> {
    if variances.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut total = 0.0;
    for (a, &v) in variances {
        let c = *costs
            .get(a)
            .ok_or_else(|| Error::InvalidArgument(format!("no cost for index {a}")))?;
        if !(v > 0.0) || !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("V and C must be positive at {a}: V={v}, C={c}")));
        }
        total += (v * c).sqrt();
    }
    let mut raw = BTreeMap::new();
    let mut samples = BTreeMap::new();
    for (a, &v) in variances {
        let r = total * (v / costs[a]).sqrt() / (epsilon * epsilon);
        let mut n = (1.0 + r).ceil().min(usize::MAX as f64 / 2.0) as usize;
        if let Some(cap) = cap {
            n = n.min(cap);
        }
        raw.insert(a.clone(), r);
        samples.insert(a.clone(), n.max(1));
    }
    Ok(AllocationPlan {
        epsilon,
        variances: variances.clone(),
        costs: costs.iter().filter(|(a, _)| variances.contains_key(a)).map(|(a, &c)| (a.clone(), c)).collect(),
        raw,
        samples,
    })
}

/// Cost of one particle at `alpha`: model cost times likelihood evaluations
/// per particle over all stages and MH steps.
pub fn particle_cost<T: Scalar, M: Model<T> + ?Sized>(model: &M, alpha: &MultiIndex, config: &SmcConfig) -> f64 {
    model.cost(alpha) * config.evaluations_per_particle()
}

/// Pilot estimate of `V_alpha` for every index: one coupled run with
/// `pilot_n` particles, `V = max over zeta in {phi, 1} of Z^2 mean(psi_zeta^2)`.
///
/// When the set contains the zero index the values are divided by the square
/// of its evidence estimate, so `V` is on the scale of the normalized ratio.
pub fn pilot_variances<T, M>(
    model: &M,
    set: &IndexSet,
    pilot_n: usize,
    config: &SmcConfig,
    master_seed: u64,
    key: &str,
) -> Result<BTreeMap<MultiIndex, f64>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    let out: Result<Vec<(MultiIndex, f64, f64)>> = set
        .members()
        .par_iter()
        .map(|alpha| {
            let mut rng = rng::stream(master_seed, &format!("{key}/pilot/{alpha}"));
            let run = run_coupled_smc(model, alpha, pilot_n, config, &mut rng).map_err(|e| e.at(alpha))?;
            let z2 = (2.0 * run.log_z).exp();
            let mut v: f64 = 0.0;
            for zeta in [Zeta::Qoi, Zeta::One] {
                let psi = signed_psi(&run, model, zeta).map_err(|e| e.at(alpha))?;
                let m2 = psi.iter().map(|p| p.to_f64_lossy().powi(2)).sum::<f64>() / psi.len() as f64;
                v = v.max(z2 * m2);
            }
            Ok((alpha.clone(), v, run.log_z))
        })
        .collect();
    let out = out?;
    let scale = out
        .iter()
        .find(|(a, _, _)| a.is_zero())
        .map(|(_, _, log_z)| (-2.0 * log_z).exp())
        .filter(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(1.0);
    // an exactly vanishing pilot would give N = 1; keep a tiny floor
    Ok(out
        .into_iter()
        .map(|(a, v, _)| (a, (v * scale).max(f64::MIN_POSITIVE)))
        .collect())
}

/// Compensated (Kahan-Babuska) summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Per-index contribution to an estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexEstimate {
    pub alpha: MultiIndex,
    pub particles: usize,
    /// `F^N(psi_phi)` (ratio estimator) or the signed self-normalized
    /// increment (self-normalized estimator).
    pub f_phi: f64,
    /// `F^N(psi_1)`; unused by the self-normalized estimator.
    pub f_one: f64,
    pub log_z: f64,
    pub cost: f64,
}

/// Assembled estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub per_index: Vec<IndexEstimate>,
    pub numerator: f64,
    pub denominator: f64,
    pub clamped: bool,
    pub estimate: f64,
    pub total_cost: f64,
}

fn run_all<T, M, F>(
    model: &M,
    set: &IndexSet,
    plan: &AllocationPlan,
    config: &SmcConfig,
    master_seed: u64,
    key: &str,
    per_index: F,
) -> Result<Vec<IndexEstimate>>
where
    T: Scalar,
    M: Model<T> + ?Sized,
    F: Fn(&CoupledRun<T>) -> Result<(f64, f64)> + Sync,
{
    set.members()
        .par_iter()
        .map(|alpha| {
            let n = plan
                .get(alpha)
                .ok_or_else(|| Error::InvalidArgument(format!("allocation plan has no entry for {alpha}")))?;
            let mut rng = rng::stream(master_seed, &format!("{key}/{alpha}"));
            let run = run_coupled_smc(model, alpha, n, config, &mut rng).map_err(|e| e.at(alpha))?;
            let (f_phi, f_one) = per_index(&run).map_err(|e| e.at(alpha))?;
            Ok(IndexEstimate {
                alpha: alpha.clone(),
                particles: n,
                f_phi,
                f_one,
                log_z: run.log_z,
                cost: n as f64 * particle_cost(model, alpha, config),
            })
        })
        .collect()
}

/// Ratio estimator `sum F(psi_phi) / max(sum F(psi_1), z_min)`. The random
/// stream of index `alpha` is keyed by `"{key}/{alpha}"` under `master_seed`.
pub fn mismc_ratio_estimate<T, M>(
    model: &M,
    set: &IndexSet,
    plan: &AllocationPlan,
    config: &SmcConfig,
    master_seed: u64,
    key: &str,
) -> Result<EstimateReport>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    let per_index = run_all(model, set, plan, config, master_seed, key, |run| {
        let phi = signed_psi(run, model, Zeta::Qoi)?;
        let one = signed_psi(run, model, Zeta::One)?;
        Ok((estimate_f(run, &phi), estimate_f(run, &one)))
    })?;
    let numerator = compensated_sum(per_index.iter().map(|e| e.f_phi));
    let denominator = compensated_sum(per_index.iter().map(|e| e.f_one));
    let z_min = model.z_min();
    let clamped = denominator < z_min;
    let estimate = numerator / denominator.max(z_min);
    Ok(EstimateReport {
        total_cost: per_index.iter().map(|e| e.cost).sum(),
        per_index,
        numerator,
        denominator,
        clamped,
        estimate,
    })
}

/// Self-normalized baseline: per index, the signed sum over corners of the
/// coupling-weighted posterior means `sum_i omega_k phi_k / sum_i omega_k`.
pub fn mismc_sn_estimate<T, M>(
    model: &M,
    set: &IndexSet,
    plan: &AllocationPlan,
    config: &SmcConfig,
    master_seed: u64,
    key: &str,
) -> Result<EstimateReport>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    let per_index = run_all(model, set, plan, config, master_seed, key, |run| {
        let k = run.corners.len();
        let mut num = vec![0.0; k];
        let mut den = vec![0.0; k];
        for (i, x) in run.particles.iter().enumerate() {
            let omega = run.coupling_weights(i);
            for (c, corner) in run.corners.iter().enumerate() {
                let w = omega[c].to_f64_lossy();
                num[c] += w * model.qoi(&corner.index, x)?.to_f64_lossy();
                den[c] += w;
            }
        }
        let mut inc = Vec::with_capacity(k);
        for (c, corner) in run.corners.iter().enumerate() {
            if !(den[c] > 0.0) {
                return Err(Error::DegenerateCoupling {
                    alpha: run.alpha.clone(),
                    corner: corner.index.clone(),
                });
            }
            inc.push(corner.sign as f64 * num[c] / den[c]);
        }
        Ok((compensated_sum(inc), 0.0))
    })?;
    let numerator = compensated_sum(per_index.iter().map(|e| e.f_phi));
    Ok(EstimateReport {
        total_cost: per_index.iter().map(|e| e.cost).sum(),
        per_index,
        numerator,
        denominator: 1.0,
        clamped: false,
        estimate: numerator,
    })
}

/// Single-resolution SMC: mean of `phi_alpha` over the final particles.
pub fn single_level_smc_estimate<T, M>(
    model: &M,
    alpha: &MultiIndex,
    n: usize,
    config: &SmcConfig,
    master_seed: u64,
    key: &str,
) -> Result<EstimateReport>
where
    T: Scalar,
    M: Model<T> + ?Sized,
{
    let mut rng = rng::stream(master_seed, &format!("{key}/{alpha}"));
    let run = run_smc(model, alpha, n, config, &mut rng).map_err(|e| e.at(alpha))?;
    let mut q = Vec::with_capacity(n);
    for x in &run.particles {
        q.push(model.qoi(alpha, x).map_err(|e| e.at(alpha))?.to_f64_lossy());
    }
    let estimate = compensated_sum(q) / n as f64;
    let cost = n as f64 * particle_cost(model, alpha, config);
    Ok(EstimateReport {
        per_index: vec![IndexEstimate {
            alpha: alpha.clone(),
            particles: n,
            f_phi: estimate,
            f_one: 1.0,
            log_z: run.log_z,
            cost,
        }],
        numerator: estimate,
        denominator: 1.0,
        clamped: false,
        estimate,
        total_cost: cost,
    })
}
