//! Reference values for complexity studies.

use mismc::quadrature::prior_integrals;
use mismc::rng::child_seed;
use mismc::{Model, MultiIndex};

use crate::complexity::{plan, run_estimator, run_pilot};
use crate::config::{EstimatorKind, ExperimentConfig, ReferenceMethod};
use crate::error::{BenchError, Result};
use crate::setup::{index_set, smc_config, LoadedModel};

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub method: &'static str,
    /// Model index of the quadrature, or the finest index of the multilevel run.
    pub alpha: MultiIndex,
    /// Tolerance of the multilevel run; zero for quadrature.
    pub eps: f64,
}

/// Finest model index any configured estimator reaches on the ladder.
pub fn study_max_index(cfg: &ExperimentConfig, loaded: &LoadedModel) -> Result<MultiIndex> {
    let dim = loaded.kind.dim();
    let hierarchy = loaded.hierarchy();
    let mut top = vec![0u32; dim];
    match &cfg.complexity {
        Some(c) => {
            let eps = *c.eps.last().expect("validated non-empty ladder");
            for &kind in &c.estimators {
                let set = index_set(kind, eps, &cfg.bias_rates(), &cfg.max_level())?;
                for a in set.iter() {
                    let lifted = if kind.is_multi_index() { a.clone() } else { hierarchy.lift(a) };
                    for (t, &v) in top.iter_mut().zip(lifted.entries()) {
                        *t = (*t).max(v);
                    }
                }
            }
        }
        None => top = cfg.max_level(),
    }
    Ok(MultiIndex::new(top))
}

/// Posterior mean of the quantity of interest by tensor Gauss-Legendre
/// quadrature at `alpha` (uniform box priors only).
pub fn quadrature_reference(model: &dyn Model<f64>, alpha: &MultiIndex, nodes: usize) -> Result<f64> {
    Ok(prior_integrals(model, alpha, nodes)?.posterior_mean())
}

/// The configured reference: a fixed value, quadrature `levels_above` levels
/// beyond the study's finest index, or a multilevel ratio estimate at
/// `eps_factor` times the finest tolerance on an independent seed, averaged
/// over `runs` independent runs.
pub fn compute_reference(cfg: &ExperimentConfig, loaded: &LoadedModel) -> Result<Reference> {
    let top = study_max_index(cfg, loaded)?;
    if let Some(v) = cfg.reference.value {
        return Ok(Reference {
            value: v,
            method: "fixed",
            alpha: top,
            eps: 0.0,
        });
    }
    let above: Vec<u32> = top.entries().iter().map(|t| t + cfg.reference.levels_above).collect();
    match cfg.reference_method() {
        ReferenceMethod::Quadrature => {
            let alpha = MultiIndex::new(above);
            log::info!("quadrature reference at {alpha} with {} nodes per axis", cfg.reference.nodes);
            let value = quadrature_reference(loaded.model(), &alpha, cfg.reference.nodes)?;
            Ok(Reference {
                value,
                method: "quadrature",
                alpha,
                eps: 0.0,
            })
        }
        ReferenceMethod::Mlsmc => {
            let c = cfg
                .complexity
                .as_ref()
                .ok_or_else(|| BenchError::config("a multilevel reference needs a [complexity] ladder"))?;
            let eps = c.eps.last().expect("validated non-empty ladder") * cfg.reference.eps_factor;
            let config = smc_config(cfg)?;
            let hierarchy = loaded.hierarchy();
            let model = hierarchy.model();
            let cap = vec![above.iter().copied().min().unwrap_or(0)];
            let set = index_set(EstimatorKind::MlsmcRe, eps, &[min_rate(&cfg.bias_rates())], &cap)?;
            let seed = child_seed(cfg.seed, "reference");
            log::info!("multilevel reference at eps {eps:e} on levels up to {}", set.max_index());
            let pilot = run_pilot(EstimatorKind::MlsmcRe, model, &set, c.pilot_samples, &config, seed)?;
            let plan = plan(EstimatorKind::MlsmcRe, model, &set, eps, &pilot, cfg.reference.cap, &config)?;
            let runs = cfg.reference.runs;
            let mut total = 0.0;
            for r in 0..runs {
                let seed = if r == 0 { seed } else { child_seed(seed, &format!("run/{r}")) };
                let report = run_estimator(EstimatorKind::MlsmcRe, model, &set, &plan, &config, seed)?;
                log::info!("multilevel reference run {} of {runs}: {}", r + 1, report.estimate);
                total += report.estimate;
            }
            Ok(Reference {
                value: total / runs as f64,
                method: "mlsmc",
                alpha: hierarchy.lift(&set.max_index()),
                eps,
            })
        }
    }
}

fn min_rate(rates: &[f64]) -> f64 {
    rates.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::load_model;

    #[test]
    fn flat_likelihood_gives_the_prior_moment() {
        // noise this large makes the likelihood constant to rounding
        let obs = mismc::models::Toy1D::<f64>::with_default_data().observations().clone();
        let flat = mismc::models::Toy1D::<f64>::new(obs, 1e9).unwrap();
        let v = quadrature_reference(&flat, &MultiIndex::zeros(1), 8).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn toy_reference_is_self_converged() {
        let cfg = ExperimentConfig::from_toml("[model]\nkind = \"toy1d\"\n").unwrap();
        let loaded = load_model(&cfg).unwrap();
        let alpha = MultiIndex::new(vec![11]);
        let a = quadrature_reference(loaded.model(), &alpha, 48).unwrap();
        let b = quadrature_reference(loaded.model(), &alpha, 96).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn log_gaussian_quadrature_is_refused() {
        let cfg = ExperimentConfig::from_toml("[model]\nkind = \"lgc\"\n").unwrap();
        let loaded = load_model(&cfg).unwrap();
        let e = quadrature_reference(loaded.model(), &MultiIndex::zeros(2), 4).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
