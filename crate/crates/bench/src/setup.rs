//! Builds models, sampler settings and index sets from a configuration.

use std::fs::File;

use mismc::models::{self, Diagonal, LogGaussianConfig, Model};
use mismc::multiindex::{tensor_product_levels, total_degree_level, weights_from_rates};
use mismc::smc::{KernelChoice, MutationConfig, Resampling};
use mismc::{IndexSet, MultiIndex, SmcConfig, TemperingSchedule};

use crate::config::{EstimatorKind, ExperimentConfig, KernelName, ModelKind, ResamplingName};
use crate::error::{BenchError, Result};

/// A configured model behind a trait object.
pub struct LoadedModel {
    pub kind: ModelKind,
    inner: Box<dyn Model<f64>>,
}

impl LoadedModel {
    pub fn model(&self) -> &dyn Model<f64> {
        self.inner.as_ref()
    }

    /// Single-axis view: the model itself when one-dimensional, otherwise
    /// the diagonal `l -> (l, l)`.
    pub fn hierarchy(&self) -> Hierarchy<'_> {
        if self.kind.dim() == 1 {
            Hierarchy::Native(self.model())
        } else {
            Hierarchy::Diagonal(Diagonal::new(self.model()))
        }
    }
}

/// A model seen either on its own axes or along the diagonal.
pub enum Hierarchy<'a> {
    Native(&'a dyn Model<f64>),
    Diagonal(Diagonal<&'a dyn Model<f64>>),
}

impl<'a> Hierarchy<'a> {
    pub fn model(&self) -> &(dyn Model<f64> + 'a) {
        match self {
            Hierarchy::Native(m) => *m,
            Hierarchy::Diagonal(d) => d,
        }
    }

    /// Maps an index of this view to the model's own axes.
    pub fn lift(&self, alpha: &MultiIndex) -> MultiIndex {
        match self {
            Hierarchy::Native(_) => alpha.clone(),
            Hierarchy::Diagonal(d) => MultiIndex::new(vec![alpha.get(0); d.inner().dim()]),
        }
    }
}

pub fn load_model(cfg: &ExperimentConfig) -> Result<LoadedModel> {
    let m = &cfg.model;
    let open = |path: &std::path::Path| {
        File::open(path).map_err(|e| BenchError::config(format!("cannot open dataset {}: {e}", path.display())))
    };
    let inner: Box<dyn Model<f64>> = match m.kind {
        ModelKind::Toy1d => {
            let mut model = match &m.data {
                Some(p) => models::Toy1D::new(models::read_observations(open(p)?, 1)?, m.noise_sd.unwrap_or(0.2))?,
                None => match m.noise_sd {
                    Some(sd) => models::Toy1D::new(models::Toy1D::<f64>::with_default_data().observations().clone(), sd)?,
                    None => models::Toy1D::with_default_data(),
                },
            };
            if let Some(z) = m.z_min {
                model = model.with_z_min(z);
            }
            Box::new(model)
        }
        ModelKind::Elliptic2d => {
            let mut model = match &m.data {
                Some(p) => models::Elliptic2D::new(models::read_observations(open(p)?, 2)?, m.noise_sd.unwrap_or(0.5))?,
                None => match m.noise_sd {
                    Some(sd) => {
                        models::Elliptic2D::new(models::Elliptic2D::<f64>::with_default_data().observations().clone(), sd)?
                    }
                    None => models::Elliptic2D::with_default_data(),
                },
            };
            if let Some(z) = m.z_min {
                model = model.with_z_min(z);
            }
            Box::new(model)
        }
        ModelKind::Lgc | ModelKind::Lgp => {
            let mut lg = if m.kind == ModelKind::Lgc {
                LogGaussianConfig::cox()
            } else {
                LogGaussianConfig::density()
            };
            if let Some(e) = m.max_effective {
                lg.max_effective = e;
            }
            let mut model = match &m.data {
                Some(p) => models::LogGaussian::new(lg, models::read_points(open(p)?)?)?,
                None if m.max_effective.is_some() => {
                    let pts = models::LogGaussian::<f64>::with_default_data(lg.clone()).point_pattern();
                    models::LogGaussian::new(lg, pts)?
                }
                None => models::LogGaussian::with_default_data(lg),
            };
            if let Some(z) = m.z_min {
                model = model.with_z_min(z);
            }
            Box::new(model)
        }
    };
    Ok(LoadedModel { kind: m.kind, inner })
}

pub fn smc_config(cfg: &ExperimentConfig) -> Result<SmcConfig> {
    let s = &cfg.smc;
    Ok(SmcConfig {
        schedule: TemperingSchedule::uniform(s.stages)?,
        mutation: MutationConfig {
            kernel: match s.kernel {
                KernelName::Auto => KernelChoice::Auto,
                KernelName::RandomWalk => KernelChoice::RandomWalk,
                KernelName::Pcn => KernelChoice::Pcn,
            },
            steps: s.mh_steps,
            initial_scale: s.initial_scale,
            adapt: s.adapt,
        },
        resampling: match s.resampling {
            ResamplingName::Multinomial => Resampling::Multinomial,
            ResamplingName::Systematic => Resampling::Systematic,
        },
        adaptive_ess: s.ess_threshold,
    })
}

/// Index set of an estimator at tolerance `eps`, in the coordinates of the
/// view the estimator runs on, clipped to `max_level`.
///
/// Single-level SMC gets the one-element set holding its level.
pub fn index_set(kind: EstimatorKind, eps: f64, bias_rates: &[f64], max_level: &[u32]) -> Result<IndexSet> {
    let clip = |levels: Vec<u32>, cap: &[u32]| -> Vec<u32> {
        levels
            .iter()
            .zip(cap)
            .map(|(&l, &c)| {
                if l > c {
                    log::warn!("{kind} at eps {eps:e}: level {l} clipped to {c}");
                }
                l.min(c)
            })
            .collect()
    };
    if !kind.is_multi_index() {
        // the diagonal hierarchy converges at the slowest axis rate
        let s = bias_rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let cap = max_level.iter().copied().min().unwrap_or(0);
        let l = clip(tensor_product_levels(eps, &[s]), &[cap])[0];
        return Ok(if kind == EstimatorKind::Smc {
            IndexSet::explicit(vec![MultiIndex::new(vec![l])])?
        } else {
            IndexSet::tensor_product(&[l])
        });
    }
    if kind.is_total_degree() {
        let delta = weights_from_rates(bias_rates);
        let level = total_degree_level(eps, bias_rates, &delta);
        let full = IndexSet::total_degree(level, &delta)?;
        let clipped: Vec<MultiIndex> = full
            .iter()
            .filter(|a| a.entries().iter().zip(max_level).all(|(x, c)| x <= c))
            .cloned()
            .collect();
        if clipped.len() < full.len() {
            log::warn!("{kind} at eps {eps:e}: total-degree set clipped to the per-axis maximum {max_level:?}");
        }
        return Ok(IndexSet::explicit(clipped)?);
    }
    Ok(IndexSet::tensor_product(&clip(tensor_product_levels(eps, bias_rates), max_level)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_set_is_one_index() {
        let s = index_set(EstimatorKind::Smc, 0.01, &[2.0], &[8]).unwrap();
        assert_eq!(s.members(), &[MultiIndex::new(vec![4])]);
        let ml = index_set(EstimatorKind::MlsmcRe, 0.01, &[2.0], &[8]).unwrap();
        assert_eq!(ml.len(), 5);
    }

    #[test]
    fn sets_are_clipped() {
        let s = index_set(EstimatorKind::MismcReTp, 1e-9, &[2.0, 2.0], &[3, 2]).unwrap();
        assert_eq!(s.max_index(), MultiIndex::new(vec![3, 2]));
        let td = index_set(EstimatorKind::MismcReTd, 1e-9, &[2.0, 2.0], &[3, 3]).unwrap();
        assert!(td.iter().all(|a| a.get(0) <= 3 && a.get(1) <= 3));
        assert!(td.is_downward_closed());
    }

    #[test]
    fn total_degree_is_smaller_than_tensor_product() {
        let tp = index_set(EstimatorKind::MismcReTp, 1e-3, &[2.0, 2.0], &[10, 10]).unwrap();
        let td = index_set(EstimatorKind::MismcReTd, 1e-3, &[2.0, 2.0], &[10, 10]).unwrap();
        assert!(td.len() < tp.len());
    }
}
