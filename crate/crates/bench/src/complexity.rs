//! MSE-versus-cost studies over a tolerance ladder.

use std::collections::BTreeMap;
use std::path::Path;

use mismc::estimator::{particle_cost, pilot_variances};
use mismc::ratefit::{least_squares, LinearFit};
use mismc::rng::{child_seed, stream};
use mismc::{
    allocate_samples, mismc_ratio_estimate, mismc_sn_estimate, run_smc, single_level_smc_estimate, AllocationPlan,
    EstimateReport, IndexSet, Model, MultiIndex, SmcConfig,
};
use rayon::prelude::*;

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::output::{num, write_text, Table};
use crate::plot::{Plot, Scale, Series};
use crate::setup::{index_set, smc_config, LoadedModel};

/// Variance input for the allocation.
#[derive(Clone, Debug)]
pub enum Pilot {
    /// Posterior variance of the quantity of interest, for single-level SMC.
    Posterior(f64),
    /// Per-index `V_alpha` for the multi-index estimators.
    Increments(BTreeMap<MultiIndex, f64>),
}

/// Pilot run for `kind` on the set it uses at the finest tolerance.
pub fn run_pilot(
    kind: EstimatorKind,
    model: &dyn Model<f64>,
    finest: &IndexSet,
    pilot_n: usize,
    config: &SmcConfig,
    seed: u64,
) -> Result<Pilot> {
    let key = kind.label();
    if kind == EstimatorKind::Smc {
        let alpha = MultiIndex::zeros(model.dim());
        let mut rng = stream(seed, &format!("{key}/pilot/{alpha}"));
        let run = run_smc(model, &alpha, pilot_n.max(2), config, &mut rng)?;
        let q: Vec<f64> = run
            .particles
            .iter()
            .map(|x| model.qoi(&alpha, x))
            .collect::<mismc::Result<_>>()?;
        let mean = q.iter().sum::<f64>() / q.len() as f64;
        let var = q.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (q.len() - 1) as f64;
        return Ok(Pilot::Posterior(var.max(f64::MIN_POSITIVE)));
    }
    Ok(Pilot::Increments(pilot_variances(model, finest, pilot_n, config, seed, key)?))
}

/// Particle allocation of `kind` on `set` at tolerance `eps`.
pub fn plan(
    kind: EstimatorKind,
    model: &dyn Model<f64>,
    set: &IndexSet,
    eps: f64,
    pilot: &Pilot,
    cap: Option<usize>,
    config: &SmcConfig,
) -> Result<AllocationPlan> {
    let costs: BTreeMap<MultiIndex, f64> = set
        .iter()
        .map(|a| (a.clone(), particle_cost(model, a, config)))
        .collect();
    let variances: BTreeMap<MultiIndex, f64> = match pilot {
        Pilot::Posterior(v) => set.iter().map(|a| (a.clone(), *v)).collect(),
        Pilot::Increments(v) => set
            .iter()
            .map(|a| {
                v.get(a)
                    .map(|&x| (a.clone(), x))
                    .ok_or_else(|| BenchError::config(format!("{kind}: no pilot variance for {a}")))
            })
            .collect::<Result<_>>()?,
    };
    Ok(allocate_samples(&variances, &costs, eps, cap)?)
}

/// Runs one replicate of `kind` with the given allocation.
pub fn run_estimator(
    kind: EstimatorKind,
    model: &dyn Model<f64>,
    set: &IndexSet,
    plan: &AllocationPlan,
    config: &SmcConfig,
    seed: u64,
) -> Result<EstimateReport> {
    let key = kind.label();
    let report = if kind == EstimatorKind::Smc {
        let alpha = &set.members()[0];
        let n = plan.get(alpha).unwrap_or(1);
        single_level_smc_estimate(model, alpha, n, config, seed, key)?
    } else if kind.is_ratio() {
        mismc_ratio_estimate(model, set, plan, config, seed, key)?
    } else {
        mismc_sn_estimate(model, set, plan, config, seed, key)?
    };
    Ok(report)
}

/// One replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityRow {
    pub estimator: EstimatorKind,
    pub eps: f64,
    pub repeat: usize,
    pub estimate: f64,
    pub reference: f64,
    pub sq_error: f64,
    pub cost_units: f64,
    pub seed: u64,
}

/// Aggregate over the replicates of one tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderPoint {
    pub eps: f64,
    pub mse: f64,
    /// Standard error of the MSE over replicates.
    pub mse_se: f64,
    pub mean_cost: f64,
    pub indices: usize,
    pub max_index: MultiIndex,
    pub total_particles: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub points: Vec<LadderPoint>,
    /// Least-squares slope of `log MSE` on `log cost`, when at least two
    /// ladder points have a positive MSE.
    pub slope: Option<LinearFit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityResult {
    pub reference: f64,
    pub rows: Vec<ComplexityRow>,
    pub summaries: Vec<EstimatorSummary>,
}

pub const COMPLEXITY_HEADER: [&str; 8] = [
    "estimator", "eps", "repeat", "estimate", "reference", "sq_error", "cost_units", "seed",
];

fn rows_table(rows: &[ComplexityRow]) -> Table {
    let mut t = Table::new(&COMPLEXITY_HEADER);
    for r in rows {
        t.push(vec![
            r.estimator.label().into(),
            num(r.eps),
            r.repeat.to_string(),
            num(r.estimate),
            num(r.reference),
            num(r.sq_error),
            num(r.cost_units),
            r.seed.to_string(),
        ]);
    }
    t
}

fn summary_table(summaries: &[EstimatorSummary]) -> Table {
    let mut t = Table::new(&[
        "estimator", "eps", "mse", "mse_se", "mean_cost", "indices", "max_index", "particles", "slope",
    ]);
    for s in summaries {
        let slope = s.slope.as_ref().map(|f| num(f.slope)).unwrap_or_default();
        for p in &s.points {
            t.push(vec![
                s.estimator.label().into(),
                num(p.eps),
                num(p.mse),
                num(p.mse_se),
                num(p.mean_cost),
                p.indices.to_string(),
                p.max_index.to_string(),
                p.total_particles.to_string(),
                slope.clone(),
            ]);
        }
    }
    t
}

fn fit_slope(points: &[LadderPoint]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.mse > 0.0 && p.mean_cost > 0.0)
        .map(|p| (p.mean_cost.ln(), p.mse.ln()))
        .collect();
    (pts.len() >= 2).then(|| least_squares(&pts))
}

/// Log-log plot of MSE against cost, one series per estimator plus fits.
pub fn complexity_plot(title: &str, summaries: &[EstimatorSummary]) -> Plot {
    let mut series = Vec::new();
    for s in summaries {
        let pts: Vec<(f64, f64)> = s.points.iter().map(|p| (p.mean_cost, p.mse)).collect();
        series.push(Series::data(s.estimator.label(), pts));
        if let Some(f) = &s.slope {
            let xs: Vec<f64> = s.points.iter().map(|p| p.mean_cost).filter(|c| *c > 0.0).collect();
            let (lo, hi) = xs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let line = |c: f64| (c, (f.intercept + f.slope * c.ln()).exp());
            series.push(Series::guide(
                format!("{} fit {:.3}", s.estimator.label(), f.slope),
                vec![line(lo), line(hi)],
            ));
        }
    }
    Plot {
        title: title.into(),
        x_label: "cost (model units)".into(),
        y_label: "MSE".into(),
        x_scale: Scale::Log10,
        y_scale: Scale::Log10,
        series,
    }
}

/// Runs every configured estimator over the tolerance ladder against a
/// fixed reference value. With `out_dir`, the replicate table
/// `<model>_complexity.csv`, the ladder summary `<model>_complexity_summary.csv`
/// and its plot are rewritten after each tolerance.
pub fn run_complexity_study(
    cfg: &ExperimentConfig,
    loaded: &LoadedModel,
    reference: f64,
    out_dir: Option<&Path>,
) -> Result<ComplexityResult> {
    let section = cfg
        .complexity
        .as_ref()
        .ok_or_else(|| BenchError::config("the configuration has no [complexity] table"))?;
    let config = smc_config(cfg)?;
    let rates = cfg.bias_rates();
    let max_level = cfg.max_level();
    let repeats = cfg.repeats();
    let stem = format!("{}_complexity", loaded.kind.id());
    let hierarchy = loaded.hierarchy();

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &kind in &section.estimators {
        let model: &dyn Model<f64> = if kind.is_multi_index() {
            loaded.model()
        } else {
            hierarchy.model()
        };
        let sets: Vec<IndexSet> = section
            .eps
            .iter()
            .map(|&e| index_set(kind, e, &rates, &max_level))
            .collect::<Result<_>>()?;
        let finest = sets.last().expect("validated non-empty ladder");
        let pilot = run_pilot(kind, model, finest, section.pilot_samples, &config, cfg.seed)?;
        let mut points = Vec::new();
        for (i, (&eps, set)) in section.eps.iter().zip(&sets).enumerate() {
            let plan = plan(kind, model, set, eps, &pilot, section.cap, &config)?;
            log::info!(
                "{kind} eps {eps:e}: {} indices up to {}, {} particles",
                set.len(),
                set.max_index(),
                plan.samples.values().sum::<usize>()
            );
            let reps: Vec<ComplexityRow> = (0..repeats)
                .into_par_iter()
                .map(|r| {
                    let seed = child_seed(cfg.seed, &format!("{kind}/eps{i}/repeat{r}"));
                    let rep = run_estimator(kind, model, set, &plan, &config, seed)?;
                    Ok(ComplexityRow {
                        estimator: kind,
                        eps,
                        repeat: r,
                        estimate: rep.estimate,
                        reference,
                        sq_error: (rep.estimate - reference).powi(2),
                        cost_units: rep.total_cost,
                        seed,
                    })
                })
                .collect::<Result<_>>()?;
            let m = reps.len() as f64;
            let mse = reps.iter().map(|r| r.sq_error).sum::<f64>() / m;
            let mse_var = reps.iter().map(|r| (r.sq_error - mse).powi(2)).sum::<f64>() / (m - 1.0);
            points.push(LadderPoint {
                eps,
                mse,
                mse_se: (mse_var / m).sqrt(),
                mean_cost: reps.iter().map(|r| r.cost_units).sum::<f64>() / m,
                indices: set.len(),
                max_index: set.max_index(),
                total_particles: plan.samples.values().sum(),
            });
            rows.extend(reps);
            if let Some(dir) = out_dir {
                let mut partial = summaries.clone();
                partial.push(EstimatorSummary {
                    estimator: kind,
                    slope: fit_slope(&points),
                    points: points.clone(),
                });
                write_outputs(dir, &stem, &rows, &partial)?;
            }
        }
        summaries.push(EstimatorSummary {
            estimator: kind,
            slope: fit_slope(&points),
            points,
        });
    }
    if let Some(dir) = out_dir {
        write_outputs(dir, &stem, &rows, &summaries)?;
    }
    Ok(ComplexityResult {
        reference,
        rows,
        summaries,
    })
}

fn write_outputs(dir: &Path, stem: &str, rows: &[ComplexityRow], summaries: &[EstimatorSummary]) -> Result<()> {
    rows_table(rows).write(dir, stem)?;
    let summary_stem = format!("{stem}_summary");
    summary_table(summaries).write(dir, &summary_stem)?;
    write_text(
        dir,
        &format!("{summary_stem}.svg"),
        &complexity_plot(&format!("{stem}: MSE vs cost"), summaries).to_svg(),
    )?;
    Ok(())
}
