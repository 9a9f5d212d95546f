//! Rate studies: increment statistics along index lines and their log-linear fits.

use std::path::Path;

use mismc::ratefit::{
    estimate_increment_stats_smc, fit_cost_rate, fit_rates, increment_samples, IncrementStat, LinearFit, Statistic,
};
use mismc::rng::stream;
use mismc::{Model, MultiIndex, Zeta};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, LineSpec, RateMode, ZetaName};
use crate::error::{BenchError, Result};
use crate::output::{num, write_text, Table};
use crate::plot::{Plot, Scale, Series};
use crate::setup::{smc_config, LoadedModel};

fn zeta_of(z: ZetaName) -> Zeta {
    match z {
        ZetaName::One => Zeta::One,
        ZetaName::Qoi => Zeta::Qoi,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinePoint {
    pub line: String,
    pub zeta: ZetaName,
    pub stat: IncrementStat,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitKind {
    Mean,
    SecondMoment,
    Cost,
}

impl FitKind {
    pub fn id(&self) -> &'static str {
        match self {
            FitKind::Mean => "mean",
            FitKind::SecondMoment => "second_moment",
            FitKind::Cost => "cost",
        }
    }
}

/// A fitted line, or the reason it could not be fitted.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFit {
    pub line: String,
    pub direction: Vec<u32>,
    /// `None` for the cost fit.
    pub zeta: Option<ZetaName>,
    pub kind: FitKind,
    pub fit: std::result::Result<LinearFit, String>,
    pub dropped: Vec<MultiIndex>,
}

impl LineFit {
    /// Decay rate `-slope` (growth rate for the cost fit).
    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| match self.kind {
            FitKind::Cost => f.slope,
            _ => -f.slope,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateStudy {
    pub points: Vec<LinePoint>,
    pub fits: Vec<LineFit>,
}

impl RateStudy {
    pub fn fit(&self, line: &str, zeta: ZetaName, kind: FitKind) -> Option<&LineFit> {
        self.fits
            .iter()
            .find(|f| f.line == line && f.kind == kind && f.zeta == Some(zeta))
    }
}

/// Statistics at every index of `line` for every configured `zeta`.
fn line_statistics(
    cfg: &ExperimentConfig,
    model: &dyn Model<f64>,
    line: &LineSpec,
) -> Result<Vec<LinePoint>> {
    let section = cfg.rates.clone().unwrap_or_default();
    let zetas: Vec<Zeta> = section.zeta.iter().map(|&z| zeta_of(z)).collect();
    let indices = line.indices();
    let mut out = Vec::new();
    match section.mode {
        RateMode::Prior => {
            let tasks: Vec<(usize, usize)> = (0..indices.len())
                .flat_map(|i| (0..section.batches).map(move |b| (i, b)))
                .collect();
            let batches: Vec<Vec<Vec<f64>>> = tasks
                .par_iter()
                .map(|&(i, b)| {
                    let alpha = &indices[i];
                    let mut rng = stream(cfg.seed, &format!("rates/{}/{alpha}/batch{b}", line.name));
                    increment_samples(model, alpha, section.samples, &zetas, &mut rng).map_err(BenchError::from)
                })
                .collect::<Result<_>>()?;
            for (i, alpha) in indices.iter().enumerate() {
                let chunk = &batches[i * section.batches..(i + 1) * section.batches];
                for (z, name) in section.zeta.iter().enumerate() {
                    let pooled: Vec<f64> = chunk.iter().flat_map(|b| b[z].iter().copied()).collect();
                    out.push(LinePoint {
                        line: line.name.clone(),
                        zeta: *name,
                        stat: IncrementStat::from_samples(alpha.clone(), &pooled)?,
                        cost: model.cost(alpha),
                    });
                }
            }
        }
        RateMode::Smc => {
            let config = smc_config(cfg)?;
            let tasks: Vec<(usize, usize)> = (0..indices.len())
                .flat_map(|i| (0..zetas.len()).map(move |z| (i, z)))
                .collect();
            let stats: Vec<IncrementStat> = tasks
                .par_iter()
                .map(|&(i, z)| {
                    let alpha = &indices[i];
                    let mut rng = stream(cfg.seed, &format!("rates-smc/{}/{alpha}/{}", line.name, section.zeta[z].id()));
                    estimate_increment_stats_smc(model, alpha, section.batches, section.samples, &config, zetas[z], &mut rng)
                        .map_err(BenchError::from)
                })
                .collect::<Result<_>>()?;
            for ((i, z), stat) in tasks.into_iter().zip(stats) {
                out.push(LinePoint {
                    line: line.name.clone(),
                    zeta: section.zeta[z],
                    stat,
                    cost: model.cost(&indices[i]),
                });
            }
        }
    }
    Ok(out)
}

fn fits_for_line(model: &dyn Model<f64>, line: &LineSpec, points: &[LinePoint], zetas: &[ZetaName]) -> Vec<LineFit> {
    let mut fits = Vec::new();
    for &z in zetas {
        let stats: Vec<IncrementStat> = points.iter().filter(|p| p.zeta == z).map(|p| p.stat.clone()).collect();
        for (kind, statistic) in [(FitKind::Mean, Statistic::Mean), (FitKind::SecondMoment, Statistic::SecondMoment)] {
            let (fit, dropped) = match fit_rates(&stats, &line.direction, statistic) {
                Ok(f) => (Ok(f.fit), f.dropped),
                Err(e) => {
                    log::warn!("line {} ({}, {}): {e}", line.name, z.id(), kind.id());
                    (Err(e.to_string()), Vec::new())
                }
            };
            fits.push(LineFit {
                line: line.name.clone(),
                direction: line.direction.clone(),
                zeta: Some(z),
                kind,
                fit,
                dropped,
            });
        }
    }
    fits.push(LineFit {
        line: line.name.clone(),
        direction: line.direction.clone(),
        zeta: None,
        kind: FitKind::Cost,
        fit: Ok(fit_cost_rate(model, &line.indices(), &line.direction)),
        dropped: Vec::new(),
    });
    fits
}

const POINT_HEADER: [&str; 11] = [
    "line",
    "alpha",
    "position",
    "zeta",
    "samples",
    "mean",
    "mean_se",
    "second_moment",
    "second_moment_se",
    "variance",
    "cost",
];

fn points_table(points: &[LinePoint], lines: &[LineSpec]) -> Table {
    let mut t = Table::new(&POINT_HEADER);
    for p in points {
        let dir = &lines.iter().find(|l| l.name == p.line).expect("point belongs to a line").direction;
        t.push(vec![
            p.line.clone(),
            p.stat.alpha.to_string(),
            num(mismc::ratefit::line_position(&p.stat.alpha, dir)),
            p.zeta.id().into(),
            p.stat.samples.to_string(),
            num(p.stat.mean),
            num(p.stat.mean_se),
            num(p.stat.second_moment),
            num(p.stat.second_moment_se),
            num(p.stat.variance),
            num(p.cost),
        ]);
    }
    t
}

fn fits_table(fits: &[LineFit]) -> Table {
    let mut t = Table::new(&[
        "line", "direction", "zeta", "statistic", "rate", "slope", "intercept", "residual_rms", "slope_se", "points",
        "dropped", "status",
    ]);
    for f in fits {
        let dir = f.direction.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
        let dropped = f.dropped.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
        let zeta = f.zeta.map(|z| z.id()).unwrap_or("").to_string();
        let mut row = vec![f.line.clone(), dir, zeta, f.kind.id().into()];
        match &f.fit {
            Ok(l) => row.extend([
                num(f.rate().expect("fit present")),
                num(l.slope),
                num(l.intercept),
                num(l.residual_rms),
                num(l.slope_se),
                l.points.to_string(),
                dropped,
                "ok".into(),
            ]),
            Err(e) => row.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "0".into(),
                dropped,
                e.clone(),
            ]),
        }
        t.push(row);
    }
    t
}

fn line_plot(title: &str, line: &LineSpec, points: &[LinePoint], fits: &[LineFit]) -> Plot {
    let mut series = Vec::new();
    for p_zeta in [ZetaName::One, ZetaName::Qoi] {
        let pts: Vec<&LinePoint> = points.iter().filter(|p| p.zeta == p_zeta).collect();
        if pts.is_empty() {
            continue;
        }
        let pos = |p: &LinePoint| mismc::ratefit::line_position(&p.stat.alpha, &line.direction);
        let mean: Vec<(f64, f64)> = pts.iter().map(|p| (pos(p), p.stat.mean.abs())).collect();
        let m2: Vec<(f64, f64)> = pts.iter().map(|p| (pos(p), p.stat.second_moment)).collect();
        let (lo, hi) = mean
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| (a.min(x), b.max(x)));
        series.push(Series::data(format!("|E D| ({})", p_zeta.id()), mean));
        series.push(Series::data(format!("E D^2 ({})", p_zeta.id()), m2));
        for f in fits.iter().filter(|f| f.zeta == Some(p_zeta)) {
            if let Ok(l) = &f.fit {
                let y = |x: f64| 2f64.powf(l.intercept + l.slope * x);
                series.push(Series::guide(
                    format!("{} rate {:.2} ({})", f.kind.id(), -l.slope, p_zeta.id()),
                    vec![(lo, y(lo)), (hi, y(hi))],
                ));
            }
        }
    }
    Plot {
        title: title.into(),
        x_label: "position along the line".into(),
        y_label: "increment statistic".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log2,
        series,
    }
}

/// Runs the configured lines (default: each axis and the diagonal). With
/// `out_dir`, writes `<model>_rates_points.csv`, `<model>_rates_fits.csv`
/// and per line a plot with its CSV twin.
pub fn run_rate_study(cfg: &ExperimentConfig, loaded: &LoadedModel, out_dir: Option<&Path>) -> Result<RateStudy> {
    let section = cfg.rates.clone().unwrap_or_default();
    let lines = section.lines_for(loaded.kind);
    let model = loaded.model();
    let mut points = Vec::new();
    let mut fits = Vec::new();
    for line in &lines {
        log::info!("rate line {}: {} indices from {:?}", line.name, line.points, line.start);
        let p = line_statistics(cfg, model, line)?;
        let f = fits_for_line(model, line, &p, &section.zeta);
        if let Some(dir) = out_dir {
            let stem = format!("{}_rates_{}", loaded.kind.id(), line.name);
            points_table(&p, &lines).write(dir, &stem)?;
            let title = format!("{} rates along {}", loaded.kind.id(), line.name);
            write_text(dir, &format!("{stem}.svg"), &line_plot(&title, line, &p, &f).to_svg())?;
        }
        points.extend(p);
        fits.extend(f);
    }
    if let Some(dir) = out_dir {
        let id = loaded.kind.id();
        points_table(&points, &lines).write(dir, &format!("{id}_rates_points"))?;
        fits_table(&fits).write(dir, &format!("{id}_rates_fits"))?;
    }
    Ok(RateStudy { points, fits })
}
