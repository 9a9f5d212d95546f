//! Experiment configuration files.
//!
//! The format is TOML: a few top-level keys and one table per concern. Unknown
//! keys are rejected. See `docs/config.md` for the schema.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub smc: SmcSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    pub complexity: Option<ComplexitySection>,
    pub rates: Option<RatesSection>,
}

fn default_seed() -> u64 {
    20240611
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Toy1d,
    Elliptic2d,
    Lgc,
    Lgp,
}

impl ModelKind {
    pub fn id(&self) -> &'static str {
        match self {
            ModelKind::Toy1d => "toy1d",
            ModelKind::Elliptic2d => "elliptic2d",
            ModelKind::Lgc => "lgc",
            ModelKind::Lgp => "lgp",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "toy1d" => Some(ModelKind::Toy1d),
            "elliptic2d" => Some(ModelKind::Elliptic2d),
            "lgc" => Some(ModelKind::Lgc),
            "lgp" => Some(ModelKind::Lgp),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelKind::Toy1d => 1,
            _ => 2,
        }
    }

    /// Bias rate `s` per axis used to pick index sets.
    pub fn default_bias_rates(&self) -> Vec<f64> {
        match self {
            ModelKind::Toy1d => vec![2.0],
            ModelKind::Elliptic2d => vec![2.0, 2.0],
            ModelKind::Lgc | ModelKind::Lgp => vec![0.8, 0.8],
        }
    }

    /// Largest relative index per axis at desk scale: Toy1D level 8,
    /// Elliptic2D effective (6, 6), log-Gaussian effective (9, 9).
    pub fn default_max_level(&self) -> Vec<u32> {
        match self {
            ModelKind::Toy1d => vec![8],
            ModelKind::Elliptic2d => vec![4, 4],
            ModelKind::Lgc | ModelKind::Lgp => vec![4, 4],
        }
    }

    pub fn default_repeats(&self) -> usize {
        match self {
            ModelKind::Toy1d => 100,
            ModelKind::Elliptic2d => 50,
            ModelKind::Lgc | ModelKind::Lgp => 20,
        }
    }

    pub fn default_reference_method(&self) -> ReferenceMethod {
        match self {
            ModelKind::Toy1d | ModelKind::Elliptic2d => ReferenceMethod::Quadrature,
            ModelKind::Lgc | ModelKind::Lgp => ReferenceMethod::Mlsmc,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Dataset CSV replacing the shipped one.
    pub data: Option<PathBuf>,
    /// Observation noise (Toy1D and Elliptic2D).
    pub noise_sd: Option<f64>,
    /// Denominator clamp of the ratio estimator.
    pub z_min: Option<f64>,
    /// Largest effective resolution of the log-Gaussian coefficient table.
    pub max_effective: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelName {
    #[default]
    Auto,
    RandomWalk,
    Pcn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResamplingName {
    #[default]
    Multinomial,
    Systematic,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmcSection {
    /// Number of tempering stages `J`.
    pub stages: usize,
    pub mh_steps: usize,
    pub initial_scale: f64,
    pub adapt: bool,
    pub kernel: KernelName,
    pub resampling: ResamplingName,
    /// Switches to ESS-driven tempering with this target fraction.
    pub ess_threshold: Option<f64>,
}

impl Default for SmcSection {
    fn default() -> Self {
        SmcSection {
            stages: 10,
            mh_steps: 5,
            initial_scale: 0.5,
            adapt: true,
            kernel: KernelName::Auto,
            resampling: ResamplingName::Multinomial,
            ess_threshold: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMethod {
    Quadrature,
    Mlsmc,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSection {
    pub method: Option<ReferenceMethod>,
    /// Fixed reference value; skips the computation.
    pub value: Option<f64>,
    /// Quadrature resolution above the study's finest index, per axis.
    pub levels_above: u32,
    /// Gauss-Legendre nodes per parameter coordinate.
    pub nodes: usize,
    /// Tolerance of the multilevel reference relative to the finest study tolerance.
    pub eps_factor: f64,
    /// Particle cap of the multilevel reference.
    pub cap: Option<usize>,
    /// Independent multilevel runs averaged into the reference.
    pub runs: usize,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            method: None,
            value: None,
            levels_above: 3,
            nodes: 24,
            eps_factor: 0.25,
            cap: None,
            runs: 1,
        }
    }
}

/// Estimator families compared in complexity studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "SMC")]
    Smc,
    #[serde(rename = "MLSMC-SN")]
    MlsmcSn,
    #[serde(rename = "MLSMC-RE")]
    MlsmcRe,
    #[serde(rename = "MISMC-SN-TP")]
    MismcSnTp,
    #[serde(rename = "MISMC-SN-TD")]
    MismcSnTd,
    #[serde(rename = "MISMC-RE-TP")]
    MismcReTp,
    #[serde(rename = "MISMC-RE-TD")]
    MismcReTd,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::Smc,
        EstimatorKind::MlsmcSn,
        EstimatorKind::MlsmcRe,
        EstimatorKind::MismcSnTp,
        EstimatorKind::MismcSnTd,
        EstimatorKind::MismcReTp,
        EstimatorKind::MismcReTd,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Smc => "SMC",
            EstimatorKind::MlsmcSn => "MLSMC-SN",
            EstimatorKind::MlsmcRe => "MLSMC-RE",
            EstimatorKind::MismcSnTp => "MISMC-SN-TP",
            EstimatorKind::MismcSnTd => "MISMC-SN-TD",
            EstimatorKind::MismcReTp => "MISMC-RE-TP",
            EstimatorKind::MismcReTd => "MISMC-RE-TD",
        }
    }

    pub fn parse(s: &str) -> Option<EstimatorKind> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    /// Uses the ratio decomposition (as opposed to self-normalized increments).
    pub fn is_ratio(&self) -> bool {
        matches!(
            self,
            EstimatorKind::MlsmcRe | EstimatorKind::MismcReTp | EstimatorKind::MismcReTd
        )
    }

    /// Runs on all model axes rather than the diagonal hierarchy.
    pub fn is_multi_index(&self) -> bool {
        matches!(
            self,
            EstimatorKind::MismcSnTp | EstimatorKind::MismcSnTd | EstimatorKind::MismcReTp | EstimatorKind::MismcReTd
        )
    }

    pub fn is_total_degree(&self) -> bool {
        matches!(self, EstimatorKind::MismcSnTd | EstimatorKind::MismcReTd)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexitySection {
    pub estimators: Vec<EstimatorKind>,
    /// Tolerance ladder, strictly decreasing.
    pub eps: Vec<f64>,
    pub repeats: Option<usize>,
    #[serde(default = "default_pilot")]
    pub pilot_samples: usize,
    /// Upper bound on particles per index.
    pub cap: Option<usize>,
    pub bias_rates: Option<Vec<f64>>,
    /// Largest relative index per axis; index sets are clipped to it.
    pub max_level: Option<Vec<u32>>,
}

fn default_pilot() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// Mixed differences on prior draws.
    #[default]
    Prior,
    /// Spread of coupled SMC increment estimates over independent runs.
    Smc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZetaName {
    One,
    Qoi,
}

impl ZetaName {
    pub fn id(&self) -> &'static str {
        match self {
            ZetaName::One => "one",
            ZetaName::Qoi => "qoi",
        }
    }
}

/// Indices `start + j * direction` for `j = 0..points`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub name: String,
    pub start: Vec<u32>,
    pub direction: Vec<u32>,
    pub points: u32,
}

impl LineSpec {
    pub fn new(name: &str, start: Vec<u32>, direction: Vec<u32>, points: u32) -> Self {
        LineSpec {
            name: name.into(),
            start,
            direction,
            points,
        }
    }

    pub fn indices(&self) -> Vec<mismc::MultiIndex> {
        (0..self.points)
            .map(|j| {
                mismc::MultiIndex::new(self.start.iter().zip(&self.direction).map(|(s, d)| s + j * d).collect())
            })
            .collect()
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub mode: RateMode,
    /// Samples per batch (prior mode) or particles per run (SMC mode).
    pub samples: usize,
    /// Independent batches pooled per index (prior mode) or runs (SMC mode).
    pub batches: usize,
    pub zeta: Vec<ZetaName>,
    pub lines: Option<Vec<LineSpec>>,
}

impl Default for RatesSection {
    fn default() -> Self {
        RatesSection {
            mode: RateMode::Prior,
            samples: 1000,
            batches: 20,
            zeta: vec![ZetaName::One],
            lines: None,
        }
    }
}

impl RatesSection {
    /// Configured lines, or one line per axis plus the diagonal.
    pub fn lines_for(&self, kind: ModelKind) -> Vec<LineSpec> {
        if let Some(lines) = &self.lines {
            return lines.clone();
        }
        match kind {
            ModelKind::Toy1d => vec![LineSpec::new("level", vec![1], vec![1], 7)],
            _ => vec![
                LineSpec::new("axis1", vec![1, 0], vec![1, 0], 4),
                LineSpec::new("axis2", vec![0, 1], vec![0, 1], 4),
                LineSpec::new("diagonal", vec![1, 1], vec![1, 1], 4),
            ],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| BenchError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::from_toml(&text)?;
        // dataset paths are relative to the config file
        if let (Some(data), Some(dir)) = (&cfg.model.data, path.parent()) {
            if data.is_relative() {
                cfg.model.data = Some(dir.join(data));
            }
        }
        Ok(cfg)
    }

    pub fn repeats(&self) -> usize {
        self.complexity
            .as_ref()
            .and_then(|c| c.repeats)
            .unwrap_or_else(|| self.model.kind.default_repeats())
    }

    pub fn bias_rates(&self) -> Vec<f64> {
        self.complexity
            .as_ref()
            .and_then(|c| c.bias_rates.clone())
            .unwrap_or_else(|| self.model.kind.default_bias_rates())
    }

    pub fn max_level(&self) -> Vec<u32> {
        self.complexity
            .as_ref()
            .and_then(|c| c.max_level.clone())
            .unwrap_or_else(|| self.model.kind.default_max_level())
    }

    pub fn reference_method(&self) -> ReferenceMethod {
        self.reference
            .method
            .unwrap_or_else(|| self.model.kind.default_reference_method())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        let dim = self.model.kind.dim();
        if let Some(sd) = self.model.noise_sd {
            if !(sd > 0.0) {
                return bad(format!("model.noise_sd must be positive, got {sd}"));
            }
            if matches!(self.model.kind, ModelKind::Lgc | ModelKind::Lgp) {
                return bad("model.noise_sd does not apply to log-Gaussian models".into());
            }
        }
        if let Some(z) = self.model.z_min {
            if !(z > 0.0) {
                return bad(format!("model.z_min must be positive, got {z}"));
            }
        }
        if self.model.max_effective.is_some() && !matches!(self.model.kind, ModelKind::Lgc | ModelKind::Lgp) {
            return bad("model.max_effective applies only to log-Gaussian models".into());
        }
        let s = &self.smc;
        if s.stages == 0 {
            return bad("smc.stages must be at least 1".into());
        }
        if !(s.initial_scale > 0.0) {
            return bad(format!("smc.initial_scale must be positive, got {}", s.initial_scale));
        }
        if let Some(t) = s.ess_threshold {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("smc.ess_threshold must lie in (0, 1), got {t}"));
            }
        }
        let r = &self.reference;
        if r.nodes == 0 || r.runs == 0 || !(r.eps_factor > 0.0 && r.eps_factor <= 1.0) {
            return bad("reference.nodes and reference.runs must be positive and reference.eps_factor in (0, 1]".into());
        }
        if r.method == Some(ReferenceMethod::Quadrature) && matches!(self.model.kind, ModelKind::Lgc | ModelKind::Lgp) {
            return bad("quadrature references are not available for log-Gaussian models".into());
        }
        if let Some(c) = &self.complexity {
            if c.estimators.is_empty() {
                return bad("complexity.estimators is empty".into());
            }
            if c.eps.is_empty() || c.eps.iter().any(|e| !(*e > 0.0)) {
                return bad("complexity.eps must be a non-empty list of positive tolerances".into());
            }
            if c.eps.windows(2).any(|w| w[1] >= w[0]) {
                return bad("complexity.eps must be strictly decreasing".into());
            }
            if self.repeats() < 2 {
                return bad("complexity.repeats must be at least 2".into());
            }
            if c.pilot_samples < 2 {
                return bad("complexity.pilot_samples must be at least 2".into());
            }
            if c.cap == Some(0) {
                return bad("complexity.cap must be positive".into());
            }
            let rates = self.bias_rates();
            if rates.len() != dim || rates.iter().any(|s| !(*s > 0.0)) {
                return bad(format!("complexity.bias_rates needs {dim} positive entries"));
            }
            if self.max_level().len() != dim {
                return bad(format!("complexity.max_level needs {dim} entries"));
            }
        }
        if let Some(rt) = &self.rates {
            if rt.samples < 100 && rt.mode == RateMode::Prior {
                return bad(format!("rates.samples must be at least 100, got {}", rt.samples));
            }
            if rt.batches < 1 || (rt.mode == RateMode::Smc && rt.batches < 2) {
                return bad("rates.batches must be at least 1 (2 in smc mode)".into());
            }
            if rt.zeta.is_empty() {
                return bad("rates.zeta is empty".into());
            }
            for line in rt.lines_for(self.model.kind) {
                if line.start.len() != dim || line.direction.len() != dim {
                    return bad(format!("rates line {} needs {dim}-dimensional start and direction", line.name));
                }
                if line.direction.iter().all(|&d| d == 0) {
                    return bad(format!("rates line {} has a zero direction", line.name));
                }
                if line.points < 3 {
                    return bad(format!("rates line {} needs at least 3 points", line.name));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("[model]\nkind = \"toy1d\"\n").unwrap();
        assert_eq!(c.smc.stages, 10);
        assert_eq!(c.smc.mh_steps, 5);
        assert_eq!(c.repeats(), 100);
        assert_eq!(c.reference_method(), ReferenceMethod::Quadrature);
        assert!(c.complexity.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_toml("[model]\nkind = \"toy1d\"\ncolour = 3\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(ExperimentConfig::from_toml("speed = 1\n[model]\nkind = \"toy1d\"\n").is_err());
    }

    #[test]
    fn ladder_must_decrease() {
        let text = "[model]\nkind = \"toy1d\"\n[complexity]\nestimators = [\"SMC\"]\neps = [0.1, 0.2]\n";
        assert!(ExperimentConfig::from_toml(text).is_err());
        let text = "[model]\nkind = \"toy1d\"\n[complexity]\nestimators = [\"SMC\", \"MISMC-RE-TD\"]\neps = [0.2, 0.1]\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.complexity.unwrap().estimators[1], EstimatorKind::MismcReTd);
    }

    #[test]
    fn quadrature_is_refused_for_log_gaussian_models() {
        let text = "[model]\nkind = \"lgp\"\n[reference]\nmethod = \"quadrature\"\n";
        assert!(ExperimentConfig::from_toml(text).is_err());
    }

    #[test]
    fn estimator_labels_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(EstimatorKind::parse(k.label()), Some(k));
        }
    }

    #[test]
    fn line_indices() {
        let l = LineSpec::new("d", vec![1, 1], vec![1, 1], 3);
        let got: Vec<String> = l.indices().iter().map(|a| a.to_string()).collect();
        assert_eq!(got, ["(1,1)", "(2,2)", "(3,3)"]);
    }
}
