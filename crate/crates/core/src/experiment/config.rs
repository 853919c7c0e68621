use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coreset::{CoresetRunConfig, OptimizerConfig};
use crate::error::{Error, Result};
use crate::transport::SolverPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Density,
    Logistic,
    Partition,
    Adaptive,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Density,
        ExperimentKind::Logistic,
        ExperimentKind::Partition,
        ExperimentKind::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Density => "density",
            ExperimentKind::Logistic => "logistic",
            ExperimentKind::Partition => "partition",
            ExperimentKind::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// How downstream fits consume coreset weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Fit the transformed points `mean + w * (y - mean)` with equal masses.
    #[default]
    Transform,
    /// Fit the untouched support points with masses proportional to `w`.
    Masses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityParams {
    pub components: usize,
    pub ig_shape: f64,
    pub ig_scale: f64,
    pub kernel_sd: f64,
    pub em_components: usize,
    pub em_restarts: usize,
    pub grid_points: usize,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            components: 3,
            ig_shape: 1.0,
            ig_scale: 1.0,
            kernel_sd: 1.0,
            em_components: 3,
            em_restarts: 5,
            grid_points: 1600,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub beta_mean: Vec<f64>,
    pub beta_sd: f64,
    pub covariate_var: f64,
    /// Prior sd of the downstream MAP fit.
    pub fit_prior_sd: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            beta_mean: vec![0.5, 0.5],
            beta_sd: 1.0,
            covariate_var: 5.0,
            fit_prior_sd: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionParams {
    pub components: usize,
    pub dim: usize,
    /// Component means are drawn from `N(0, mean_sd^2 I)`.
    pub mean_sd: f64,
    pub kernel_sd: f64,
    /// Concentration of the prior clustering.
    pub mixing_alpha: f64,
    pub lambda: f64,
    pub gibbs_sweeps: usize,
    pub gibbs_keep: usize,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            components: 6,
            dim: 2,
            mean_sd: 5.0,
            kernel_sd: 1.0,
            mixing_alpha: 1.0,
            lambda: 1.0,
            gibbs_sweeps: 200,
            gibbs_keep: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveParams {
    pub epsilon: Option<f64>,
    pub s: usize,
    pub proposal_scale: Vec<f64>,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            epsilon: None,
            s: 16,
            proposal_scale: vec![0.3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Dataset size `N`.
    pub data_size: usize,
    /// Coreset size `n`.
    pub coreset_size: usize,
    pub m: usize,
    pub niter: usize,
    pub reps: usize,
    pub alpha: f64,
    pub p: f64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// `None` picks the per-kind default (on for density, off otherwise).
    pub augment_observed: Option<bool>,
    pub weight_mode: WeightMode,
    pub optimizer: OptimizerConfig,
    pub solver: SolverPolicy,
    pub density: DensityParams,
    pub logistic: LogisticParams,
    pub partition: PartitionParams,
    pub adaptive: AdaptiveParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk(ExperimentKind::Density)
    }
}

impl ExperimentConfig {
    /// Reduced sizes that run in minutes on one core.
    pub fn desk(kind: ExperimentKind) -> Self {
        let (data_size, coreset_size, m) = match kind {
            ExperimentKind::Density | ExperimentKind::Adaptive => (500, 50, 200),
            ExperimentKind::Logistic => (2000, 20, 100),
            ExperimentKind::Partition => (2000, 50, 200),
        };
        Self {
            experiment: kind,
            data_size,
            coreset_size,
            m,
            niter: 50,
            reps: 30,
            alpha: 1.0,
            p: 2.0,
            master_seed: 0,
            output_dir: PathBuf::from("predcore-out"),
            augment_observed: None,
            weight_mode: WeightMode::Transform,
            optimizer: OptimizerConfig::default(),
            solver: SolverPolicy::default(),
            density: DensityParams::default(),
            logistic: LogisticParams::default(),
            partition: PartitionParams::default(),
            adaptive: AdaptiveParams::default(),
        }
    }

    /// The published study sizes.
    pub fn paper(kind: ExperimentKind) -> Self {
        let (data_size, coreset_size, m) = match kind {
            ExperimentKind::Density | ExperimentKind::Adaptive => (1000, 50, 200),
            ExperimentKind::Logistic => (10_000, 20, 100),
            ExperimentKind::Partition => (10_000, 50, 500),
        };
        Self {
            data_size,
            coreset_size,
            m,
            niter: 100,
            reps: 100,
            ..Self::desk(kind)
        }
    }

    /// Switches to the published study sizes while keeping everything else.
    pub fn with_paper_scale(self) -> Self {
        let p = Self::paper(self.experiment);
        Self {
            data_size: p.data_size,
            coreset_size: p.coreset_size,
            m: p.m,
            niter: p.niter,
            reps: p.reps,
            ..self
        }
    }

    pub fn augment(&self) -> bool {
        self.augment_observed.unwrap_or(matches!(
            self.experiment,
            ExperimentKind::Density | ExperimentKind::Adaptive
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite and >= 0".into()));
        }
        let d = &self.density;
        if d.components == 0 || self.partition.components == 0 || self.partition.dim == 0 {
            return Err(Error::Config("mixtures need at least one component and dimension".into()));
        }
        if !(d.ig_shape > 0.0 && d.ig_scale > 0.0 && d.kernel_sd > 0.0) {
            return Err(Error::Config("density ig_shape, ig_scale and kernel_sd must be > 0".into()));
        }
        if !(self.partition.kernel_sd > 0.0 && self.partition.mean_sd >= 0.0 && self.logistic.beta_sd >= 0.0) {
            return Err(Error::Config("partition and logistic scales must be positive".into()));
        }
        if self.experiment == ExperimentKind::Logistic && self.logistic.beta_mean.is_empty() {
            return Err(Error::Config("logistic beta_mean is empty".into()));
        }
        self.coreset_config(0)
            .validate(self.data_size)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn coreset_config(&self, seed: u64) -> CoresetRunConfig {
        CoresetRunConfig {
            n: self.coreset_size,
            m: self.m,
            niter: self.niter,
            p: self.p,
            optimizer: self.optimizer.clone(),
            solver: self.solver,
            seed,
            augment_observed: self.augment(),
            share_trajectory: false,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        // Unset sizes fall back to the desk defaults of the chosen kind.
        let raw: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let kind = match raw.get("experiment").and_then(|v| v.as_str()) {
            Some(s) => s.parse()?,
            None => ExperimentKind::Density,
        };
        let mut merged = toml::Value::try_from(Self::desk(kind)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, raw);
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_desk_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"logistic\"\nreps = 3\n[logistic]\nfit_prior_sd = 2.0\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Logistic);
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.data_size, 2000);
        assert_eq!(cfg.logistic.fit_prior_sd, 2.0);
        assert!(!cfg.augment());
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("experiment = \"nope\""),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml_str("bogus_key = 1"),
            Err(Error::Config(_))
        ));
        let cfg = ExperimentConfig {
            reps: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn paper_scale_sizes() {
        let cfg = ExperimentConfig::desk(ExperimentKind::Partition).with_paper_scale();
        assert_eq!((cfg.data_size, cfg.coreset_size, cfg.m, cfg.reps), (10_000, 50, 500, 100));
    }
}
