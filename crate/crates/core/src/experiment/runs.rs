use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, WeightMode};
use crate::abc::{run_adaptive_coreset, ABCConfig};
use crate::coreset::{materialize_coreset, run_predictive_coreset, stream_rng, CoresetWeights, RunReport};
use crate::error::Result;
use crate::eval::{
    compare_runs, default_grid, fit_logistic_map, fit_mixture_em, gibbs_mixture, kl_discretized,
    logit_l2_distance, ComparisonRecord, DensityEstimate, GibbsConfig, LogitFit,
};
use crate::measure::{Dataset, GroundMetric, Point};
use crate::partition::{run_partition_coreset, variation_of_information, MixtureSpec, Partition};
use crate::prior::{Hyperprior, LocationMixturePrior, LogisticCoefficientPrior};
use crate::urn::DPConfig;

const DATA_STREAM: u64 = 1 << 50;
const FIT_STREAM: u64 = DATA_STREAM + 1;
const REP_SEED_STREAM: u64 = 1 << 52;

/// Seed of repetition `rep`, split from the master seed by stream.
pub fn rep_seed(master_seed: u64, rep: usize) -> u64 {
    stream_rng(master_seed, REP_SEED_STREAM + rep as u64).next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    Density { variance: f64, means: Vec<f64>, kernel_sd: f64 },
    Logistic { beta: Vec<f64> },
    Partition { means: Vec<Vec<f64>>, labels: Vec<usize> },
}

/// Simulated dataset for an experiment kind plus the parameters that
/// generated it.
pub fn generate_synthetic<R: Rng + ?Sized>(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<(Dataset, Truth)> {
    let n = cfg.data_size;
    match kind {
        ExperimentKind::Density | ExperimentKind::Adaptive => {
            let d = &cfg.density;
            let prior = LocationMixturePrior {
                components: d.components,
                ig_shape: d.ig_shape,
                ig_scale: d.ig_scale,
                kernel_sd: d.kernel_sd,
            };
            let mut dyn_rng = RngAdapter(rng);
            let theta = prior.sample(&mut dyn_rng);
            let base = prior.base_measure(&theta)?;
            let points = (0..n).map(|_| base.draw(&mut dyn_rng)).collect();
            Ok((
                Dataset::new(kind.name(), points)?,
                Truth::Density {
                    variance: theta[0],
                    means: theta[1..].to_vec(),
                    kernel_sd: d.kernel_sd,
                },
            ))
        }
        ExperimentKind::Logistic => {
            let l = &cfg.logistic;
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            let beta: Vec<f64> = l.beta_mean.iter().map(|m| m + l.beta_sd * unit.sample(rng)).collect();
            let xsd = l.covariate_var.sqrt();
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                let x: Vec<f64> = (0..beta.len()).map(|_| xsd * unit.sample(rng)).collect();
                let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
                let y = u32::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()));
                points.push(Point::labeled(x, y));
            }
            Ok((Dataset::new(kind.name(), points)?, Truth::Logistic { beta }))
        }
        ExperimentKind::Partition => {
            let p = &cfg.partition;
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            let means: Vec<Vec<f64>> = (0..p.components)
                .map(|_| (0..p.dim).map(|_| p.mean_sd * unit.sample(rng)).collect())
                .collect();
            let mut points = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let c = rng.random_range(0..p.components);
                points.push(Point::new(
                    means[c].iter().map(|m| m + p.kernel_sd * unit.sample(rng)).collect(),
                ));
                labels.push(c);
            }
            Ok((Dataset::new(kind.name(), points)?, Truth::Partition { means, labels }))
        }
    }
}

/// Lets generic `Rng` callers reach APIs that take `&mut dyn RngCore`.
struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

pub fn density_prior(cfg: &ExperimentConfig) -> LocationMixturePrior {
    LocationMixturePrior {
        components: cfg.density.components,
        ig_shape: cfg.density.ig_shape,
        ig_scale: cfg.density.ig_scale,
        kernel_sd: cfg.density.kernel_sd,
    }
}

pub fn partition_spec(cfg: &ExperimentConfig) -> MixtureSpec {
    let p = &cfg.partition;
    MixtureSpec {
        alpha: p.mixing_alpha,
        atom_mean: vec![0.0; p.dim],
        atom_sd: p.mean_sd,
        kernel_sd: p.kernel_sd,
    }
}

pub fn metric_for(kind: ExperimentKind, cfg: &ExperimentConfig) -> GroundMetric {
    match kind {
        ExperimentKind::Density | ExperimentKind::Adaptive => GroundMetric::Euclidean { p: cfg.p },
        ExperimentKind::Logistic => GroundMetric::ProductClass { p: cfg.p },
        ExperimentKind::Partition => GroundMetric::LatentPair {
            p: cfg.p,
            lambda: cfg.partition.lambda,
        },
    }
}

/// Builds coreset weights for `data` with the engine matching `cfg.experiment`.
pub fn build_coreset(data: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<(CoresetWeights, RunReport)> {
    let run = cfg.coreset_config(seed);
    let metric = metric_for(cfg.experiment, cfg);
    match cfg.experiment {
        ExperimentKind::Density => run_predictive_coreset(data, cfg.alpha, &density_prior(cfg), &metric, &run),
        ExperimentKind::Logistic => {
            let prior = LogisticCoefficientPrior {
                mean: cfg.logistic.beta_mean.clone(),
                sd: cfg.logistic.beta_sd,
                covariates: data.points.iter().map(|p| p.coords.clone()).collect(),
            };
            run_predictive_coreset(data, cfg.alpha, &prior, &metric, &run)
        }
        ExperimentKind::Partition => {
            let spec = partition_spec(cfg);
            let dp = DPConfig::new(cfg.alpha, spec.joint_base())?;
            run_partition_coreset(data, &spec, &dp, &metric, &run)
        }
        ExperimentKind::Adaptive => {
            let abc = ABCConfig {
                epsilon: cfg.adaptive.epsilon,
                s: cfg.adaptive.s,
                proposal_scale: cfg.adaptive.proposal_scale.clone(),
                p: cfg.p,
                metric,
                ..ABCConfig::default()
            };
            run_adaptive_coreset(data, cfg.alpha, &density_prior(cfg), &metric, &run, &abc)
        }
    }
}

/// Curves or labels from one repetition, kept for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepDetail {
    Densities {
        full: DensityEstimate,
        coreset: DensityEstimate,
        unit: DensityEstimate,
    },
    Logits {
        full: LogitFit,
        coreset: LogitFit,
        unit: LogitFit,
    },
    Partitions {
        points: Vec<Point>,
        truth: Vec<usize>,
        full: Partition,
        coreset: Partition,
        unit: Partition,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    pub record: ComparisonRecord,
    pub detail: RepDetail,
    pub weights: CoresetWeights,
}

/// Fits the downstream model to the full data, the transformed coreset and
/// the unit coreset, and compares the latter two against the first.
pub fn evaluate_coreset(
    data: &Dataset,
    truth: Option<&Truth>,
    weights: &CoresetWeights,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(ComparisonRecord, RepDetail)> {
    let unit = data.subset(&weights.support_indices);
    let uniform = |n: usize| vec![1.0 / n as f64; n];
    let unit_masses = uniform(unit.len());
    let (coreset, core_masses) = match cfg.weight_mode {
        WeightMode::Transform => (materialize_coreset(data, weights, &data.mean())?, unit_masses.clone()),
        WeightMode::Masses => {
            let total: f64 = weights.values.iter().sum();
            (unit.clone(), weights.values.iter().map(|w| w / total).collect())
        }
    };
    // the coreset and unit fits share a stream, so unit weights give identical fits
    let fit_rng = |j: u64| stream_rng(seed, FIT_STREAM + j);

    match cfg.experiment {
        ExperimentKind::Density | ExperimentKind::Adaptive => {
            let d = &cfg.density;
            let fit = |pts: &Dataset, masses: &[f64], j: u64| {
                fit_mixture_em(&pts.points, masses, d.em_components, d.em_restarts, &mut fit_rng(j))
            };
            let xs: Vec<f64> = data.points.iter().map(|p| p.coords[0]).collect();
            let grid = default_grid(&xs, d.grid_points)?;
            let full = fit(data, &uniform(data.len()), 0)?.density(&grid)?;
            let core = fit(&coreset, &core_masses, 1)?.density(&grid)?;
            let unit_fit = fit(&unit, &unit_masses, 1)?.density(&grid)?;
            let record = compare_runs(&full, &core, &unit_fit, kl_discretized)?;
            Ok((
                record,
                RepDetail::Densities {
                    full,
                    coreset: core,
                    unit: unit_fit,
                },
            ))
        }
        ExperimentKind::Logistic => {
            let sd = cfg.logistic.fit_prior_sd;
            let full = fit_logistic_map(&data.points, &uniform(data.len()), sd)?;
            let core = fit_logistic_map(&coreset.points, &core_masses, sd)?;
            let unit_fit = fit_logistic_map(&unit.points, &unit_masses, sd)?;
            let record = compare_runs(&full, &core, &unit_fit, |a, b| logit_l2_distance(a, b, &data.points))?;
            Ok((
                record,
                RepDetail::Logits {
                    full,
                    coreset: core,
                    unit: unit_fit,
                },
            ))
        }
        ExperimentKind::Partition => {
            let p = &cfg.partition;
            let gibbs = GibbsConfig {
                k: p.components,
                sweeps: p.gibbs_sweeps,
                keep: p.gibbs_keep,
                kernel_sd: p.kernel_sd,
                ..GibbsConfig::default()
            };
            let full = gibbs_mixture(&data.points, &uniform(data.len()), &gibbs, &mut fit_rng(0))?.estimate;
            let core_est = gibbs_mixture(&coreset.points, &core_masses, &gibbs, &mut fit_rng(1))?.estimate;
            let unit_est = gibbs_mixture(&unit.points, &unit_masses, &gibbs, &mut fit_rng(1))?.estimate;
            // compared on the support items, the ones all three fits label
            let full_on_support = full.restrict(&weights.support_indices);
            let record = compare_runs(&full_on_support, &core_est, &unit_est, variation_of_information)?;
            let truth = match truth {
                Some(Truth::Partition { labels, .. }) => weights.support_indices.iter().map(|&i| labels[i]).collect(),
                _ => Vec::new(),
            };
            Ok((
                record,
                RepDetail::Partitions {
                    points: unit.points.clone(),
                    truth,
                    full: full_on_support,
                    coreset: core_est,
                    unit: unit_est,
                },
            ))
        }
    }
}

/// One full repetition: simulate, build the coreset, evaluate.
pub fn run_rep(cfg: &ExperimentConfig, rep: usize) -> Result<RepOutcome> {
    let seed = rep_seed(cfg.master_seed, rep);
    let (data, truth) = seeded_dataset(cfg, seed)?;
    let (weights, _) = build_coreset(&data, cfg, seed)?;
    let (record, detail) = evaluate_coreset(&data, Some(&truth), &weights, cfg, seed)?;
    Ok(RepOutcome {
        rep,
        seed,
        record,
        detail,
        weights,
    })
}

/// Dataset for a repetition, as `run_rep` would simulate it.
pub fn rep_dataset(cfg: &ExperimentConfig, rep: usize) -> Result<(Dataset, Truth)> {
    seeded_dataset(cfg, rep_seed(cfg.master_seed, rep))
}

/// Synthetic dataset of `cfg.experiment` drawn from the data stream of `seed`.
pub fn seeded_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<(Dataset, Truth)> {
    generate_synthetic(cfg.experiment, cfg, &mut stream_rng(seed, DATA_STREAM))
}
