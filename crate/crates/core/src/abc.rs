//! ABC Metropolis-Hastings over the hyperparameter.
//!
//! Instead of drawing `theta_t` independently from the prior, `theta` moves by
//! a symmetric random walk. A proposal is scored by how many of `S`
//! pseudo-datasets simulated from `F_theta` land within `epsilon` (in `W_p`)
//! of the observed support; the acceptance ratio replaces likelihoods by
//! these hit counts.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coreset::{
    run_with_theta, select_support, stream_rng, CoresetRunConfig, CoresetWeights, RunReport, ThetaSource,
};
use crate::error::{argument, Result};
use crate::measure::{empirical_from, Dataset, EmpiricalMeasure, GroundMetric, Point};
use crate::prior::Hyperprior;
use crate::transport::{solve, SolverPolicy};

const CHAIN_STREAM: u64 = 1 << 40;
const CALIBRATION_STREAM: u64 = CHAIN_STREAM + 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ABCConfig {
    /// Tolerance; `None` calibrates it from prior-predictive distances.
    pub epsilon: Option<f64>,
    pub s: usize,
    /// Size of each pseudo-dataset; 0 means "same as the observed support".
    pub pseudo_size: usize,
    /// Random-walk sd per coordinate; a single value is broadcast.
    pub proposal_scale: Vec<f64>,
    pub p: f64,
    pub metric: GroundMetric,
    pub calibration_draws: usize,
    pub calibration_quantile: f64,
    /// Starting state; `None` starts at the closest calibration draw.
    pub theta0: Option<Vec<f64>>,
}

impl Default for ABCConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            s: 16,
            pseudo_size: 0,
            proposal_scale: vec![0.5],
            p: 2.0,
            metric: GroundMetric::euclidean(),
            calibration_draws: 100,
            calibration_quantile: 0.1,
            theta0: None,
        }
    }
}

impl ABCConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return argument(format!("epsilon must be positive, got {e}"));
            }
        }
        if self.s == 0 {
            return argument("S must be at least 1");
        }
        if self.proposal_scale.is_empty() || self.proposal_scale.iter().any(|s| !(*s >= 0.0)) {
            return argument("proposal scales must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.calibration_quantile) || self.calibration_draws == 0 {
            return argument("calibration needs draws and a quantile in [0, 1]");
        }
        self.metric.validate()
    }

    fn scale(&self, k: usize) -> f64 {
        if self.proposal_scale.len() == 1 {
            self.proposal_scale[0]
        } else {
            self.proposal_scale[k]
        }
    }
}

/// Produces a pseudo-dataset for a hyperparameter.
pub type Simulator<'a> = dyn Fn(&[f64], &mut dyn RngCore) -> Result<Vec<Point>> + Sync + 'a;

/// `size` i.i.d. draws from the prior's `F_theta`.
pub fn base_measure_simulator(
    prior: &dyn Hyperprior,
    size: usize,
) -> impl Fn(&[f64], &mut dyn RngCore) -> Result<Vec<Point>> + Sync + '_ {
    move |theta, rng| {
        let base = prior.base_measure(theta)?;
        Ok((0..size).map(|_| base.draw(rng)).collect())
    }
}

/// `min(1, pi(prop) hits_prop / (pi(cur) hits_cur))` from log prior
/// densities; 0 whenever the numerator is 0, including the 0/0 case.
pub fn acceptance_ratio(log_prior_cur: f64, log_prior_prop: f64, hits_cur: usize, hits_prop: usize) -> f64 {
    if hits_prop == 0 || log_prior_prop == f64::NEG_INFINITY {
        return 0.0;
    }
    if hits_cur == 0 || log_prior_cur == f64::NEG_INFINITY {
        return 1.0;
    }
    let log_ratio = log_prior_prop - log_prior_cur + (hits_prop as f64).ln() - (hits_cur as f64).ln();
    if log_ratio.is_nan() {
        return 0.0;
    }
    log_ratio.exp().min(1.0)
}

fn discrepancy(observed: &EmpiricalMeasure, pseudo: Vec<Point>, cfg: &ABCConfig) -> Result<f64> {
    let z = empirical_from(pseudo)?;
    let c = solve(observed, &z, &cfg.metric, cfg.p, &SolverPolicy::default())?;
    Ok(c.cost().max(0.0).powf(1.0 / cfg.p))
}

/// Number of `S` simulated pseudo-datasets within `epsilon` of `observed`.
pub fn count_hits(
    theta: &[f64],
    observed: &EmpiricalMeasure,
    epsilon: f64,
    cfg: &ABCConfig,
    simulator: &Simulator<'_>,
    rng: &mut dyn RngCore,
) -> Result<usize> {
    let mut hits = 0;
    for _ in 0..cfg.s {
        let z = simulator(theta, rng)?;
        if epsilon == f64::INFINITY || discrepancy(observed, z, cfg)? <= epsilon {
            hits += 1;
        }
    }
    Ok(hits)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub rho: f64,
    pub hits_cur: usize,
    pub hits_prop: usize,
}

/// Simulates fresh hit counts at both states and returns the acceptance
/// probability.
#[allow(clippy::too_many_arguments)]
pub fn abc_acceptance(
    theta_cur: &[f64],
    theta_prop: &[f64],
    observed: &EmpiricalMeasure,
    epsilon: f64,
    cfg: &ABCConfig,
    prior: &dyn Hyperprior,
    simulator: &Simulator<'_>,
    rng: &mut dyn RngCore,
) -> Result<Acceptance> {
    if !(epsilon > 0.0) {
        return argument("epsilon must be positive");
    }
    let hits_prop = count_hits(theta_prop, observed, epsilon, cfg, simulator, rng)?;
    let hits_cur = count_hits(theta_cur, observed, epsilon, cfg, simulator, rng)?;
    let rho = acceptance_ratio(
        prior.log_density(theta_cur),
        prior.log_density(theta_prop),
        hits_cur,
        hits_prop,
    );
    Ok(Acceptance {
        rho,
        hits_cur,
        hits_prop,
    })
}

/// One MH step to an explicit proposal. Returns the next state and whether it
/// moved.
#[allow(clippy::too_many_arguments)]
pub fn mh_step(
    theta_cur: &[f64],
    theta_prop: &[f64],
    observed: &EmpiricalMeasure,
    epsilon: f64,
    cfg: &ABCConfig,
    prior: &dyn Hyperprior,
    simulator: &Simulator<'_>,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, Acceptance, bool)> {
    let acc = abc_acceptance(theta_cur, theta_prop, observed, epsilon, cfg, prior, simulator, rng)?;
    let u: f64 = rng.random();
    if u < acc.rho {
        Ok((theta_prop.to_vec(), acc, true))
    } else {
        Ok((theta_cur.to_vec(), acc, false))
    }
}

pub fn propose(theta: &[f64], cfg: &ABCConfig, rng: &mut dyn RngCore) -> Vec<f64> {
    theta
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let s = cfg.scale(k);
            if s == 0.0 {
                *t
            } else {
                let z: f64 = StandardNormal.sample(rng);
                t + s * z
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub epsilon: f64,
    pub steps: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// True when no proposal was ever accepted.
    pub stuck: bool,
    pub theta0: Vec<f64>,
    pub trace: Vec<Vec<f64>>,
    pub hits_trace: Vec<usize>,
}

/// Runs `steps` random-walk MH steps from `theta0`; `trace[t]` is the state
/// after step `t`.
pub fn run_chain(
    theta0: &[f64],
    steps: usize,
    observed: &EmpiricalMeasure,
    epsilon: f64,
    cfg: &ABCConfig,
    prior: &dyn Hyperprior,
    simulator: &Simulator<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<ChainDiagnostics> {
    cfg.validate()?;
    let mut theta = theta0.to_vec();
    let mut trace = Vec::with_capacity(steps);
    let mut hits_trace = Vec::with_capacity(steps);
    let mut accepted = 0;
    for _ in 0..steps {
        let prop = propose(&theta, cfg, rng);
        let (next, acc, moved) = mh_step(&theta, &prop, observed, epsilon, cfg, prior, simulator, rng)?;
        accepted += usize::from(moved);
        hits_trace.push(if moved { acc.hits_prop } else { acc.hits_cur });
        theta = next;
        trace.push(theta.clone());
    }
    Ok(ChainDiagnostics {
        epsilon,
        steps,
        accepted,
        acceptance_rate: if steps == 0 { 0.0 } else { accepted as f64 / steps as f64 },
        stuck: accepted == 0,
        theta0: theta0.to_vec(),
        trace,
        hits_trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub epsilon: f64,
    pub best_theta: Vec<f64>,
    pub distances: Vec<f64>,
}

/// `epsilon` as a quantile of `W_p` distances between `observed` and
/// pseudo-datasets from prior-predictive draws.
pub fn calibrate_epsilon(
    observed: &EmpiricalMeasure,
    cfg: &ABCConfig,
    prior: &dyn Hyperprior,
    simulator: &Simulator<'_>,
    rng: &mut dyn RngCore,
) -> Result<Calibration> {
    cfg.validate()?;
    let mut distances = Vec::with_capacity(cfg.calibration_draws);
    let mut best = (f64::INFINITY, Vec::new());
    for _ in 0..cfg.calibration_draws {
        let theta = prior.sample(rng);
        let d = discrepancy(observed, simulator(&theta, rng)?, cfg)?;
        if d < best.0 {
            best = (d, theta);
        }
        distances.push(d);
    }
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let pos = cfg.calibration_quantile * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let epsilon = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    Ok(Calibration {
        epsilon: epsilon.max(f64::MIN_POSITIVE),
        best_theta: best.1,
        distances,
    })
}

/// Coreset weights with `theta_t` taken from an ABC chain run on the
/// observed support. The chain and the calibration use their own random
/// streams, so with a zero proposal scale the result equals
/// [`crate::coreset::run_predictive_coreset`] under a point-mass prior at the
/// chain's start.
pub fn run_adaptive_coreset(
    data: &Dataset,
    alpha: f64,
    prior: &dyn Hyperprior,
    metric: &GroundMetric,
    cfg: &CoresetRunConfig,
    abc: &ABCConfig,
) -> Result<(CoresetWeights, RunReport)> {
    cfg.validate(data.len())?;
    abc.validate()?;
    let support = select_support(data.len(), cfg.n, &mut stream_rng(cfg.seed, 0))?;
    let observed = empirical_from(data.subset(&support).points)?;
    let size = if abc.pseudo_size == 0 { cfg.n } else { abc.pseudo_size };
    let simulator = base_measure_simulator(prior, size);

    let mut cal_rng = stream_rng(cfg.seed, CALIBRATION_STREAM);
    let calibration = if abc.epsilon.is_none() || abc.theta0.is_none() {
        Some(calibrate_epsilon(&observed, abc, prior, &simulator, &mut cal_rng)?)
    } else {
        None
    };
    let epsilon = abc
        .epsilon
        .or(calibration.as_ref().map(|c| c.epsilon))
        .expect("calibrated when missing");
    let theta0 = abc
        .theta0
        .clone()
        .or(calibration.map(|c| c.best_theta))
        .expect("calibrated when missing");

    let mut chain_rng = stream_rng(cfg.seed, CHAIN_STREAM);
    let chain = run_chain(&theta0, cfg.niter, &observed, epsilon, abc, prior, &simulator, &mut chain_rng)?;
    let (weights, mut report) = run_with_theta(
        data,
        alpha,
        ThetaSource::Fixed(prior, &chain.trace),
        metric,
        cfg,
    )?;
    report.chain = Some(chain);
    Ok((weights, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::GaussianLocationPrior;

    #[test]
    fn ratio_arithmetic() {
        assert_eq!(acceptance_ratio(0.0, 0.0, 2, 4), 1.0);
        assert_eq!(acceptance_ratio(0.0, 0.0, 4, 0), 0.0);
        assert_eq!(acceptance_ratio(0.0, 0.0, 0, 0), 0.0);
        assert_eq!(acceptance_ratio(0.0, 0.0, 0, 3), 1.0);
        assert!((acceptance_ratio(0.0, 0.0, 4, 2) - 0.5).abs() < 1e-15);
        assert!((acceptance_ratio(0.0, 2f64.ln(), 4, 1) - 0.5).abs() < 1e-12);
        assert_eq!(acceptance_ratio(f64::NEG_INFINITY, f64::NEG_INFINITY, 3, 3), 0.0);
    }

    #[test]
    fn infinite_tolerance_flat_prior_always_moves() {
        let mut prior = GaussianLocationPrior::new(vec![0.0], 1.0, 1.0).unwrap();
        prior.flat = true;
        let observed = empirical_from(vec![Point::new(vec![0.0]); 3]).unwrap();
        let cfg = ABCConfig {
            s: 2,
            ..Default::default()
        };
        let sim = base_measure_simulator(&prior, 3);
        let mut rng = stream_rng(1, 9);
        let chain = run_chain(&[0.0], 200, &observed, f64::INFINITY, &cfg, &prior, &sim, &mut rng).unwrap();
        assert_eq!(chain.acceptance_rate, 1.0);
    }

    #[test]
    fn calibration_quantile_is_ordered() {
        let prior = GaussianLocationPrior::new(vec![0.0], 3.0, 1.0).unwrap();
        let observed = empirical_from((0..10).map(|i| Point::new(vec![i as f64 * 0.1])).collect()).unwrap();
        let cfg = ABCConfig::default();
        let sim = base_measure_simulator(&prior, 10);
        let cal = calibrate_epsilon(&observed, &cfg, &prior, &sim, &mut stream_rng(2, 0)).unwrap();
        let below = cal.distances.iter().filter(|d| **d <= cal.epsilon).count();
        assert!((10..=11).contains(&below), "{below}");
    }
}
