//! Dirichlet-process posterior predictive sampling by the Pólya urn.
//!
//! Conditioning on `n` observations under `DP(F, alpha)`, draw `t` (0-based)
//! is a fresh sample from `F` with probability `alpha / (alpha + n + t)` and
//! otherwise a uniform pick among the `n` observations and the `t` earlier
//! draws.
//!
//! A [`UrnTrajectory`] records *which* slot every draw copied, never the
//! copied values. Resolving a trajectory against conditioning points, each
//! optionally scaled by a coreset weight, is then a deterministic function of
//! the weights ([`materialize`]); this is what lets the weight optimiser
//! reuse one random trajectory across all of its steps.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{argument, shape, Result};
use crate::measure::{empirical_from, Dataset, EmpiricalMeasure, Point};

/// The DP base measure `F_theta`, already specialised to a hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseMeasureSpec {
    /// Isotropic Gaussian mixture with shared component sd.
    GaussianMixture {
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        sd: f64,
    },
    /// Covariates resampled from a pool (the bootstrap for `x`), label drawn
    /// from the logistic model with the given coefficients. With `intercept`
    /// the first coefficient is the intercept.
    BootstrapLogistic {
        coefficients: Vec<f64>,
        intercept: bool,
        covariates: Vec<Vec<f64>>,
    },
    /// Joint base `k(dy | theta) x rho(dtheta)`: `theta ~ N(atom_mean,
    /// atom_sd^2 I)`, then `y ~ N(theta, kernel_sd^2 I)`. The draw carries
    /// `theta` as its latent.
    JointMixture {
        atom_mean: Vec<f64>,
        atom_sd: f64,
        kernel_sd: f64,
    },
}

impl BaseMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BaseMeasureSpec::GaussianMixture { means, weights, sd } => {
                if means.is_empty() || means.len() != weights.len() {
                    return argument("mixture needs one weight per mean");
                }
                if !(*sd > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
                    return argument("mixture sd must be positive and weights nonnegative");
                }
                if !(weights.iter().sum::<f64>() > 0.0) {
                    return argument("mixture weights must not all be zero");
                }
            }
            BaseMeasureSpec::BootstrapLogistic {
                coefficients,
                intercept,
                covariates,
            } => {
                let Some(first) = covariates.first() else {
                    return argument("bootstrap base needs a covariate pool");
                };
                let expect = first.len() + usize::from(*intercept);
                if coefficients.len() != expect {
                    return shape(format!(
                        "expected {expect} coefficients, got {}",
                        coefficients.len()
                    ));
                }
            }
            BaseMeasureSpec::JointMixture {
                atom_mean,
                atom_sd,
                kernel_sd,
            } => {
                if atom_mean.is_empty() || !(*atom_sd > 0.0) || !(*kernel_sd > 0.0) {
                    return argument("joint base needs a mean and positive scales");
                }
            }
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            BaseMeasureSpec::GaussianMixture { means, weights, sd } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut k = means.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        k = i;
                        break;
                    }
                    u -= w;
                }
                let noise = Normal::new(0.0, *sd).expect("validated sd");
                Point::new(means[k].iter().map(|m| m + noise.sample(rng)).collect())
            }
            BaseMeasureSpec::BootstrapLogistic {
                coefficients,
                intercept,
                covariates,
            } => {
                let x = covariates[rng.random_range(0..covariates.len())].clone();
                let eta = logit(coefficients, *intercept, &x);
                let prob = 1.0 / (1.0 + (-eta).exp());
                let label = u32::from(rng.random::<f64>() < prob);
                Point::labeled(x, label)
            }
            BaseMeasureSpec::JointMixture {
                atom_mean,
                atom_sd,
                kernel_sd,
            } => {
                let a = Normal::new(0.0, *atom_sd).expect("validated sd");
                let k = Normal::new(0.0, *kernel_sd).expect("validated sd");
                let theta: Vec<f64> = atom_mean.iter().map(|m| m + a.sample(rng)).collect();
                let y = theta.iter().map(|t| t + k.sample(rng)).collect();
                Point::with_latent(y, theta)
            }
        }
    }

    /// Replaces the covariate pool of a bootstrap base; other kinds are
    /// returned unchanged.
    pub fn with_covariate_pool(&self, points: &[Point]) -> BaseMeasureSpec {
        match self {
            BaseMeasureSpec::BootstrapLogistic {
                coefficients,
                intercept,
                ..
            } => BaseMeasureSpec::BootstrapLogistic {
                coefficients: coefficients.clone(),
                intercept: *intercept,
                covariates: points.iter().map(|p| p.coords.clone()).collect(),
            },
            other => other.clone(),
        }
    }
}

pub(crate) fn logit(coefficients: &[f64], intercept: bool, x: &[f64]) -> f64 {
    if intercept {
        coefficients[0] + coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    } else {
        coefficients.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPConfig {
    /// Concentration; 0 is the Bayesian-bootstrap limit (never draws fresh).
    pub alpha: f64,
    pub base: BaseMeasureSpec,
}

impl DPConfig {
    pub fn new(alpha: f64, base: BaseMeasureSpec) -> Result<Self> {
        if !(alpha >= 0.0) {
            return argument(format!("concentration must be >= 0, got {alpha}"));
        }
        base.validate()?;
        Ok(Self { alpha, base })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrnChoice {
    /// Copy of slot `i`: a conditioning atom when `i < cond_size`, otherwise
    /// earlier draw `i - cond_size`.
    Existing(usize),
    Fresh(Point),
}

/// Where a draw's value ultimately comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Root {
    Conditioning(usize),
    Fresh(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UrnTrajectory {
    pub cond_size: usize,
    pub choices: Vec<UrnChoice>,
}

impl UrnTrajectory {
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn fresh_count(&self) -> usize {
        self.choices
            .iter()
            .filter(|c| matches!(c, UrnChoice::Fresh(_)))
            .count()
    }

    /// Follows every draw's copy chain back to its origin.
    pub fn roots(&self) -> Vec<Root> {
        let mut roots: Vec<Root> = Vec::with_capacity(self.choices.len());
        for (t, c) in self.choices.iter().enumerate() {
            let r = match c {
                UrnChoice::Fresh(_) => Root::Fresh(t),
                UrnChoice::Existing(i) if *i < self.cond_size => Root::Conditioning(*i),
                UrnChoice::Existing(i) => roots[*i - self.cond_size],
            };
            roots.push(r);
        }
        roots
    }

    /// Applies `f` to every fresh payload (used to move base draws into
    /// centred coordinates).
    pub fn map_fresh(mut self, f: impl Fn(&Point) -> Point) -> Self {
        for c in &mut self.choices {
            if let UrnChoice::Fresh(p) = c {
                *p = f(p);
            }
        }
        self
    }

    /// Renumbers conditioning slots: slot `i` becomes `new_index[i]`. Used to
    /// replay a full-data trajectory on a permuted copy of the same data.
    pub fn remap_conditioning(&self, new_index: &[usize]) -> Result<Self> {
        if new_index.len() != self.cond_size {
            return shape("remap table must cover every conditioning slot");
        }
        let choices = self
            .choices
            .iter()
            .map(|c| match c {
                UrnChoice::Existing(i) if *i < self.cond_size => UrnChoice::Existing(new_index[*i]),
                other => other.clone(),
            })
            .collect();
        Ok(Self {
            cond_size: self.cond_size,
            choices,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// One urn trajectory of `steps` draws conditioned on `cond_size` slots.
/// Only the base measure is ever consulted, never conditioning values.
pub fn sample_trajectory<R: Rng + ?Sized>(
    cond_size: usize,
    config: &DPConfig,
    steps: usize,
    rng: &mut R,
) -> Result<UrnTrajectory> {
    if steps == 0 {
        return argument("trajectory needs at least one step");
    }
    if !(config.alpha >= 0.0) {
        return argument("concentration must be >= 0");
    }
    if config.alpha == 0.0 && cond_size == 0 {
        return argument("alpha = 0 needs at least one conditioning point");
    }
    let mut choices = Vec::with_capacity(steps);
    for t in 0..steps {
        let slots = cond_size + t;
        let p_fresh = if config.alpha == 0.0 {
            0.0
        } else if config.alpha.is_infinite() {
            1.0
        } else {
            config.alpha / (config.alpha + slots as f64)
        };
        if p_fresh > 0.0 && rng.random::<f64>() < p_fresh {
            choices.push(UrnChoice::Fresh(config.base.draw(rng)));
        } else {
            choices.push(UrnChoice::Existing(rng.random_range(0..slots)));
        }
    }
    Ok(UrnTrajectory { cond_size, choices })
}

/// Resolves a trajectory. Conditioning slot `i` becomes `w_i * cond[i]`
/// (coordinates only); fresh draws keep their payload and are never scaled.
pub fn materialize(
    traj: &UrnTrajectory,
    cond: &[Point],
    weights: Option<&[f64]>,
) -> Result<Vec<Point>> {
    if cond.len() != traj.cond_size {
        return shape(format!(
            "trajectory conditions on {} points, got {}",
            traj.cond_size,
            cond.len()
        ));
    }
    let scaled: Vec<Point> = match weights {
        Some(w) => {
            if w.len() != cond.len() {
                return shape("one weight per conditioning point");
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return argument("weights must be finite and nonnegative");
            }
            cond.iter().zip(w).map(|(p, w)| p.scaled(*w)).collect()
        }
        None => cond.to_vec(),
    };
    let roots = traj.roots();
    Ok(traj
        .choices
        .iter()
        .zip(roots)
        .map(|(c, r)| match (r, c) {
            (Root::Conditioning(i), _) => scaled[i].clone(),
            (Root::Fresh(_), UrnChoice::Fresh(p)) => p.clone(),
            (Root::Fresh(s), _) => match &traj.choices[s] {
                UrnChoice::Fresh(p) => p.clone(),
                UrnChoice::Existing(_) => unreachable!("fresh roots point at fresh draws"),
            },
        })
        .collect())
}

/// Empirical measure of `steps` predictive draws given all of `data`.
pub fn predictive_sample<R: Rng + ?Sized>(
    data: &Dataset,
    config: &DPConfig,
    steps: usize,
    rng: &mut R,
) -> Result<EmpiricalMeasure> {
    let traj = sample_trajectory(data.len(), config, steps, rng)?;
    empirical_from(materialize(&traj, &data.points, None)?)
}
